//! Quadrature and mesh-refinement properties of the assembled energy:
//! exactness on elementwise-constant densities, second-order convergence on
//! smooth fields, agreement between the two quadrature flavours, and a
//! lossless mesh file round trip.

use cosserat_shell::energy::{CurvatureMode, MaterialParams};
use cosserat_shell::fem::{
    assemble_energy, assemble_energy_projected_centroid, make_disk_mesh, Mesh, ShellState,
};
use cosserat_shell::so3::exp_so3;
use cosserat_shell::{Rotation, Vec3};

/// Affine midsurface with a constant rotation: the membrane density is the
/// same constant on every element, so any consistent quadrature integrates
/// it exactly and the total is (density) x (mesh area).
#[test]
fn constant_density_is_integrated_exactly() {
    let a = nalgebra::Matrix3x2::new(1.08, 0.07, -0.04, 0.96, 0.12, 0.05);
    let r = exp_so3(&Vec3::new(0.2, -0.4, 0.3));
    for variant in [
        MaterialParams::gamma_limit(1.4, 0.8, 0.9, 0.6).unwrap(),
        MaterialParams::engineering(1.4, 0.8, 0.9, 0.6).unwrap(),
        MaterialParams::normalized(1.4, 0.8, 0.9).unwrap(),
    ] {
        let density = cosserat_shell::energy::membrane_density(&a, &r, &variant);
        for level in [1u32, 3] {
            let mesh = make_disk_mesh(level).unwrap();
            let m = mesh
                .nodes()
                .iter()
                .map(|p| a * nalgebra::Vector2::new(p.x, p.y))
                .collect();
            let state = ShellState::new(m, vec![r; mesh.num_nodes()]).unwrap();
            let report = assemble_energy(&mesh, &state, &variant, None).unwrap();
            let exact = density * mesh.area();
            assert!(
                (report.total - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                "level {level}: {} vs {exact}",
                report.total
            );
            let centroid =
                assemble_energy_projected_centroid(&mesh, &state, &variant, None).unwrap();
            assert!((centroid - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }
    }
}

/// Smooth analytic configuration sampled on each mesh level.
fn smooth_state(mesh: &Mesh) -> ShellState {
    let m = mesh
        .nodes()
        .iter()
        .map(|p| {
            Vec3::new(
                p.x + 0.08 * (1.3 * p.y).sin(),
                p.y - 0.06 * (1.1 * p.x).cos(),
                0.12 * (1.7 * p.x).sin() * (1.4 * p.y).cos(),
            )
        })
        .collect();
    let r = mesh
        .nodes()
        .iter()
        .map(|p| {
            exp_so3(&Vec3::new(
                0.3 * (1.2 * p.y).sin(),
                -0.25 * (0.9 * p.x).cos(),
                0.2 * p.x * p.y,
            ))
        })
        .collect();
    ShellState::new(m, r).unwrap()
}

/// Interpolation plus quadrature error of the P1 discretisation is second
/// order in the mesh size, so halving h should shrink the energy error by
/// about 4x; we require at least 1.8x against a level-7 reference.
#[test]
fn energy_converges_under_refinement() {
    let params = MaterialParams::gamma_limit(1.2, 0.7, 0.5, 0.8)
        .unwrap()
        .with_curvature(CurvatureMode::General, 1.0, 0.6, 0.3)
        .unwrap();
    let reference = {
        let mesh = make_disk_mesh(7).unwrap();
        let state = smooth_state(&mesh);
        assemble_energy(&mesh, &state, &params, None).unwrap().total
    };
    let mut errors = Vec::new();
    for level in 2..=5 {
        let mesh = make_disk_mesh(level).unwrap();
        let state = smooth_state(&mesh);
        let total = assemble_energy(&mesh, &state, &params, None).unwrap().total;
        errors.push((total - reference).abs());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1].max(1e-300);
        assert!(
            ratio >= 1.8,
            "refinement barely helps: errors {errors:?}, ratio {ratio:.2}"
        );
    }
}

/// The vertex-lumped and projected-centroid quadratures are both consistent,
/// so their disagreement on a smooth state must shrink under refinement.
#[test]
fn quadrature_flavours_agree_in_the_limit() {
    let params = MaterialParams::engineering(1.5, 0.9, 0.4, 0.7).unwrap();
    let mut gaps = Vec::new();
    for level in 2..=4 {
        let mesh = make_disk_mesh(level).unwrap();
        let state = smooth_state(&mesh);
        let lumped = assemble_energy(&mesh, &state, &params, None).unwrap().total;
        let centroid = assemble_energy_projected_centroid(&mesh, &state, &params, None).unwrap();
        gaps.push((lumped - centroid).abs());
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps {gaps:?}");
    // Both rules are second order, so two refinements shrink the gap ~16x.
    assert!(gaps[2] < 0.25 * gaps[0], "gaps {gaps:?}");
}

#[test]
fn mesh_file_round_trip_is_lossless() {
    let mesh = make_disk_mesh(3).unwrap();
    let dir = std::env::temp_dir().join("cosserat-shell-mesh-roundtrip");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("disk3.mesh");
    mesh.save(&path).unwrap();
    let back = Mesh::load(&path).unwrap();
    assert_eq!(mesh.nodes().len(), back.nodes().len());
    for (a, b) in mesh.nodes().iter().zip(back.nodes()) {
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }
    assert_eq!(mesh.triangles(), back.triangles());
    assert_eq!(mesh.boundary_nodes(), back.boundary_nodes());
    std::fs::remove_file(&path).ok();
}
