//! Benchmarks for the small-matrix kernels, the pointwise energy densities,
//! and the mesh-level assembly loops at increasing refinement.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::hint::black_box;

use cosserat_shell::energy::{curvature_density, membrane_density, MaterialParams};
use cosserat_shell::fem::{
    assemble_energy, assemble_gradient, make_disk_mesh, Mesh, ShellState,
};
use cosserat_shell::so3::{exp_so3, log_so3, p_operator, polar_project};
use cosserat_shell::{Mat3, Mat3x2, Rotation, Vec3};

fn random_vec3(rng: &mut StdRng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

fn random_mat3(rng: &mut StdRng, scale: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-scale..scale))
}

fn random_rotation(rng: &mut StdRng) -> Rotation {
    exp_so3(&random_vec3(rng, 2.0))
}

fn random_state(mesh: &Mesh, seed: u64) -> ShellState {
    let mut rng = StdRng::seed_from_u64(seed);
    let m = mesh
        .nodes()
        .iter()
        .map(|q| Vec3::new(q.x, q.y, 0.0) + random_vec3(&mut rng, 0.05))
        .collect();
    let r = (0..mesh.num_nodes()).map(|_| random_rotation(&mut rng)).collect();
    ShellState::new(m, r).unwrap()
}

fn bench_so3(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(1);
    let axes: Vec<Vec3> = (0..256).map(|_| random_vec3(&mut rng, 2.0)).collect();
    let rots: Vec<Rotation> = axes.iter().map(exp_so3).collect();
    let mats: Vec<Mat3> = (0..256)
        .map(|i| rots[i].matrix() + random_mat3(&mut rng, 0.1))
        .collect();

    let mut g = c.benchmark_group("so3");
    g.bench_function("exp", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % axes.len();
            black_box(exp_so3(black_box(&axes[i])))
        })
    });
    g.bench_function("log", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % rots.len();
            black_box(log_so3(black_box(&rots[i])).unwrap())
        })
    });
    g.bench_function("polar_project", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % mats.len();
            black_box(polar_project(black_box(&mats[i])).unwrap())
        })
    });
    g.bench_function("p_operator", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % mats.len();
            black_box(p_operator(black_box(&mats[i]), 27191.0, 13595.5, 35043.0).unwrap())
        })
    });
    g.finish();
}

fn bench_densities(c: &mut Criterion) {
    let mut rng = StdRng::seed_from_u64(2);
    let p = MaterialParams::gamma_limit(2.7191e4, 4.4364e4, 2.7191e4, 1e-3).unwrap();
    let dms: Vec<Mat3x2> = (0..256)
        .map(|_| Mat3x2::from_fn(|r, c| if r == c { 1.0 } else { 0.0 } + rng.random_range(-0.1..0.1)))
        .collect();
    let rots: Vec<Rotation> = (0..256).map(|_| random_rotation(&mut rng)).collect();
    let drs: Vec<(Mat3, Mat3)> = (0..256)
        .map(|_| (random_mat3(&mut rng, 1.0), random_mat3(&mut rng, 1.0)))
        .collect();

    let mut g = c.benchmark_group("density");
    g.bench_function("membrane", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % dms.len();
            black_box(membrane_density(black_box(&dms[i]), &rots[i], &p))
        })
    });
    g.bench_function("curvature", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % drs.len();
            let (dx, dy) = &drs[i];
            black_box(curvature_density(black_box(dx), dy, &rots[i], &p))
        })
    });
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let p = MaterialParams::gamma_limit(2.7191e4, 4.4364e4, 2.7191e4, 1e-3).unwrap();
    let mut g = c.benchmark_group("assembly");
    g.sample_size(20);
    for level in [3u32, 4, 5] {
        let mesh = make_disk_mesh(level).unwrap();
        let state = random_state(&mesh, level as u64);
        g.bench_with_input(BenchmarkId::new("energy", level), &level, |b, _| {
            b.iter(|| black_box(assemble_energy(&mesh, &state, &p, None).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("gradient", level), &level, |b, _| {
            b.iter(|| black_box(assemble_gradient(&mesh, &state, &p, None, &[]).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_so3, bench_densities, bench_assembly);
criterion_main!(benches);
