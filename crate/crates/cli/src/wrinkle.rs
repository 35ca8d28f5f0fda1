//! Ring-based wrinkle quantification of a deformed shell.
//!
//! Nodes are first clustered into exact concentric rings by their
//! *reference* radius; within one ring the out-of-plane displacement is read
//! off along the angular order, and the number of sign alternations around
//! the closed loop counts the wrinkle lobes crossing that ring.  Counting
//! per exact ring keeps a purely radial profile (an axisymmetric cap, say)
//! from bleeding into the angular signal, which it would if rings at nearby
//! but distinct radii were pooled.  The rings are then grouped into
//! `ring_count` equally spaced reporting bands, each band carrying the
//! largest count among its rings.  A global amplitude is measured against
//! the least-squares plane through the deformed surface so that rigid tilts
//! do not register as deflection; rings whose angular variation sits below
//! one percent of that amplitude are treated as unwrinkled, which keeps
//! leftover solver noise on near-symmetric solutions from being counted.

use cosserat_shell::fem::{Mesh, ShellState};
use cosserat_shell::{Result, ShellError};
use nalgebra::{Matrix3, Vector3};

/// Wrinkle statistics of one state.
#[derive(Clone, Debug)]
pub struct WrinkleMetric {
    /// Center radius of each non-empty band, ascending.
    pub ring_radii: Vec<f64>,
    /// Sign alternations of the centered out-of-plane displacement around
    /// each band (even for a closed ring).
    pub sign_changes: Vec<usize>,
    /// Largest deviation of the out-of-plane displacement from its global
    /// least-squares plane fit.
    pub max_amplitude: f64,
}

impl WrinkleMetric {
    /// Largest ring count — the headline "how wrinkled is it" number.
    pub fn max_sign_changes(&self) -> usize {
        self.sign_changes.iter().copied().max().unwrap_or(0)
    }
}

/// One exact node ring: all nodes whose reference radii agree to 1e-9.
struct Ring {
    radius: f64,
    nodes: Vec<usize>,
}

/// Cluster nodes into exact rings, ascending by radius.
fn exact_rings(rho: &[f64]) -> Vec<Ring> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[a].partial_cmp(&rho[b]).unwrap());
    let mut rings: Vec<Ring> = Vec::new();
    for i in order {
        match rings.last_mut() {
            Some(ring) if rho[i] - ring.radius <= 1e-9 => ring.nodes.push(i),
            _ => rings.push(Ring {
                radius: rho[i],
                nodes: vec![i],
            }),
        }
    }
    rings
}

/// Median spacing between consecutive ring radii.
fn median_radial_spacing(rings: &[Ring]) -> f64 {
    let mut gaps: Vec<f64> = rings.windows(2).map(|w| w[1].radius - w[0].radius).collect();
    if gaps.is_empty() {
        return 1.0;
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps[gaps.len() / 2]
}

/// Least-squares plane `z ≈ a + b·x + c·y` over the reference coordinates;
/// returns the coefficients `(a, b, c)`.
fn plane_fit(mesh: &Mesh, z: &[f64]) -> (f64, f64, f64) {
    let mut a = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (p, &zi) in mesh.nodes().iter().zip(z) {
        let row = Vector3::new(1.0, p.x, p.y);
        a += row * row.transpose();
        rhs += zi * row;
    }
    match a.lu().solve(&rhs) {
        Some(c) => (c[0], c[1], c[2]),
        // degenerate geometry (all nodes collinear) cannot happen for a
        // valid mesh, but fall back to the mean plane rather than panic
        None => (z.iter().sum::<f64>() / z.len() as f64, 0.0, 0.0),
    }
}

/// Count cyclic sign alternations of `values`, ignoring entries below an
/// amplitude-relative threshold.
fn cyclic_sign_changes(values: &[f64]) -> usize {
    let amp = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = (1e-9 * amp).max(1e-12);
    let signs: Vec<i8> = values
        .iter()
        .filter(|v| v.abs() > tol)
        .map(|v| if *v > 0.0 { 1 } else { -1 })
        .collect();
    if signs.len() < 2 {
        return 0;
    }
    let mut count = 0;
    for k in 0..signs.len() {
        if signs[k] != signs[(k + 1) % signs.len()] {
            count += 1;
        }
    }
    count
}

/// Compute the wrinkle metric of `state` on `mesh` using `ring_count`
/// equally spaced concentric bands.  Bands that catch no nodes are skipped
/// with a warning on stderr.
pub fn wrinkle_metric(
    state: &ShellState,
    mesh: &Mesh,
    ring_count: usize,
) -> Result<WrinkleMetric> {
    if ring_count < 1 {
        return Err(ShellError::invalid(format!(
            "ring_count must be at least 1, got {ring_count}"
        )));
    }
    if state.num_nodes() != mesh.num_nodes() {
        return Err(ShellError::SizeMismatch {
            what: "state nodes",
            expected: mesh.num_nodes(),
            got: state.num_nodes(),
        });
    }
    let rho: Vec<f64> = mesh.nodes().iter().map(|p| p.norm()).collect();
    let z: Vec<f64> = state.m.iter().map(|m| m.z).collect();
    let rho_max = rho.iter().fold(0.0f64, |m, r| m.max(*r));
    let rings = exact_rings(&rho);
    let half = 0.5 * median_radial_spacing(&rings);

    let (a, b, c) = plane_fit(mesh, &z);
    let max_amplitude = mesh
        .nodes()
        .iter()
        .zip(&z)
        .map(|(p, &zi)| (zi - (a + b * p.x + c * p.y)).abs())
        .fold(0.0f64, f64::max);

    // Alternation count of each exact ring.  Rings whose angular variation
    // is far below the overall deflection — or below solver noise outright
    // (the absolute term; lengths are in units of the disk radius) — carry
    // no wrinkles and count zero.
    let noise_floor = (0.01 * max_amplitude).max(1e-5);
    let counts: Vec<usize> = rings
        .iter()
        .map(|ring| {
            let mut samples: Vec<(f64, f64)> = ring
                .nodes
                .iter()
                .map(|&i| {
                    let p = mesh.nodes()[i];
                    (p.y.atan2(p.x), z[i])
                })
                .collect();
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mean = samples.iter().map(|(_, z)| z).sum::<f64>() / samples.len() as f64;
            let centered: Vec<f64> = samples.iter().map(|(_, z)| z - mean).collect();
            let amp = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if amp < noise_floor {
                return 0;
            }
            cyclic_sign_changes(&centered)
        })
        .collect();

    let mut ring_radii = Vec::new();
    let mut sign_changes = Vec::new();
    for k in 1..=ring_count {
        let center = rho_max * k as f64 / ring_count as f64;
        let in_band: Vec<usize> = rings
            .iter()
            .enumerate()
            .filter(|(_, ring)| (ring.radius - center).abs() <= half)
            .map(|(j, _)| j)
            .collect();
        if in_band.is_empty() {
            eprintln!(
                "warning: wrinkle band {k} at radius {center:.4} contains no nodes; skipped"
            );
            continue;
        }
        ring_radii.push(center);
        sign_changes.push(in_band.iter().map(|&j| counts[j]).max().unwrap());
    }

    Ok(WrinkleMetric {
        ring_radii,
        sign_changes,
        max_amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cosserat_shell::fem::{initial_state, make_disk_mesh};
    use cosserat_shell::{Rotation, Vec3};

    fn state_with_z(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> ShellState {
        let m = mesh
            .nodes()
            .iter()
            .map(|p| Vec3::new(p.x, p.y, f(p.x, p.y)))
            .collect();
        ShellState::new(m, vec![Rotation::identity(); mesh.num_nodes()]).unwrap()
    }

    #[test]
    fn flat_state_has_no_wrinkles() {
        let mesh = make_disk_mesh(3).unwrap();
        let metric =
            wrinkle_metric(&state_with_z(&mesh, |_, _| 0.0), &mesh, 8).unwrap();
        assert!(metric.sign_changes.iter().all(|&c| c == 0));
        assert!(metric.max_amplitude < 1e-14);
        assert!(!metric.ring_radii.is_empty());
    }

    #[test]
    fn tilted_plane_has_zero_amplitude() {
        let mesh = make_disk_mesh(3).unwrap();
        let metric = wrinkle_metric(
            &state_with_z(&mesh, |x, y| 0.31 * x - 0.17 * y + 0.05),
            &mesh,
            8,
        )
        .unwrap();
        assert!(metric.max_amplitude < 1e-12, "{}", metric.max_amplitude);
    }

    #[test]
    fn angular_harmonic_counts_two_k_alternations() {
        let mesh = make_disk_mesh(3).unwrap();
        for k in [1usize, 2] {
            let metric = wrinkle_metric(
                &state_with_z(&mesh, |x, y| {
                    let theta = y.atan2(x);
                    1e-3 * (k as f64 * theta).cos()
                }),
                &mesh,
                8,
            )
            .unwrap();
            for (radius, changes) in metric.ring_radii.iter().zip(&metric.sign_changes) {
                assert_eq!(
                    *changes,
                    2 * k,
                    "ring at {radius} for harmonic {k}: got {changes}"
                );
            }
        }
    }

    #[test]
    fn axisymmetric_cap_counts_zero() {
        let mesh = make_disk_mesh(3).unwrap();
        let cap = initial_state(&mesh, 0.95).unwrap();
        let metric = wrinkle_metric(&cap, &mesh, 8).unwrap();
        assert!(metric.sign_changes.iter().all(|&c| c == 0), "{:?}", metric.sign_changes);
        // the cap itself is not a plane, so the amplitude is positive
        assert!(metric.max_amplitude > 1e-3);
    }

    #[test]
    fn ring_count_zero_is_rejected() {
        let mesh = make_disk_mesh(1).unwrap();
        let flat = state_with_z(&mesh, |_, _| 0.0);
        assert!(wrinkle_metric(&flat, &mesh, 0).is_err());
    }
}
