//! Runtime verification suites.
//!
//! Each check measures the worst violation of one mathematical identity of
//! the model over a batch of seeded random samples and reports it against a
//! tolerance.  The suites back the CLI `verify` subcommand and double as
//! property tests; they are deterministic for a fixed seed.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::energy::{self, EnergyVariant, MaterialParams, ShearMean};
use crate::error::ShellError;
use crate::fem::{make_disk_mesh, BoundaryCondition, ShellState};
use crate::optim;
use crate::so3::{self, anti, axl, exp_so3, log_so3, polar_project, Mat3, Mat3x2, Rotation, Vec3};
use crate::stress;

/// Result of one verification suite.
#[derive(Clone, Debug)]
pub struct CheckReport {
    /// Identity being verified.
    pub name: &'static str,
    /// Number of random samples examined.
    pub samples: usize,
    /// Worst relative violation observed.
    pub max_err: f64,
    /// Acceptance threshold.
    pub tol: f64,
}

impl CheckReport {
    /// Whether the worst violation is within tolerance.
    pub fn passed(&self) -> bool {
        self.max_err.is_finite() && self.max_err <= self.tol
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<38} max err {:9.3e}  (tol {:7.1e}, {} samples)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.max_err,
            self.tol,
            self.samples
        )
    }
}

fn rand_vec(rng: &mut StdRng, s: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-s..s),
        rng.random_range(-s..s),
        rng.random_range(-s..s),
    )
}

fn rand_mat(rng: &mut StdRng, s: f64) -> Mat3 {
    Mat3::from_fn(|_, _| rng.random_range(-s..s))
}

fn rand_rotation(rng: &mut StdRng) -> Rotation {
    exp_so3(&rand_vec(rng, 1.5))
}

fn rand_dm(rng: &mut StdRng, spread: f64) -> Mat3x2 {
    let mut dm = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    for i in 0..3 {
        for j in 0..2 {
            dm[(i, j)] += rng.random_range(-spread..spread);
        }
    }
    dm
}

/// `axl(Anti(v)) = v`, `Anti(axl(A)) = A`, and `|A|² = 2|axl(A)|²`.
pub fn check_axl_anti(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let v = rand_vec(&mut rng, 3.0);
        let a = anti(&v);
        match axl(&a) {
            Ok(back) => max_err = max_err.max((back - v).norm() / v.norm().max(1.0)),
            Err(_) => max_err = f64::INFINITY,
        }
        let s = so3::skew_part(&rand_mat(&mut rng, 2.0));
        match axl(&s) {
            Ok(w) => {
                max_err = max_err.max((anti(&w) - s).norm() / s.norm().max(1.0));
                let lhs = s.norm_squared();
                let rhs = 2.0 * w.norm_squared();
                max_err = max_err.max((lhs - rhs).abs() / lhs.max(1.0));
            }
            Err(_) => max_err = f64::INFINITY,
        }
    }
    CheckReport {
        name: "axl/Anti inverse pair and norm",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// `X = dev sym X + skew X + (tr X/3)I` with mutually orthogonal parts.
pub fn check_decomposition(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let x = rand_mat(&mut rng, 2.0);
        let d = so3::decompose(&x);
        max_err = max_err.max((d.reassemble() - x).norm() / x.norm().max(1.0));
        let lhs = x.norm_squared();
        let rhs = d.dev_sym.norm_squared() + d.skew.norm_squared() + d.trace * d.trace / 3.0;
        max_err = max_err.max((lhs - rhs).abs() / lhs.max(1.0));
    }
    CheckReport {
        name: "orthogonal tensor decomposition",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// `|ℙX|²` splits over the decomposition, `ℙ` is self-adjoint, and
/// `ℙ(ℙX) = ℙ²X`.
pub fn check_p_operator(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let mu = rng.random_range(0.1..5.0);
        let mu_c = rng.random_range(0.1..5.0);
        let kappa = rng.random_range(0.1..5.0);
        let x = rand_mat(&mut rng, 2.0);
        let y = rand_mat(&mut rng, 2.0);
        let px = match so3::p_operator(&x, mu, mu_c, kappa) {
            Ok(p) => p,
            Err(_) => {
                max_err = f64::INFINITY;
                continue;
            }
        };
        let py = so3::p_operator(&y, mu, mu_c, kappa).unwrap_or_else(|_| Mat3::zeros());
        let d = so3::decompose(&x);
        let split = mu * d.dev_sym.norm_squared()
            + mu_c * d.skew.norm_squared()
            + kappa * d.trace * d.trace / 3.0;
        max_err = max_err.max((px.norm_squared() - split).abs() / split.max(1.0));
        let self_adjoint = (px.dot(&y) - x.dot(&py)).abs();
        max_err = max_err.max(self_adjoint / px.norm().max(1.0) / y.norm().max(1.0));
        let ppx = so3::p_operator(&px, mu, mu_c, kappa).unwrap_or_else(|_| Mat3::zeros());
        let p2x = so3::p_squared(&x, mu, mu_c, kappa).unwrap_or_else(|_| Mat3::zeros());
        max_err = max_err.max((ppx - p2x).norm() / p2x.norm().max(1.0));
    }
    CheckReport {
        name: "weight operator P identities",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// The wryness/dislocation-density maps invert each other and transform the
/// decomposition blocks as `dev sym α = −dev sym Γ`, `skew α = skew Γ`,
/// `tr α = 2 tr Γ`.
pub fn check_gamma_alpha(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let g = rand_mat(&mut rng, 2.0);
        let a = stress::gamma_to_alpha(&g);
        max_err = max_err.max((stress::alpha_to_gamma(&a) - g).norm() / g.norm().max(1.0));
        let dg = so3::decompose(&g);
        let da = so3::decompose(&a);
        max_err = max_err.max((da.dev_sym + dg.dev_sym).norm() / dg.dev_sym.norm().max(1.0));
        max_err = max_err.max((da.skew - dg.skew).norm() / dg.skew.norm().max(1.0));
        max_err = max_err.max((da.trace - 2.0 * dg.trace).abs() / dg.trace.abs().max(1.0));
    }
    CheckReport {
        name: "wryness/dislocation conversions",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// The stacked operator `Â = [Anti(d); dᵀ]` satisfies `ÂᵀÂ = |d|²·I₃`.
pub fn check_stacked_director_operator(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let d = rand_vec(&mut rng, 2.0);
        let a = anti(&d);
        let lhs = a.transpose() * a + d * d.transpose();
        let rhs = d.norm_squared() * Mat3::identity();
        max_err = max_err.max((lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    CheckReport {
        name: "stacked director operator normality",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// `(B ∘ C)ᵀ = C ∘ B`.
pub fn check_circ_transpose(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let b = rand_mat(&mut rng, 2.0);
        let c = rand_mat(&mut rng, 2.0);
        let lhs = stress::circ(&b, &c).transpose();
        let rhs = stress::circ(&c, &b);
        max_err = max_err.max((lhs - rhs).norm() / rhs.norm().max(1.0));
    }
    CheckReport {
        name: "circle product transpose rule",
        samples,
        max_err,
        tol: 1e-14,
    }
}

/// Coercivity of the stress operator: with
/// `L_R(ξ) = π₁₂(2 R ℙ²(Rᵀ(ξ|0)))` one has
/// `⟨L_R(ξ), ξ⟩ = 2|ℙ(Rᵀ(ξ|0))|² ≥ 2·min{μ, μ_c, κ}·|ξ|²`.
pub fn check_coercivity(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let moduli = [
        (1.0, 1.0, 1.0),
        (2.0, 0.5, 1.5),
        (0.3, 2.0, 0.7),
        (5.0, 0.1, 3.0),
        (0.2, 0.2, 4.0),
    ];
    let mut max_err = 0.0_f64;
    let per_set = samples / moduli.len();
    for &(mu, mu_c, kappa) in &moduli {
        for _ in 0..per_set {
            let r = rand_rotation(&mut rng);
            let xi = Mat3x2::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let arg = energy::dm_padded(&xi);
            let inner = r.matrix().transpose() * arg;
            let p2 = match so3::p_squared(&inner, mu, mu_c, kappa) {
                Ok(v) => v,
                Err(_) => {
                    max_err = f64::INFINITY;
                    continue;
                }
            };
            let l_full = 2.0 * r.matrix() * p2;
            let l = Mat3x2::from_columns(&[l_full.column(0), l_full.column(1)]);
            let lhs = l.dot(&xi);
            let p1 = so3::p_operator(&inner, mu, mu_c, kappa).unwrap_or_else(|_| Mat3::zeros());
            let identity_rhs = 2.0 * p1.norm_squared();
            max_err = max_err.max((lhs - identity_rhs).abs() / identity_rhs.max(1.0));
            let bound = 2.0 * mu.min(mu_c).min(kappa) * xi.norm_squared();
            if lhs < bound * (1.0 - 1e-12) {
                max_err = max_err.max((bound - lhs) / bound);
            }
        }
    }
    CheckReport {
        name: "stress operator coercivity",
        samples: per_set * moduli.len(),
        max_err,
        tol: 1e-12,
    }
}

/// All three membrane variants coincide when `μ_c = μ`, and for `μ_c ≠ μ`
/// the arithmetic and harmonic shear means differ by exactly
/// `(μ−μ_c)²/(2(μ+μ_c))` per unit squared transverse shear.
pub fn check_shear_mean_equivalence(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let mu = rng.random_range(0.3..4.0);
        let lambda = rng.random_range(-0.4 * mu..3.0);
        let dm = rand_dm(&mut rng, 0.7);
        let r = rand_rotation(&mut rng);
        // equal moduli: all variants agree
        let gl = MaterialParams::gamma_limit(mu, lambda, mu, 1.0).unwrap();
        let en = MaterialParams::engineering(mu, lambda, mu, 1.0).unwrap();
        let np = MaterialParams::new(mu, lambda, mu, 1.0, ShearMean::Arithmetic, EnergyVariant::NormalizedP)
            .unwrap();
        let w_gl = energy::membrane_density(&dm, &r, &gl);
        let w_en = energy::membrane_density(&dm, &r, &en);
        let w_np = energy::membrane_density(&dm, &r, &np);
        max_err = max_err.max((w_gl - w_en).abs() / w_en.abs().max(1.0));
        max_err = max_err.max((w_np - w_en).abs() / w_en.abs().max(1.0));
        // distinct moduli: predicted arithmetic − harmonic gap
        let mu_c = 0.5 * mu;
        let gl2 = MaterialParams::gamma_limit(mu, lambda, mu_c, 1.0).unwrap();
        let en2 = MaterialParams::engineering(mu, lambda, mu_c, 1.0).unwrap();
        let shear_sq = {
            let parts = energy::membrane_parts(&dm, &r, &en2);
            parts.transverse_shear / en2.shear_coefficient()
        };
        let gap = (mu - mu_c) * (mu - mu_c) / (2.0 * (mu + mu_c)) * shear_sq;
        let observed =
            energy::membrane_density(&dm, &r, &en2) - energy::membrane_density(&dm, &r, &gl2);
        max_err = max_err.max((observed - gap).abs() / gap.abs().max(1.0));
    }
    CheckReport {
        name: "shear mean equivalence and gap",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// With `λ = 0` and `μ_c = μ` the rotation residual collapses to
/// `ΔR − (Ω_x∂ₓR + Ω_y∂ᵧR) + μ·skew((Dm|0)Rᵀ)·R`.
pub fn check_rotation_residual_special_case(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let mu = rng.random_range(0.3..3.0);
        let p = match MaterialParams::normalized(mu, 0.0, mu) {
            Ok(p) => p,
            Err(_) => {
                max_err = f64::INFINITY;
                continue;
            }
        };
        let r = rand_rotation(&mut rng);
        let dxr = r.matrix() * anti(&rand_vec(&mut rng, 1.0));
        let dyr = r.matrix() * anti(&rand_vec(&mut rng, 1.0));
        let lap_r = rand_mat(&mut rng, 1.0);
        let dm = rand_dm(&mut rng, 0.6);
        let full = match stress::el_residual_r_pointwise(&dm, &r, &dxr, &dyr, &lap_r, &p) {
            Ok(v) => v,
            Err(_) => {
                max_err = f64::INFINITY;
                continue;
            }
        };
        let conn = match stress::connection(&r, &dxr, &dyr) {
            Ok(c) => c,
            Err(_) => {
                max_err = f64::INFINITY;
                continue;
            }
        };
        let dm_pad = energy::dm_padded(&dm);
        let special = lap_r - (conn.omega_x * dxr + conn.omega_y * dyr)
            + mu * so3::skew_part(&(dm_pad * r.matrix().transpose())) * r.matrix();
        max_err = max_err.max((full - special).norm() / special.norm().max(1.0));
    }
    CheckReport {
        name: "rotation residual special case",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// Membrane and curvature densities, and both stress tensors, are invariant
/// (respectively equivariant) under a global rotation of the deformed state.
pub fn check_frame_indifference(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    let params = [
        MaterialParams::gamma_limit(2.0, 1.0, 0.5, 0.8).unwrap(),
        MaterialParams::normalized(1.3, 0.4, 0.9).unwrap(),
    ];
    for _ in 0..samples {
        let q = rand_rotation(&mut rng);
        let r = rand_rotation(&mut rng);
        let dm = rand_dm(&mut rng, 0.7);
        let w = rand_vec(&mut rng, 1.0);
        let wy = rand_vec(&mut rng, 1.0);
        let dxr = anti(&w) * r.matrix();
        let dyr = anti(&wy) * r.matrix();
        let qr = q * r;
        let qdm = q.matrix() * dm;
        let qdxr = q.matrix() * dxr;
        let qdyr = q.matrix() * dyr;
        for p in &params {
            let a = energy::membrane_density(&dm, &r, p);
            let b = energy::membrane_density(&qdm, &qr, p);
            max_err = max_err.max((a - b).abs() / a.abs().max(1.0));
            let ca = energy::curvature_density(&dxr, &dyr, &r, p);
            let cb = energy::curvature_density(&qdxr, &qdyr, &qr, p);
            max_err = max_err.max((ca - cb).abs() / ca.abs().max(1.0));
            match (stress::stress(&dm, &r, p), stress::stress(&qdm, &qr, p)) {
                (Ok(sa), Ok(sb)) => {
                    max_err = max_err.max((sb.t - sa.t).norm() / sa.t.norm().max(1.0));
                    max_err =
                        max_err.max((sb.s - q.matrix() * sa.s).norm() / sa.s.norm().max(1.0));
                }
                _ => max_err = f64::INFINITY,
            }
        }
    }
    CheckReport {
        name: "frame indifference",
        samples,
        max_err,
        tol: 1e-11,
    }
}

/// `log(exp(v)) = v` away from the cut locus, and `exp` lands on SO(3).
pub fn check_exp_log(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let v = {
            let dir = rand_vec(&mut rng, 1.0);
            let n = dir.norm().max(1e-12);
            dir / n * rng.random_range(0.0..0.98 * std::f64::consts::PI)
        };
        let r = exp_so3(&v);
        max_err = max_err.max(r.orthogonality_deviation());
        match log_so3(&r) {
            Ok(back) => max_err = max_err.max((back - v).norm() / v.norm().max(1.0)),
            Err(_) => max_err = f64::INFINITY,
        }
    }
    CheckReport {
        name: "exponential/logarithm round trip",
        samples,
        max_err,
        tol: 1e-10,
    }
}

/// The polar projection recovers `R` from `R·SPD` and is idempotent.
pub fn check_polar(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let r = rand_rotation(&mut rng);
        let a = rand_mat(&mut rng, 0.4);
        let spd = Mat3::identity() + a * a.transpose();
        match polar_project(&(r.matrix() * spd)) {
            Ok(q) => {
                max_err = max_err.max((q.matrix() - r.matrix()).norm());
                match polar_project(q.matrix()) {
                    Ok(q2) => max_err = max_err.max((q2.matrix() - q.matrix()).norm()),
                    Err(_) => max_err = f64::INFINITY,
                }
            }
            Err(_) => max_err = f64::INFINITY,
        }
    }
    CheckReport {
        name: "polar projection",
        samples,
        max_err,
        tol: 1e-9,
    }
}

/// The assembled analytic gradient matches central finite differences of the
/// assembled energy on a random state (level-1 disk).
pub fn check_discrete_gradient(seed: u64) -> CheckReport {
    let tol = 1e-5;
    let fail = |_e: ShellError| CheckReport {
        name: "assembled gradient vs finite differences",
        samples: 0,
        max_err: f64::INFINITY,
        tol,
    };
    let mesh = match make_disk_mesh(1) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let mut m = Vec::with_capacity(mesh.num_nodes());
    let mut r = Vec::with_capacity(mesh.num_nodes());
    for p in mesh.nodes() {
        m.push(Vec3::new(p.x, p.y, 0.0) + rand_vec(&mut rng, 0.2));
        r.push(exp_so3(&rand_vec(&mut rng, 0.5)));
    }
    let state = match ShellState::new(m, r) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let p = match MaterialParams::gamma_limit(1.4, 0.6, 0.8, 0.5) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let bc = BoundaryCondition::RadialCompression(0.9);
    let samples = 6 * mesh.num_nodes();
    match optim::check_gradient(&mesh, &state, &p, None, &bc, 1e-5) {
        Ok(err) => CheckReport {
            name: "assembled gradient vs finite differences",
            samples,
            max_err: err,
            tol,
        },
        Err(e) => fail(e),
    }
}

/// `⟨d, residual⟩ = ⟨d, Δd⟩ + |Dd|²` for unit directors.
pub fn check_director_residual(samples: usize, seed: u64) -> CheckReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_err = 0.0_f64;
    for _ in 0..samples {
        let d = rand_vec(&mut rng, 1.0).normalize();
        let dm = rand_dm(&mut rng, 0.7);
        let lap_d = rand_vec(&mut rng, 2.0);
        let dd = Mat3x2::from_fn(|_, _| rng.random_range(-1.0..1.0));
        match stress::director_el_residual(&dm, &d, &lap_d, &dd) {
            Ok(res) => {
                let lhs = d.dot(&res);
                let rhs = d.dot(&lap_d) + dd.norm_squared();
                max_err = max_err.max((lhs - rhs).abs() / rhs.abs().max(1.0));
            }
            Err(_) => max_err = f64::INFINITY,
        }
    }
    CheckReport {
        name: "director residual projection",
        samples,
        max_err,
        tol: 1e-12,
    }
}

/// Run every suite with its default sample count and a fixed seed.
pub fn run_all() -> Vec<CheckReport> {
    vec![
        check_axl_anti(1000, 101),
        check_decomposition(1000, 102),
        check_p_operator(1000, 103),
        check_gamma_alpha(1000, 104),
        check_stacked_director_operator(1000, 105),
        check_circ_transpose(1000, 106),
        check_coercivity(10_000, 107),
        check_shear_mean_equivalence(1000, 108),
        check_rotation_residual_special_case(500, 109),
        check_frame_indifference(500, 110),
        check_exp_log(2000, 111),
        check_polar(1000, 112),
        check_discrete_gradient(113),
        check_director_residual(1000, 114),
    ]
}
