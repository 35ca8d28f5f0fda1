//! Stress tensors and Euler–Lagrange residuals.
//!
//! The membrane stress comes from the normalized quadratic form
//! `W(X) = |ℙ(X)|²` with `X = Rᵀ(Dm|0) − diag(1,1,0)`: the material stress is
//! `T = 2ℙ²(X)` and the spatial (first Piola–Kirchhoff type) stress is the
//! first two columns of `R·T`.  With the spherical weight `kappa_norm` this
//! is also the exact `Dm`-derivative of the engineering membrane density, so
//! the pointwise stress and the assembled gradient are variationally
//! consistent.
//!
//! The rotation field satisfies a second-order equation expressed through the
//! connection matrices `Ω_i = −skew(R ∂ᵢRᵀ)` and the product
//! `B ∘ C = ½ B Cᵀ`; see [`el_residual_r_pointwise`].  Weak-form residuals on
//! a mesh are the components of the assembled energy gradient.

use crate::energy::{self, MaterialParams};
use crate::error::{Result, ShellError};
use crate::fem::{self, Gradient, Mesh, ShellState};
use crate::so3::{self, Mat3, Mat3x2, Rotation, Vec3};

/// Tolerance for the tangency test `‖sym(Rᵀ∂ᵢR)‖ ≤ TANGENCY_TOL·max(1,‖∂ᵢR‖)`
/// applied to discrete rotation gradients.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Material and spatial membrane stress at a point.
#[derive(Clone, Copy, Debug)]
pub struct StressPair {
    /// Material (Biot-type) stress `T = 2ℙ²(Rᵀ(Dm|0) − diag(1,1,0))`.
    pub t: Mat3,
    /// Spatial stress `S`: the first two columns of `R·T`.
    pub s: Mat3x2,
}

/// The product `B ∘ C = ½ B Cᵀ`, satisfying `(B ∘ C)ᵀ = C ∘ B`.
pub fn circ(b: &Mat3, c: &Mat3) -> Mat3 {
    0.5 * b * c.transpose()
}

/// Membrane stress of the normalized quadratic form, using the moduli
/// `(μ, μ_c, κ_norm)` from `p`.  Because the normalized form with `κ_norm`
/// coincides with the engineering membrane density, `s` is simultaneously the
/// `Dm`-derivative of that density.
///
/// Properties (tested): the third column of the strain is zero, `s = 0`
/// exactly when the strain vanishes, and `μ_c = 0` makes `t` symmetric.
pub fn stress(dm: &Mat3x2, r: &Rotation, p: &MaterialParams) -> Result<StressPair> {
    p.validate()?;
    let x = energy::membrane_strain(dm, r.matrix());
    let t = 2.0 * so3::p2_apply(&x, p.mu, p.mu_c, p.kappa_norm());
    let rt = r.matrix() * t;
    let s = Mat3x2::from_columns(&[rt.column(0), rt.column(1)]);
    Ok(StressPair { t, s })
}

fn tangency_check(r: &Rotation, dr: &Mat3, which: &str) -> Result<Mat3> {
    let a = r.matrix().transpose() * dr;
    let deviation = so3::sym_part(&a).norm();
    let tol = TANGENCY_TOL * dr.norm().max(1.0);
    if deviation > tol {
        return Err(ShellError::NotTangent {
            deviation,
            tol,
            which: which.to_string(),
        });
    }
    Ok(a)
}

/// Connection matrices of a rotation field: `Ω_i = −skew(R ∂ᵢRᵀ)`.
#[derive(Clone, Copy, Debug)]
pub struct Connection {
    pub omega_x: Mat3,
    pub omega_y: Mat3,
}

/// Build the connection from a rotation and its partial derivatives,
/// verifying that each derivative is tangent (`Rᵀ∂ᵢR` skew within
/// [`TANGENCY_TOL`]).
pub fn connection(r: &Rotation, dxr: &Mat3, dyr: &Mat3) -> Result<Connection> {
    tangency_check(r, dxr, "∂ₓR")?;
    tangency_check(r, dyr, "∂ᵧR")?;
    let omega = |dr: &Mat3| -so3::skew_part(&(r.matrix() * dr.transpose()));
    Ok(Connection {
        omega_x: omega(dxr),
        omega_y: omega(dyr),
    })
}

/// Wryness (second Cosserat strain) `Γ = (axl(Rᵀ∂ₓR) | axl(Rᵀ∂ᵧR))`.
#[derive(Clone, Copy, Debug)]
pub struct Wryness {
    pub gamma_hat: Mat3x2,
}

/// Compute the wryness, enforcing the same tangency condition as
/// [`connection`].
pub fn wryness(r: &Rotation, dxr: &Mat3, dyr: &Mat3) -> Result<Wryness> {
    let ax = tangency_check(r, dxr, "∂ₓR")?;
    let ay = tangency_check(r, dyr, "∂ᵧR")?;
    let g1 = so3::axl_unchecked(&so3::skew_part(&ax));
    let g2 = so3::axl_unchecked(&so3::skew_part(&ay));
    Ok(Wryness {
        gamma_hat: Mat3x2::new(g1.x, g2.x, g1.y, g2.y, g1.z, g2.z),
    })
}

/// Convert wryness to the dislocation-density form: `α = −Γᵀ + tr(Γ)·I`.
pub fn gamma_to_alpha(gamma: &Mat3) -> Mat3 {
    -gamma.transpose() + gamma.trace() * Mat3::identity()
}

/// Inverse of [`gamma_to_alpha`]: `Γ = −αᵀ + ½tr(α)·I`.
pub fn alpha_to_gamma(alpha: &Mat3) -> Mat3 {
    -alpha.transpose() + 0.5 * alpha.trace() * Mat3::identity()
}

/// Pointwise strong-form residual of the rotation equation:
///
/// `ΔR − (Ω_x ∂ₓR + Ω_y ∂ᵧR) − skew(Dm ∘ S)·R`,
///
/// where `S` is the spatial membrane stress padded to 3×3 and
/// `Dm ∘ S = ½(Dm|0)(S|0)ᵀ`.  Vanishes at smooth equilibria of the shell
/// energy.  The rotation derivatives must be tangent.
pub fn el_residual_r_pointwise(
    dm: &Mat3x2,
    r: &Rotation,
    dxr: &Mat3,
    dyr: &Mat3,
    lap_r: &Mat3,
    p: &MaterialParams,
) -> Result<Mat3> {
    let conn = connection(r, dxr, dyr)?;
    let pair = stress(dm, r, p)?;
    let dm_pad = energy::dm_padded(dm);
    let s_pad = energy::dm_padded(&pair.s);
    let coupling = so3::skew_part(&circ(&dm_pad, &s_pad));
    Ok(lap_r - (conn.omega_x * dxr + conn.omega_y * dyr) - coupling * r.matrix())
}

/// Weak-form residual of the midsurface (force balance) equation: one vector
/// per node, zero at discrete equilibrium.  `fixed` lists position-constrained
/// nodes whose entries are masked to zero, matching the constrained
/// optimization problem.
pub fn el_residual_m_weak(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    fixed: &[usize],
) -> Result<Vec<Vec3>> {
    let g = fem::assemble_gradient(mesh, state, p, f, fixed)?;
    Ok(g.m)
}

/// Weak-form residual of the rotation (moment balance) equation: one tangent
/// coefficient per node, zero at discrete equilibrium.  Rotations carry no
/// Dirichlet data, so no mask applies.
pub fn el_residual_r_weak(mesh: &Mesh, state: &ShellState, p: &MaterialParams) -> Result<Vec<Vec3>> {
    let g = fem::assemble_gradient(mesh, state, p, None, &[])?;
    Ok(g.r)
}

/// Both weak residuals in one assembly pass.
pub fn el_residual_weak(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    fixed: &[usize],
) -> Result<Gradient> {
    fem::assemble_gradient(mesh, state, p, f, fixed)
}

fn check_unit_director(d: &Vec3) -> Result<()> {
    if (d.norm() - 1.0).abs() >= 1e-8 {
        return Err(ShellError::invalid(format!(
            "director must be a unit vector, got |d| = {:.12}",
            d.norm()
        )));
    }
    Ok(())
}

/// Pointwise strong-form residual of the unit-director equation:
///
/// `Δd + d × (Dm Dmᵀ d) + |Dd|²·d`.
///
/// The elastic coupling enters through the cross product, which removes the
/// component of `Dm Dmᵀ d` along `d`; the `|Dd|²` term is the Lagrange-
/// multiplier contribution of the unit constraint, so `⟨d, residual⟩ =
/// ⟨d, Δd⟩ + |Dd|²` — which vanishes for exactly unit-length fields.
pub fn director_el_residual(dm: &Mat3x2, d: &Vec3, lap_d: &Vec3, dd: &Mat3x2) -> Result<Vec3> {
    check_unit_director(d)?;
    Ok(lap_d + d.cross(&(dm * (dm.transpose() * d))) + dd.norm_squared() * d)
}

/// Membrane force stress of the director model:
///
/// `S = π₁₂((Dm|n)·2((Dm|n)ᵀ(Dm|n) − I₃)) + d ⊗ (Dmᵀ d)`,
///
/// with `n = ∂ₓm × ∂ᵧm / |∂ₓm × ∂ᵧm|`.  Errors when the surface element is
/// degenerate (`|∂ₓm × ∂ᵧm| < 1e-12`) or `d` is not a unit vector.
pub fn director_force_stress(dm: &Mat3x2, d: &Vec3) -> Result<Mat3x2> {
    check_unit_director(d)?;
    let ex: Vec3 = dm.column(0).into();
    let ey: Vec3 = dm.column(1).into();
    let n_raw = ex.cross(&ey);
    if n_raw.norm() < 1e-12 {
        return Err(ShellError::invalid(format!(
            "degenerate surface element: |∂ₓm × ∂ᵧm| = {:.3e}",
            n_raw.norm()
        )));
    }
    let n = n_raw / n_raw.norm();
    let frame = Mat3::from_columns(&[ex, ey, n]);
    let quartic = frame * (2.0 * (frame.transpose() * frame - Mat3::identity()));
    let shear = d * (dm.transpose() * d).transpose();
    Ok(Mat3x2::from_columns(&[quartic.column(0), quartic.column(1)]) + shear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{anti, exp_so3, Rotation};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_rotation(rng: &mut StdRng) -> Rotation {
        exp_so3(&Vec3::new(
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
            rng.random_range(-1.5..1.5),
        ))
    }

    fn random_dm(rng: &mut StdRng, spread: f64) -> Mat3x2 {
        let mut dm = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        for i in 0..3 {
            for j in 0..2 {
                dm[(i, j)] += rng.random_range(-spread..spread);
            }
        }
        dm
    }

    fn random_vec(rng: &mut StdRng, s: f64) -> Vec3 {
        Vec3::new(
            rng.random_range(-s..s),
            rng.random_range(-s..s),
            rng.random_range(-s..s),
        )
    }

    #[test]
    fn stress_vanishes_exactly_at_zero_strain() {
        // Strain is zero iff Dm = (R₁|R₂).
        let mut rng = StdRng::seed_from_u64(31);
        let p = MaterialParams::normalized(2.0, 1.0, 0.7).unwrap();
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let dm = r.tangent_cols();
            let pair = stress(&dm, &r, &p).unwrap();
            assert!(pair.t.norm() < 1e-13);
            assert!(pair.s.norm() < 1e-13);
            // and any perturbation of Dm produces nonzero stress
            let mut dm2 = dm;
            dm2[(2, 0)] += 0.01;
            let pair2 = stress(&dm2, &r, &p).unwrap();
            assert!(pair2.s.norm() > 1e-4);
        }
    }

    #[test]
    fn material_stress_is_symmetric_without_couple_modulus() {
        let mut rng = StdRng::seed_from_u64(32);
        let p = MaterialParams::normalized(2.0, 1.0, 0.0).unwrap();
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let dm = random_dm(&mut rng, 0.5);
            let pair = stress(&dm, &r, &p).unwrap();
            assert!(so3::skew_part(&pair.t).norm() < 1e-12 * pair.t.norm().max(1.0));
        }
    }

    #[test]
    fn spatial_stress_is_frame_indifferent() {
        let mut rng = StdRng::seed_from_u64(33);
        let p = MaterialParams::normalized(1.4, 0.6, 0.9).unwrap();
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let q = random_rotation(&mut rng);
            let dm = random_dm(&mut rng, 0.5);
            let a = stress(&dm, &r, &p).unwrap();
            let b = stress(&(q.matrix() * dm), &(q * r), &p).unwrap();
            assert!((b.t - a.t).norm() < 1e-12 * a.t.norm().max(1.0));
            assert!((b.s - q.matrix() * a.s).norm() < 1e-12 * a.s.norm().max(1.0));
        }
    }

    #[test]
    fn spatial_stress_is_the_membrane_density_derivative() {
        // For the normalized variant, s must equal dW/dDm exactly; by the
        // density identity it is also the engineering-membrane derivative.
        let mut rng = StdRng::seed_from_u64(34);
        let h = 1e-6;
        for _ in 0..30 {
            let mu = rng.random_range(0.5..3.0);
            let lambda = rng.random_range(-0.2..2.0);
            let mu_c = rng.random_range(0.0..2.0);
            let p = MaterialParams::normalized(mu, lambda, mu_c).unwrap();
            let r = random_rotation(&mut rng);
            let dm = random_dm(&mut rng, 0.5);
            let pair = stress(&dm, &r, &p).unwrap();
            for i in 0..3 {
                for j in 0..2 {
                    let mut dp = dm;
                    let mut dn = dm;
                    dp[(i, j)] += h;
                    dn[(i, j)] -= h;
                    let fd = (energy::membrane_density(&dp, &r, &p)
                        - energy::membrane_density(&dn, &r, &p))
                        / (2.0 * h);
                    assert!((pair.s[(i, j)] - fd).abs() < 1e-6 * fd.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn circ_transpose_identity() {
        let mut rng = StdRng::seed_from_u64(35);
        for _ in 0..50 {
            let b = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let c = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            assert!((circ(&b, &c).transpose() - circ(&c, &b)).norm() < 1e-14);
        }
    }

    #[test]
    fn connection_of_uniform_twist_field() {
        // R(x) = exp(x·Anti(w)): ∂ₓR = Anti(w)·R and Ω_x = Anti(w).
        let w = Vec3::new(0.3, -0.5, 0.8);
        let a = anti(&w);
        let r = exp_so3(&(0.7 * w));
        let dxr = a * r.matrix();
        let conn = connection(&r, &dxr, &Mat3::zeros()).unwrap();
        assert!((conn.omega_x - a).norm() < 1e-12);
        assert!(conn.omega_y.norm() < 1e-15);
    }

    #[test]
    fn connection_rejects_non_tangent_derivatives() {
        let r = Rotation::identity();
        let bad = Mat3::identity(); // Rᵀ·I = I is symmetric, not skew
        match connection(&r, &bad, &Mat3::zeros()) {
            Err(ShellError::NotTangent { .. }) => {}
            other => panic!("expected NotTangent, got {other:?}"),
        }
    }

    #[test]
    fn wryness_of_linear_twist() {
        let omega = 0.9;
        let r = exp_so3(&Vec3::new(0.0, 0.0, omega * 0.4));
        let dxr = r.matrix() * anti(&Vec3::new(0.0, 0.0, omega));
        let w = wryness(&r, &dxr, &Mat3::zeros()).unwrap();
        let expected = Mat3x2::new(0.0, 0.0, 0.0, 0.0, omega, 0.0);
        assert!((w.gamma_hat - expected).norm() < 1e-12);
    }

    #[test]
    fn gamma_alpha_conversion() {
        // Γ = I maps to α = 2I; the maps are mutually inverse; the blocks
        // transform as dev sym α = −dev sym Γ, skew α = skew Γ, tr α = 2 tr Γ.
        assert!((gamma_to_alpha(&Mat3::identity()) - 2.0 * Mat3::identity()).norm() < 1e-15);
        let mut rng = StdRng::seed_from_u64(36);
        for _ in 0..100 {
            let g = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let a = gamma_to_alpha(&g);
            assert!((alpha_to_gamma(&a) - g).norm() < 1e-13);
            assert!((gamma_to_alpha(&alpha_to_gamma(&a)) - a).norm() < 1e-13);
            let dg = so3::decompose(&g);
            let da = so3::decompose(&a);
            assert!((da.dev_sym + dg.dev_sym).norm() < 1e-13);
            assert!((da.skew - dg.skew).norm() < 1e-13);
            assert!((da.trace - 2.0 * dg.trace).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_residual_vanishes_in_flat_identity_configuration() {
        let dm = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let p = MaterialParams::normalized(2.0, 1.0, 0.5).unwrap();
        let res = el_residual_r_pointwise(
            &dm,
            &Rotation::identity(),
            &Mat3::zeros(),
            &Mat3::zeros(),
            &Mat3::zeros(),
            &p,
        )
        .unwrap();
        assert!(res.norm() < 1e-14);
    }

    #[test]
    fn rotation_residual_reduces_in_equal_moduli_special_case() {
        // With λ = 0 and μ_c = μ the weight operator is μ·id, and the
        // residual collapses to ΔR − (Ω_x∂ₓR + Ω_y∂ᵧR) + μ·skew((Dm|0)Rᵀ)·R.
        let mut rng = StdRng::seed_from_u64(37);
        let mu = 1.7;
        let p = MaterialParams::normalized(mu, 0.0, mu).unwrap();
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let dxr = r.matrix() * anti(&random_vec(&mut rng, 1.0));
            let dyr = r.matrix() * anti(&random_vec(&mut rng, 1.0));
            let lap_r = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let dm = random_dm(&mut rng, 0.5);
            let full = el_residual_r_pointwise(&dm, &r, &dxr, &dyr, &lap_r, &p).unwrap();
            let conn = connection(&r, &dxr, &dyr).unwrap();
            let dm_pad = energy::dm_padded(&dm);
            let special = lap_r - (conn.omega_x * dxr + conn.omega_y * dyr)
                + mu * so3::skew_part(&(dm_pad * r.matrix().transpose())) * r.matrix();
            assert!((full - special).norm() < 1e-12 * full.norm().max(1.0));
        }
    }

    #[test]
    fn director_residual_projection_identity() {
        // ⟨d, residual⟩ = ⟨d, Δd⟩ + |Dd|² for unit directors.
        let mut rng = StdRng::seed_from_u64(38);
        for _ in 0..100 {
            let d = random_vec(&mut rng, 1.0).normalize();
            let dm = random_dm(&mut rng, 0.6);
            let lap_d = random_vec(&mut rng, 2.0);
            let dd = Mat3x2::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let res = director_el_residual(&dm, &d, &lap_d, &dd).unwrap();
            let lhs = d.dot(&res);
            let rhs = d.dot(&lap_d) + dd.norm_squared();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        }
        let dm = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        assert!(director_el_residual(&dm, &(1.5 * Vec3::z()), &Vec3::zeros(), &Mat3x2::zeros())
            .is_err());
    }

    #[test]
    fn director_stress_flat_configuration_and_degeneracy() {
        let dm = Mat3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let s = director_force_stress(&dm, &Vec3::z()).unwrap();
        assert!(s.norm() < 1e-14);
        // tilting the director adds exactly the shear dyad d (Dmᵀ d)ᵀ
        let d = Vec3::new(1.0, 0.0, 1.0).normalize();
        let s = director_force_stress(&dm, &d).unwrap();
        let expected = d * (dm.transpose() * d).transpose();
        assert!((s - expected).norm() < 1e-13);
        // degenerate element: both columns parallel
        let dm_bad = Mat3x2::new(1.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert!(director_force_stress(&dm_bad, &Vec3::z()).is_err());
    }
}
