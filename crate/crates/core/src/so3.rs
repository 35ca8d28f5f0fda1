//! Small dense kernels on ℝ³ and SO(3).
//!
//! Everything in this module is exact 3×3 / 3×2 algebra with fixed
//! conventions:
//!
//! * `anti` is the hat map, `Anti(v)·w = v × w`; `axl` is its inverse on
//!   skew-symmetric matrices, so `|A|² = 2 |axl(A)|²`.
//! * `decompose` splits a tensor into the mutually orthogonal pieces
//!   `dev sym X + skew X + (tr X / 3) I`, the basis for the weighted
//!   projector `ℙ` and all quadratic energy densities built on it.
//! * `exp_so3` / `log_so3` use the Rodrigues formula with series fallbacks
//!   near zero; the logarithm refuses inputs within `1e-6` of the cut locus
//!   at angle π where the axis is not recoverable at full precision.
//! * `polar_project` maps any matrix with positive determinant to the
//!   nearest rotation via the Newton iteration `X ← (X + X⁻ᵀ)/2`.

use nalgebra::{Matrix3, Matrix3x2, Vector3};

use crate::error::{Result, ShellError};

/// 3-vector of `f64`.
pub type Vec3 = Vector3<f64>;
/// Dense 3×3 tensor.
pub type Mat3 = Matrix3<f64>;
/// Dense 3×2 tensor; holds midsurface deformation gradients and wryness.
pub type Mat3x2 = Matrix3x2<f64>;

/// Frobenius tolerance for accepting a matrix as skew-symmetric, relative to
/// `max(1, |A|)`.
pub const SKEW_TOL: f64 = 1e-10;
/// Frobenius tolerance on `|RᵀR - I|` and `|det R - 1|` for rotations.
pub const ROTATION_TOL: f64 = 1e-12;
/// Increment threshold at which the polar Newton iteration is converged.
pub const POLAR_TOL: f64 = 1e-13;
/// Angles closer than this to π are rejected by the logarithm.
pub const LOG_CUT_MARGIN: f64 = 1e-6;

/// Symmetric part `(X + Xᵀ)/2`.
#[inline]
pub fn sym_part(x: &Mat3) -> Mat3 {
    0.5 * (x + x.transpose())
}

/// Skew-symmetric part `(X - Xᵀ)/2`.
#[inline]
pub fn skew_part(x: &Mat3) -> Mat3 {
    0.5 * (x - x.transpose())
}

/// Hat map: `anti(v)` is the skew matrix with `anti(v)·w = v × w`.
#[inline]
pub fn anti(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Axial vector of a skew-symmetric matrix, inverse of [`anti`].
///
/// Errors when the symmetric part of `a` exceeds [`SKEW_TOL`] (relative to
/// `max(1, |a|)`), since the axial vector is only meaningful for skew input.
pub fn axl(a: &Mat3) -> Result<Vec3> {
    let deviation = sym_part(a).norm();
    let tol = SKEW_TOL * a.norm().max(1.0);
    if !(deviation <= tol) {
        return Err(ShellError::NotSkew { deviation, tol });
    }
    Ok(axl_unchecked(a))
}

/// Axial vector of the skew part of `a`, without the skewness check.
///
/// Equals `axl(skew_part(a))`; used internally where near-skew matrices
/// (discrete rotation gradients) are projected rather than rejected.
#[inline]
pub(crate) fn axl_unchecked(a: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (a[(2, 1)] - a[(1, 2)]),
        0.5 * (a[(0, 2)] - a[(2, 0)]),
        0.5 * (a[(1, 0)] - a[(0, 1)]),
    )
}

/// Orthogonal decomposition `X = dev_sym + skew + (trace/3)·I`.
///
/// The three pieces are mutually orthogonal in the Frobenius inner product,
/// so `|X|² = |dev_sym|² + |skew|² + trace²/3`.
#[derive(Clone, Copy, Debug)]
pub struct Decomposition {
    /// Trace-free symmetric part.
    pub dev_sym: Mat3,
    /// Skew-symmetric part.
    pub skew: Mat3,
    /// Trace of the input.
    pub trace: f64,
}

impl Decomposition {
    /// Rebuild the original tensor `dev_sym + skew + (trace/3)·I`.
    pub fn reassemble(&self) -> Mat3 {
        self.dev_sym + self.skew + (self.trace / 3.0) * Mat3::identity()
    }
}

/// Split `X` into deviatoric-symmetric, skew and spherical parts.
pub fn decompose(x: &Mat3) -> Decomposition {
    let trace = x.trace();
    Decomposition {
        dev_sym: sym_part(x) - (trace / 3.0) * Mat3::identity(),
        skew: skew_part(x),
        trace,
    }
}

fn check_moduli(mu: f64, mu_c: f64, kappa: f64) -> Result<()> {
    if !(mu > 0.0 && mu_c > 0.0 && kappa > 0.0) {
        return Err(ShellError::invalid(format!(
            "projector moduli must be positive: mu = {mu}, mu_c = {mu_c}, kappa = {kappa}"
        )));
    }
    Ok(())
}

/// Weighted projector `ℙ(X) = √μ dev sym X + √μ_c skew X + (√κ/3) tr(X) I`.
///
/// All three moduli must be strictly positive.
pub fn p_operator(x: &Mat3, mu: f64, mu_c: f64, kappa: f64) -> Result<Mat3> {
    check_moduli(mu, mu_c, kappa)?;
    let d = decompose(x);
    Ok(mu.sqrt() * d.dev_sym + mu_c.sqrt() * d.skew + (kappa.sqrt() / 3.0) * d.trace * Mat3::identity())
}

/// Square of the projector: `ℙ²(X) = μ dev sym X + μ_c skew X + (κ/3) tr(X) I`.
///
/// Note the spherical coefficient is `κ/3 = (√κ/3)·√κ·3·(1/3)`: composing ℙ
/// with itself multiplies the eigenvalue on each orthogonal block, and the
/// spherical block has eigenvalue `√κ` (the `1/3` recombines with the trace).
pub fn p_squared(x: &Mat3, mu: f64, mu_c: f64, kappa: f64) -> Result<Mat3> {
    check_moduli(mu, mu_c, kappa)?;
    Ok(p2_apply(x, mu, mu_c, kappa))
}

/// `ℙ²` without modulus validation; tolerates `mu_c = 0` (the skew block is
/// simply dropped, as needed for symmetric Biot stress).
#[inline]
pub(crate) fn p2_apply(x: &Mat3, mu: f64, mu_c: f64, kappa: f64) -> Mat3 {
    let d = decompose(x);
    mu * d.dev_sym + mu_c * d.skew + (kappa / 3.0) * d.trace * Mat3::identity()
}

/// `|ℙ(X)|² = μ|dev sym X|² + μ_c|skew X|² + (κ/3) tr(X)²` without modulus
/// validation; the workhorse of the quadratic energy densities.
#[inline]
pub(crate) fn p_norm_sq(x: &Mat3, mu: f64, mu_c: f64, kappa: f64) -> f64 {
    let d = decompose(x);
    mu * d.dev_sym.norm_squared() + mu_c * d.skew.norm_squared() + (kappa / 3.0) * d.trace * d.trace
}

/// A validated member of SO(3): orthogonal within [`ROTATION_TOL`] and
/// determinant `1` within [`ROTATION_TOL`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    /// The identity rotation.
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Validate and wrap a matrix; errors unless `|RᵀR - I| ≤ 1e-12` and
    /// `|det R - 1| ≤ 1e-12`.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let ortho_deviation = (m.transpose() * m - Mat3::identity()).norm();
        let det = m.determinant();
        if !(ortho_deviation <= ROTATION_TOL) || !((det - 1.0).abs() <= ROTATION_TOL) {
            return Err(ShellError::NotRotation {
                ortho_deviation,
                det,
            });
        }
        Ok(Rotation(m))
    }

    /// Wrap without validation.  Only for matrices that are rotations by
    /// construction (Rodrigues outputs, products of rotations).
    #[inline]
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    /// The underlying matrix.
    #[inline]
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Transpose, which is also the inverse.
    #[inline]
    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// `i`-th column as a vector (`0`-based); column 2 is the director.
    #[inline]
    pub fn col(&self, i: usize) -> Vec3 {
        self.0.column(i).into()
    }

    /// First two columns as a 3×2 matrix.
    #[inline]
    pub fn tangent_cols(&self) -> Mat3x2 {
        Mat3x2::from_columns(&[self.0.column(0), self.0.column(1)])
    }

    /// Frobenius deviation of `RᵀR` from the identity.
    pub fn orthogonality_deviation(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;
    /// Product of rotations; stays on SO(3) up to roundoff, not revalidated.
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Rodrigues formula: exponential of `anti(v)`, exact on SO(3) up to
/// roundoff for any `v` (series fallback below `|v| = 1e-4`).
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let (a, b) = if theta2 < 1e-8 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = anti(v);
    Rotation(Mat3::identity() + a * k + b * (k * k))
}

/// Logarithm of a rotation: the vector `v` with `exp_so3(v) = R` and
/// `|v| ≤ π`.
///
/// Errors when the rotation angle is within [`LOG_CUT_MARGIN`] of π, where
/// the axis direction is ill-conditioned.
pub fn log_so3(r: &Rotation) -> Result<Vec3> {
    let m = r.matrix();
    // w = 2 sin(θ) · axis
    let w = Vec3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    let s = 0.5 * w.norm(); // sin θ
    let c = 0.5 * (m.trace() - 1.0); // cos θ
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - LOG_CUT_MARGIN {
        return Err(ShellError::IllConditioned(format!(
            "rotation angle {theta:.9} is within {LOG_CUT_MARGIN:.0e} of pi; logarithm axis is not recoverable"
        )));
    }
    // v = θ/(2 sin θ) · w; series in θ near zero.
    let scale = if theta < 1e-4 {
        0.5 * (1.0 + theta * theta / 6.0 + 7.0 * theta.powi(4) / 360.0)
    } else {
        theta / (2.0 * s)
    };
    Ok(scale * w)
}

/// Nearest rotation to `x` in the Frobenius norm, via the Newton iteration
/// `X ← (X + X⁻ᵀ)/2` (converges quadratically for invertible input).
///
/// Requires `det x > 0` so the orthogonal polar factor lies on SO(3) and not
/// on the reflection component.
pub fn polar_project(x: &Mat3) -> Result<Rotation> {
    let det = x.determinant();
    if !det.is_finite() || det <= 0.0 {
        return Err(ShellError::invalid(format!(
            "polar projection requires det X > 0, got {det:.6e}"
        )));
    }
    // Fast path: inputs already orthogonal to rounding accuracy are returned
    // unchanged.  This makes the projection bitwise-idempotent on SO(3), so a
    // retraction with a vanishing step reproduces its input exactly instead
    // of injecting one Newton step worth of rounding noise — which matters
    // for line searches operating at the energy's floating-point floor.
    let deviation = (x.transpose() * x - Mat3::identity()).norm();
    if deviation < 1e-14 {
        return Ok(Rotation::from_matrix_unchecked(*x));
    }
    let mut y = *x;
    for _ in 0..100 {
        let inv = y.try_inverse().ok_or_else(|| {
            ShellError::IllConditioned("polar projection hit a singular iterate".to_string())
        })?;
        let next = 0.5 * (y + inv.transpose());
        let increment = (next - y).norm();
        y = next;
        if increment < POLAR_TOL {
            return Rotation::from_matrix(y);
        }
    }
    Err(ShellError::IllConditioned(
        "polar projection did not converge within 100 iterations".to_string(),
    ))
}
