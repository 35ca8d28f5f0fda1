//! Pointwise energy densities of the planar Cosserat membrane shell.
//!
//! The shell is parameterized over a flat reference domain ω ⊂ ℝ² with unit
//! thickness (h = 1 throughout; thickness scalings are absorbed into the
//! moduli).  A state is a midsurface deformation gradient `Dm ∈ ℝ^{3×2}`
//! together with a microrotation `R ∈ SO(3)` whose first two columns play the
//! role of in-plane directors and whose third column is the transverse
//! director.
//!
//! Three membrane variants are provided:
//!
//! * `GammaLimit` — homogenized membrane density with *harmonic-mean*
//!   transverse shear coefficient `2 μ μ_c / (μ + μ_c)`,
//! * `Engineering` — identical except the transverse shear coefficient is the
//!   *arithmetic mean* `(μ + μ_c)/2`,
//! * `NormalizedP` — the same energy written as `|ℙ(Rᵀ(Dm|R₃) − I)|²` with
//!   the spherical weight `κ`; with `κ = 3 κ_hom / 2` this coincides exactly
//!   with the `Engineering` membrane density (see tests).
//!
//! The curvature (micropolar Dirichlet) term comes in a uni-constant mode
//! `(μ L_c²/2)(|∂ₓR|² + |∂ᵧR|²)` and a general four-coefficient mode acting
//! on the wryness blocks.  The two are deliberately separate: the
//! four-coefficient formula evaluated at unit weights is *not* numerically
//! equal to the uni-constant density, so no weight choice is silently
//! reinterpreted.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Result, ShellError};
use crate::fem::Mesh;
use crate::so3::{self, Mat3, Mat3x2, Rotation, Vec3};

/// How the transverse shear coefficient combines `mu` and `mu_c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShearMean {
    /// `(mu + mu_c) / 2`; well-posed even at `mu_c = 0`.
    Arithmetic,
    /// `2 mu mu_c / (mu + mu_c)`; vanishes at `mu_c = 0`, which is rejected.
    Harmonic,
}

/// Which membrane energy family to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyVariant {
    /// Homogenized membrane density (canonically harmonic-mean shear).
    GammaLimit,
    /// Same membrane terms with arithmetic-mean shear.
    Engineering,
    /// `|ℙ(Rᵀ(Dm|R₃) − I)|²` with spherical weight `kappa_norm()`.
    NormalizedP,
}

/// Which curvature density multiplies `mu L_c² / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurvatureMode {
    /// `|∂ₓR|² + |∂ᵧR|²`, independent of the rotation value itself.
    UniConstant,
    /// Four-coefficient form in the wryness `Γ = (axl(Rᵀ∂ₓR) | axl(Rᵀ∂ᵧR))`:
    /// `b1 |sym Γ□|² + b2 |skew Γ□|² + (b1 b3/(b1+b3)) tr(Γ□)² +
    ///  (2 b1 b2/(b1+b2)) |Γ⊥|²`.
    General,
}

/// Elastic moduli and model switches.
///
/// Invariants enforced by [`MaterialParams::validate`]:
/// `mu > 0`, `mu_c ≥ 0`, `l_c > 0`, `b1, b2, b3 ≥ 0`, `2 mu + lambda > 0`,
/// `2 lambda + mu > 0` (so the homogenized bulk modulus is positive), and
/// harmonic-mean shear with `mu_c = 0` is rejected as not well-posed.
#[derive(Clone, Debug)]
pub struct MaterialParams {
    /// Shear modulus.
    pub mu: f64,
    /// Lamé parameter; may be negative within `2mu + lambda > 0`,
    /// `2 lambda + mu > 0`.
    pub lambda: f64,
    /// Cosserat couple modulus.
    pub mu_c: f64,
    /// Internal length scale of the curvature term.
    pub l_c: f64,
    /// Curvature weight on `|sym Γ□|²` (general mode only).
    pub b1: f64,
    /// Curvature weight on `|skew Γ□|²` (general mode only).
    pub b2: f64,
    /// Curvature weight entering the trace coefficient (general mode only).
    pub b3: f64,
    /// Transverse shear averaging rule.
    pub shear_mean: ShearMean,
    /// Membrane energy family.
    pub variant: EnergyVariant,
    /// Curvature density mode.
    pub curvature: CurvatureMode,
}

impl MaterialParams {
    /// General constructor with unit curvature weights and uni-constant
    /// curvature; validates all invariants.
    pub fn new(
        mu: f64,
        lambda: f64,
        mu_c: f64,
        l_c: f64,
        shear_mean: ShearMean,
        variant: EnergyVariant,
    ) -> Result<Self> {
        let p = MaterialParams {
            mu,
            lambda,
            mu_c,
            l_c,
            b1: 1.0,
            b2: 1.0,
            b3: 1.0,
            shear_mean,
            variant,
            curvature: CurvatureMode::UniConstant,
        };
        p.validate()?;
        Ok(p)
    }

    /// Homogenized membrane model with harmonic-mean transverse shear.
    pub fn gamma_limit(mu: f64, lambda: f64, mu_c: f64, l_c: f64) -> Result<Self> {
        Self::new(mu, lambda, mu_c, l_c, ShearMean::Harmonic, EnergyVariant::GammaLimit)
    }

    /// Engineering membrane model with arithmetic-mean transverse shear.
    pub fn engineering(mu: f64, lambda: f64, mu_c: f64, l_c: f64) -> Result<Self> {
        Self::new(mu, lambda, mu_c, l_c, ShearMean::Arithmetic, EnergyVariant::Engineering)
    }

    /// Normalized projector form with curvature prefactor fixed to one:
    /// `l_c = sqrt(2/mu)` so that `mu l_c² / 2 = 1`.
    pub fn normalized(mu: f64, lambda: f64, mu_c: f64) -> Result<Self> {
        Self::new(
            mu,
            lambda,
            mu_c,
            (2.0 / mu).sqrt(),
            ShearMean::Arithmetic,
            EnergyVariant::NormalizedP,
        )
    }

    /// Replace the curvature mode and weights, revalidating.
    pub fn with_curvature(mut self, mode: CurvatureMode, b1: f64, b2: f64, b3: f64) -> Result<Self> {
        self.curvature = mode;
        self.b1 = b1;
        self.b2 = b2;
        self.b3 = b3;
        self.validate()?;
        Ok(self)
    }

    /// Check every documented invariant.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(ShellError::invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.mu_c >= 0.0) {
            return Err(ShellError::invalid(format!("mu_c must be nonnegative, got {}", self.mu_c)));
        }
        if !(self.l_c > 0.0) {
            return Err(ShellError::invalid(format!("L_c must be positive, got {}", self.l_c)));
        }
        if !(self.b1 >= 0.0 && self.b2 >= 0.0 && self.b3 >= 0.0) {
            return Err(ShellError::invalid(format!(
                "curvature weights must be nonnegative, got b1 = {}, b2 = {}, b3 = {}",
                self.b1, self.b2, self.b3
            )));
        }
        if !(2.0 * self.mu + self.lambda > 0.0) {
            return Err(ShellError::invalid(format!(
                "2 mu + lambda must be positive, got {}",
                2.0 * self.mu + self.lambda
            )));
        }
        if !(2.0 * self.lambda + self.mu > 0.0) {
            return Err(ShellError::invalid(format!(
                "2 lambda + mu must be positive, got {}",
                2.0 * self.lambda + self.mu
            )));
        }
        if self.shear_mean == ShearMean::Harmonic
            && self.mu_c == 0.0
            && self.variant != EnergyVariant::NormalizedP
        {
            return Err(ShellError::invalid(
                "harmonic-mean transverse shear with mu_c = 0 is not well-posed \
                 (the shear stiffness vanishes); use the arithmetic mean or mu_c > 0",
            ));
        }
        Ok(())
    }

    /// Homogenized bulk modulus `κ_hom = (4μ/3)(2λ+μ)/(2μ+λ)`, equivalently
    /// `2·(μλ/(2μ+λ) + μ/3)`.
    pub fn kappa_hom(&self) -> f64 {
        (4.0 * self.mu / 3.0) * (2.0 * self.lambda + self.mu) / (2.0 * self.mu + self.lambda)
    }

    /// Spherical weight of the normalized projector form, `3 κ_hom / 2`; with
    /// this weight `|ℙ(·)|²` reproduces the engineering membrane density.
    pub fn kappa_norm(&self) -> f64 {
        1.5 * self.kappa_hom()
    }

    /// Transverse shear coefficient `c_s` selected by [`ShearMean`].
    pub fn shear_coefficient(&self) -> f64 {
        match self.shear_mean {
            ShearMean::Arithmetic => 0.5 * (self.mu + self.mu_c),
            ShearMean::Harmonic => 2.0 * self.mu * self.mu_c / (self.mu + self.mu_c),
        }
    }

    /// Coefficient `μ L_c² / 2` multiplying the curvature density.
    pub fn curvature_coefficient(&self) -> f64 {
        0.5 * self.mu * self.l_c * self.l_c
    }

    /// In-plane elongation coefficient `μλ/(2μ+λ)`.
    pub fn elongation_coefficient(&self) -> f64 {
        self.mu * self.lambda / (2.0 * self.mu + self.lambda)
    }
}

/// Harmonic mean `2ab/(a+b)`; errors when `a + b ≤ 0`.
pub fn harmonic_mean(a: f64, b: f64) -> Result<f64> {
    if !(a + b > 0.0) {
        return Err(ShellError::invalid(format!(
            "harmonic mean requires a + b > 0, got a = {a}, b = {b}"
        )));
    }
    Ok(2.0 * a * b / (a + b))
}

/// Itemized energy content; every field except `load` is a nonnegative
/// quadrature sum and `total` is their exact sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct EnergyReport {
    /// Sum of all parts below.
    pub total: f64,
    /// In-plane stretch (symmetric membrane strain) energy.
    pub stretch: f64,
    /// Drill (skew membrane strain) energy.
    pub drill: f64,
    /// Transverse shear energy.
    pub transverse_shear: f64,
    /// Elongation (trace / spherical) energy.
    pub elongation: f64,
    /// Curvature (rotation gradient) energy.
    pub curvature: f64,
    /// Body-force potential `+∫⟨f, m⟩`; may take either sign.
    pub load: f64,
}

impl EnergyReport {
    pub(crate) fn finish(mut self) -> Self {
        self.total = self.stretch
            + self.drill
            + self.transverse_shear
            + self.elongation
            + self.curvature
            + self.load;
        self
    }
}

/// Itemized membrane density at a single point.
#[derive(Clone, Copy, Debug, Default)]
pub struct MembraneParts {
    pub stretch: f64,
    pub drill: f64,
    pub transverse_shear: f64,
    pub elongation: f64,
}

impl MembraneParts {
    /// Sum of the four parts.
    pub fn total(&self) -> f64 {
        self.stretch + self.drill + self.transverse_shear + self.elongation
    }
}

#[inline]
fn sym2(y: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (y + y.transpose())
}

#[inline]
fn skew2(y: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (y - y.transpose())
}

/// `(Dm | 0)` as a 3×3 matrix.
#[inline]
pub(crate) fn dm_padded(dm: &Mat3x2) -> Mat3 {
    Mat3::new(
        dm[(0, 0)],
        dm[(0, 1)],
        0.0,
        dm[(1, 0)],
        dm[(1, 1)],
        0.0,
        dm[(2, 0)],
        dm[(2, 1)],
        0.0,
    )
}

/// Membrane strain `X = Rᵀ(Dm|0) − diag(1,1,0)` of the normalized form.
/// On SO(3) this equals `Rᵀ(Dm|R₃) − I`, since `RᵀR₃ = e₃`.
#[inline]
pub(crate) fn membrane_strain(dm: &Mat3x2, r: &Mat3) -> Mat3 {
    let rtdm = r.transpose() * dm; // 3×2
    Mat3::new(
        rtdm[(0, 0)] - 1.0,
        rtdm[(0, 1)],
        0.0,
        rtdm[(1, 0)],
        rtdm[(1, 1)] - 1.0,
        0.0,
        rtdm[(2, 0)],
        rtdm[(2, 1)],
        0.0,
    )
}

/// Membrane density split into parts, with the rotation as a raw matrix.
///
/// The raw form is the smooth extension off SO(3) that the Euclidean
/// derivative evaluators differentiate; public callers go through
/// [`membrane_parts`].
pub(crate) fn membrane_parts_raw(dm: &Mat3x2, r: &Mat3, p: &MaterialParams) -> MembraneParts {
    match p.variant {
        EnergyVariant::GammaLimit | EnergyVariant::Engineering => {
            // Y = (R₁|R₂)ᵀ Dm − I₂
            let rt_dm = r.transpose() * dm; // rows: ⟨Rᵢ, ∂m⟩
            let y = Matrix2::new(
                rt_dm[(0, 0)] - 1.0,
                rt_dm[(0, 1)],
                rt_dm[(1, 0)],
                rt_dm[(1, 1)] - 1.0,
            );
            let shear = Vector2::new(rt_dm[(2, 0)], rt_dm[(2, 1)]); // ⟨R₃, ∂m⟩
            MembraneParts {
                stretch: p.mu * sym2(&y).norm_squared(),
                drill: p.mu_c * skew2(&y).norm_squared(),
                transverse_shear: p.shear_coefficient() * shear.norm_squared(),
                elongation: p.elongation_coefficient() * y.trace() * y.trace(),
            }
        }
        EnergyVariant::NormalizedP => {
            let x = membrane_strain(dm, r);
            let d = so3::decompose(&x);
            MembraneParts {
                stretch: p.mu * d.dev_sym.norm_squared(),
                drill: p.mu_c * d.skew.norm_squared(),
                transverse_shear: 0.0,
                elongation: (p.kappa_norm() / 3.0) * d.trace * d.trace,
            }
        }
    }
}

/// Itemized membrane density at `(Dm, R)` for the variant selected in `p`.
pub fn membrane_parts(dm: &Mat3x2, r: &Rotation, p: &MaterialParams) -> MembraneParts {
    membrane_parts_raw(dm, r.matrix(), p)
}

/// Scalar membrane density; see [`membrane_parts`].
pub fn membrane_density(dm: &Mat3x2, r: &Rotation, p: &MaterialParams) -> f64 {
    membrane_parts(dm, r, p).total()
}

/// `|ℙ(Rᵀ(Dm|R₃) − I)|²` with explicit moduli; the spherical weight
/// `kappa_norm` is passed in rather than derived, so alternative
/// normalizations can be probed directly.
pub fn normalized_p_density(dm: &Mat3x2, r: &Rotation, mu: f64, mu_c: f64, kappa_norm: f64) -> f64 {
    let x = membrane_strain(dm, r.matrix());
    so3::p_norm_sq(&x, mu, mu_c, kappa_norm)
}

/// Wryness of a rotation field from its value and partial derivatives:
/// columns `axl(skew(Rᵀ∂ₓR))`, `axl(skew(Rᵀ∂ᵧR))`.  The skew projection
/// makes the formula well-defined for discrete (componentwise-interpolated)
/// rotation gradients, which are tangent only up to interpolation error.
#[inline]
pub(crate) fn wryness_raw(dxr: &Mat3, dyr: &Mat3, r: &Mat3) -> Mat3x2 {
    let rt = r.transpose();
    let g1 = so3::axl_unchecked(&(rt * dxr));
    let g2 = so3::axl_unchecked(&(rt * dyr));
    Mat3x2::new(g1.x, g2.x, g1.y, g2.y, g1.z, g2.z)
}

struct GeneralCurvatureCoeffs {
    c_sym: f64,
    c_skew: f64,
    c_trace: f64,
    c_perp: f64,
}

fn general_coeffs(p: &MaterialParams) -> GeneralCurvatureCoeffs {
    // The combined coefficients degenerate continuously to zero when both
    // weights of a pair vanish.
    let pair = |a: f64, b: f64| if a * b == 0.0 { 0.0 } else { a * b / (a + b) };
    GeneralCurvatureCoeffs {
        c_sym: p.b1,
        c_skew: p.b2,
        c_trace: pair(p.b1, p.b3),
        c_perp: 2.0 * pair(p.b1, p.b2),
    }
}

/// Curvature density with the rotation as a raw matrix; see
/// [`curvature_density`].
pub(crate) fn curvature_density_raw(dxr: &Mat3, dyr: &Mat3, r: &Mat3, p: &MaterialParams) -> f64 {
    let c = p.curvature_coefficient();
    match p.curvature {
        CurvatureMode::UniConstant => c * (dxr.norm_squared() + dyr.norm_squared()),
        CurvatureMode::General => {
            let g = wryness_raw(dxr, dyr, r);
            let g_box = Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
            let g_perp = Vector2::new(g[(2, 0)], g[(2, 1)]);
            let k = general_coeffs(p);
            c * (k.c_sym * sym2(&g_box).norm_squared()
                + k.c_skew * skew2(&g_box).norm_squared()
                + k.c_trace * g_box.trace() * g_box.trace()
                + k.c_perp * g_perp.norm_squared())
        }
    }
}

/// Curvature density at a point: `μL_c²/2` times either `|∂ₓR|² + |∂ᵧR|²`
/// (uni-constant mode, where `r` is unused) or the four-coefficient wryness
/// form (general mode).
pub fn curvature_density(dxr: &Mat3, dyr: &Mat3, r: &Rotation, p: &MaterialParams) -> f64 {
    curvature_density_raw(dxr, dyr, r.matrix(), p)
}

/// Quartic membrane + transverse shear density of the Reissner–Mindlin
/// director model:
/// `(μ/4)|DmᵀDm − I₂|² + (1/8)(2μλ/(2μ+λ)) tr(DmᵀDm − I₂)² + μ|Dmᵀd|²`.
///
/// The director Dirichlet term `(μL_c²/2)|Dd|²` is *not* included: `|Dd|²`
/// is a field quantity owned by the discretization and is added by the
/// caller.  Requires `d` to be a unit vector within `1e-8`.
pub fn director_density(dm: &Mat3x2, d: &Vec3, p: &MaterialParams) -> Result<f64> {
    if (d.norm() - 1.0).abs() >= 1e-8 {
        return Err(ShellError::invalid(format!(
            "director must be a unit vector, got |d| = {:.12}",
            d.norm()
        )));
    }
    let g = dm.transpose() * dm - Matrix2::identity();
    let shear = dm.transpose() * d;
    Ok(0.25 * p.mu * g.norm_squared()
        + 0.125 * (2.0 * p.mu * p.lambda / (2.0 * p.mu + p.lambda)) * g.trace() * g.trace()
        + p.mu * shear.norm_squared())
}

/// Body-force potential `+∫⟨f, m⟩ dx` by mass-lumped nodal quadrature.
///
/// The sign makes stationarity of `elastic energy + load_potential` deliver
/// `Div S = f` as the balance equation.
pub fn load_potential(m_values: &[Vec3], f_values: &[Vec3], mesh: &Mesh) -> Result<f64> {
    let n = mesh.num_nodes();
    if m_values.len() != n {
        return Err(ShellError::SizeMismatch {
            what: "load_potential midsurface values",
            expected: n,
            got: m_values.len(),
        });
    }
    if f_values.len() != n {
        return Err(ShellError::SizeMismatch {
            what: "load_potential force values",
            expected: n,
            got: f_values.len(),
        });
    }
    let w = mesh.lumped_node_areas();
    Ok((0..n).map(|i| w[i] * f_values[i].dot(&m_values[i])).sum())
}

/// Euclidean derivatives of the membrane density with respect to `Dm` and to
/// the raw entries of `R`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MembraneGrad {
    pub d_dm: Mat3x2,
    pub d_r: Mat3,
}

/// Exact Euclidean gradient of [`membrane_parts_raw`] at `(dm, r)`.
pub(crate) fn membrane_grad(dm: &Mat3x2, r: &Mat3, p: &MaterialParams) -> MembraneGrad {
    match p.variant {
        EnergyVariant::GammaLimit | EnergyVariant::Engineering => {
            let rt_dm = r.transpose() * dm;
            let y = Matrix2::new(
                rt_dm[(0, 0)] - 1.0,
                rt_dm[(0, 1)],
                rt_dm[(1, 0)],
                rt_dm[(1, 1)] - 1.0,
            );
            let cs = p.shear_coefficient();
            let beta = p.elongation_coefficient();
            // M = 2(μ sym Y + μ_c skew Y + β tr(Y) I₂)
            let m2 = 2.0
                * (p.mu * sym2(&y)
                    + p.mu_c * skew2(&y)
                    + beta * y.trace() * Matrix2::identity());
            let pcols = Mat3x2::from_columns(&[r.column(0), r.column(1)]);
            let r3: Vec3 = r.column(2).into();
            let u = dm.transpose() * r3; // ⟨∂ᵢm, R₃⟩
            let d_dm = pcols * m2 + 2.0 * cs * (r3 * u.transpose());
            let d_p = dm * m2.transpose(); // 3×2, derivative w.r.t. (R₁|R₂)
            let d_r3 = 2.0 * cs * (dm * u); // 3-vector
            let d_r = Mat3::from_columns(&[
                d_p.column(0).into_owned(),
                d_p.column(1).into_owned(),
                d_r3,
            ]);
            MembraneGrad { d_dm, d_r }
        }
        EnergyVariant::NormalizedP => {
            let x = membrane_strain(dm, r);
            let p2x = so3::p2_apply(&x, p.mu, p.mu_c, p.kappa_norm());
            let s3 = 2.0 * r * p2x; // d/dDm padded to 3×3
            let d_dm = Mat3x2::from_columns(&[s3.column(0), s3.column(1)]);
            let d_r = dm_padded(dm) * (2.0 * p2x).transpose();
            MembraneGrad { d_dm, d_r }
        }
    }
}

/// Euclidean derivatives of the curvature density with respect to the two
/// rotation gradients and the raw entries of `R`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CurvatureGrad {
    pub d_dxr: Mat3,
    pub d_dyr: Mat3,
    pub d_r: Mat3,
}

/// Exact Euclidean gradient of [`curvature_density_raw`].
pub(crate) fn curvature_grad(dxr: &Mat3, dyr: &Mat3, r: &Mat3, p: &MaterialParams) -> CurvatureGrad {
    let c = p.curvature_coefficient();
    match p.curvature {
        CurvatureMode::UniConstant => CurvatureGrad {
            d_dxr: 2.0 * c * dxr,
            d_dyr: 2.0 * c * dyr,
            d_r: Mat3::zeros(),
        },
        CurvatureMode::General => {
            let g = wryness_raw(dxr, dyr, r);
            let g_box = Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
            let g_perp = Vector2::new(g[(2, 0)], g[(2, 1)]);
            let k = general_coeffs(p);
            // T = dW/dΓ (3×2)
            let t_box = c
                * (2.0 * k.c_sym * sym2(&g_box)
                    + 2.0 * k.c_skew * skew2(&g_box)
                    + 2.0 * k.c_trace * g_box.trace() * Matrix2::identity());
            let t_perp = 2.0 * c * k.c_perp * g_perp;
            let t1 = Vec3::new(t_box[(0, 0)], t_box[(1, 0)], t_perp.x);
            let t2 = Vec3::new(t_box[(0, 1)], t_box[(1, 1)], t_perp.y);
            // Γᵢ = axl(skew(Rᵀ Aᵢ)) has adjoint ½Anti(·) in both slots.
            let a1 = 0.5 * so3::anti(&t1);
            let a2 = 0.5 * so3::anti(&t2);
            CurvatureGrad {
                d_dxr: r * a1,
                d_dyr: r * a2,
                d_r: -(dxr * a1 + dyr * a2),
            }
        }
    }
}
