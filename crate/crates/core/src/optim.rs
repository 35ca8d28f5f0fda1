//! Energy minimization over `(ℝ³)^N × SO(3)^N`.
//!
//! The solver is Riemannian gradient descent with Armijo backtracking.
//! Positions move along straight lines; rotations move along the retraction
//! `R ← polar(R·exp(t·Anti(w)))` — the polar projection after every update
//! keeps the orthogonality deviation of each nodal rotation at the rounding
//! floor regardless of how many steps are taken.
//!
//! The trial step of each line search is the spectral (Barzilai–Borwein)
//! estimate `⟨s,s⟩/⟨s,y⟩` built from the previous accepted step and gradient
//! change, falling back to twice the previous accepted step whenever the
//! estimate is unusable (first iteration, or `⟨s,y⟩ ≤ 0` in nonconvex
//! regions).  Armijo acceptance makes the method monotone either way; the
//! spectral step is what lets plain gradient descent cope with the severe
//! stiffness contrast between membrane and curvature terms at realistic
//! moduli.
//!
//! The Armijo test uses a plain floating-point comparison
//! `E_trial ≤ E − c·t·‖g‖²`.  Since `fl(E − x) ≤ E` for `x ≥ 0`, accepted
//! energies are non-increasing *as floating-point numbers*.  Near the
//! rounding floor of the energy a genuine decrease stops being representable
//! (`E_trial` evaluates to exactly `E`); such steps are accepted only when
//! they strictly reduce the gradient norm, so the endgame keeps polishing
//! the stationarity measure while the recorded energies stay constant.  When
//! neither the energy nor the gradient norm can move, the run has hit the
//! floating-point floor and returns with the achieved gradient norm.  A line
//! search that only ever *increases* the energy is reported as
//! [`ShellError::Stagnation`].

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::energy::MaterialParams;
use crate::error::{Result, ShellError};
use crate::fem::{
    apply_boundary, assemble_energy, assemble_gradient, BoundaryCondition, Gradient, Mesh,
    ShellState,
};
use crate::so3::{self, exp_so3, Vec3};

/// Descent method; a single variant today, kept as an enum so configs can
/// name the algorithm explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    GradientDescent,
}

/// Solver controls.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Stop when the full Riemannian gradient norm drops to this value.
    pub grad_tol: f64,
    /// Maximum number of accepted descent steps.
    pub max_iters: usize,
    /// Initial trial step of the first iteration.
    pub step0: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Step reduction factor of the backtracking line search.
    pub shrink: f64,
    /// Descent method.
    pub method: Method,
    /// Amplitude of the random rotation perturbation applied once before the
    /// first iteration (componentwise uniform in `(−r_jitter, r_jitter)`);
    /// `0` disables it.  Useful for breaking mesh symmetries that would
    /// otherwise trap the descent on unstable axisymmetric configurations.
    pub r_jitter: f64,
    /// Amplitude of the random out-of-plane midsurface perturbation applied
    /// once before the first iteration (uniform in `(−m_jitter, m_jitter)`
    /// on the third component of every node); `0` disables it.  Moves the
    /// start out of the basin of symmetric configurations so that soft,
    /// short-wavelength branches are reachable by plain descent.
    pub m_jitter: f64,
    /// Seed of the jitter perturbation.
    pub jitter_seed: u64,
    /// Print a progress line to stderr every this many iterations (0 = off).
    pub log_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grad_tol: 1e-6,
            max_iters: 50_000,
            step0: 1.0,
            armijo_c: 1e-4,
            shrink: 0.5,
            method: Method::GradientDescent,
            r_jitter: 0.0,
            m_jitter: 0.0,
            jitter_seed: 0,
            log_every: 0,
        }
    }
}

impl SolveOptions {
    /// Check the documented parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(ShellError::invalid(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.step0 > 0.0) {
            return Err(ShellError::invalid(format!("step0 must be positive, got {}", self.step0)));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(ShellError::invalid(format!(
                "armijo_c must lie in (0, 1), got {}",
                self.armijo_c
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(ShellError::invalid(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if !(self.r_jitter >= 0.0) {
            return Err(ShellError::invalid(format!(
                "r_jitter must be nonnegative, got {}",
                self.r_jitter
            )));
        }
        if !(self.m_jitter >= 0.0) {
            return Err(ShellError::invalid(format!(
                "m_jitter must be nonnegative, got {}",
                self.m_jitter
            )));
        }
        Ok(())
    }
}

/// Outcome of a [`minimize`] run.  Convergence is a property of the final
/// gradient norm, not a stored flag: compare against the tolerance that
/// matters to the caller via [`SolveStats::converged`].
#[derive(Clone, Debug)]
pub struct SolveStats {
    /// Number of accepted descent steps.
    pub iterations: usize,
    /// Energy of the returned state.
    pub final_energy: f64,
    /// Riemannian gradient norm at the returned state.
    pub final_grad_norm: f64,
    /// Accepted energies, starting with the initial state (length
    /// `iterations + 1`).
    pub energy_history: Vec<f64>,
    /// Wall-clock duration of the run.
    pub wall_time: Duration,
}

impl SolveStats {
    /// Whether the final gradient norm meets `grad_tol`.
    pub fn converged(&self, grad_tol: f64) -> bool {
        self.final_grad_norm <= grad_tol
    }
}

/// Step along a tangent direction: `m_i ← m_i + step·dm_i` and
/// `R_i ← polar(R_i·exp(step·Anti(dr_i)))`.  The polar projection keeps every
/// rotation on SO(3) for arbitrarily large steps; Dirichlet handling is the
/// caller's business (pass zero direction entries for constrained nodes).
pub fn retract(state: &ShellState, dm: &[Vec3], dr: &[Vec3], step: f64) -> Result<ShellState> {
    let n = state.num_nodes();
    if dm.len() != n || dr.len() != n {
        return Err(ShellError::SizeMismatch {
            what: "retraction direction",
            expected: n,
            got: if dm.len() != n { dm.len() } else { dr.len() },
        });
    }
    let mut m = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for i in 0..n {
        m.push(state.m[i] + step * dm[i]);
        let twist = exp_so3(&(step * dr[i]));
        let moved = state.r[i] * twist;
        r.push(so3::polar_project(moved.matrix())?);
    }
    ShellState::new(m, r)
}

/// Minimize the discrete shell energy from `state0`, returning the final
/// state and run statistics.
///
/// The boundary condition is applied to the initial state, and the
/// corresponding position entries stay fixed for the whole run (their
/// gradient components are masked; rotations are always free).  The energy
/// history is non-increasing.  The run ends when the gradient norm reaches
/// `grad_tol`, after `max_iters` accepted steps, or early when the line
/// search can only reproduce the current state bitwise (the floating-point
/// floor of the energy); in every case the achieved gradient norm is
/// reported.  Errors: invalid options/parameters, or
/// [`ShellError::Stagnation`] when no acceptable step exists.
pub fn minimize(
    mesh: &Mesh,
    state0: ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    bc: &BoundaryCondition,
    opts: &SolveOptions,
) -> Result<(ShellState, SolveStats)> {
    opts.validate()?;
    p.validate()?;
    let start = Instant::now();
    let mut state = state0;
    apply_boundary(&mut state, bc, mesh)?;
    if opts.r_jitter > 0.0 || opts.m_jitter > 0.0 {
        let mut rng = StdRng::seed_from_u64(opts.jitter_seed);
        if opts.r_jitter > 0.0 {
            let a = opts.r_jitter;
            for r in &mut state.r {
                let w = Vec3::new(
                    rng.random_range(-a..a),
                    rng.random_range(-a..a),
                    rng.random_range(-a..a),
                );
                *r = *r * exp_so3(&w);
            }
        }
        if opts.m_jitter > 0.0 {
            // Band-limited angular field rather than white noise: white
            // noise lives at the mesh scale where membrane strain punishes
            // it immediately, so it never seeds coherent buckling modes.
            let a = opts.m_jitter;
            const K_MAX: usize = 12;
            let coeffs: Vec<(f64, f64)> = (2..=K_MAX)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let scale = a / (coeffs.len() as f64).sqrt();
            for (m, p) in state.m.iter_mut().zip(mesh.nodes()) {
                let rho = p.norm();
                let theta = p.y.atan2(p.x);
                let env = rho * rho * (1.0 - rho * rho);
                let mut w = 0.0;
                for (j, (c, s)) in coeffs.iter().enumerate() {
                    let k = (j + 2) as f64;
                    w += c * (k * theta).cos() + s * (k * theta).sin();
                }
                m.z += scale * env * w;
            }
            // constrained nodes keep their boundary data
            apply_boundary(&mut state, bc, mesh)?;
        }
    }
    let fixed = bc.dirichlet_nodes(mesh);
    let precond = Precond::build(mesh, p);
    let mut energy = assemble_energy(mesh, &state, p, f)?.total;
    let mut history = vec![energy];
    let mut step = opts.step0;
    let mut iterations = 0;
    // preconditioned direction at the previous iterate, ⟨g,d⟩ there, and the
    // step that was taken, for the spectral step estimate
    let mut previous: Option<(Gradient, f64, f64)> = None;
    // how many times the step policy has been reset at the fp floor without
    // an intervening accepted step
    let mut realignments = 0u32;
    let mut grad = assemble_gradient(mesh, &state, p, f, &fixed)?;
    loop {
        let gnorm = grad.norm();
        if opts.log_every > 0 && iterations % opts.log_every == 0 {
            eprintln!(
                "iter {iterations:>8}  energy {energy:+.9e}  grad {gnorm:.3e}  step {step:.3e}"
            );
        }
        if gnorm <= opts.grad_tol || iterations == opts.max_iters {
            let stats = SolveStats {
                iterations,
                final_energy: energy,
                final_grad_norm: gnorm,
                energy_history: history,
                wall_time: start.elapsed(),
            };
            return Ok((state, stats));
        }
        let dir = precond.apply(&grad);
        let gd = grad_dot(&grad, &dir);
        // Spectral trial step in the preconditioned metric: with
        // s = −t_prev·d_prev and y = K⁻¹(g − g_prev),
        // ⟨s,s⟩_K/⟨s,y⟩_K = t_prev·⟨g_prev,d_prev⟩ / (⟨g_prev,d_prev⟩ − ⟨d_prev,g⟩).
        let mut t = match &previous {
            Some((d_prev, gd_prev, t_prev)) => {
                let denom = gd_prev - grad_dot(d_prev, &grad);
                let numer = t_prev * gd_prev;
                if denom > 0.0 && numer.is_finite() {
                    (numer / denom).clamp(1e-14, 1e6)
                } else {
                    step
                }
            }
            None => step,
        };
        // accepted step, its energy, and the gradient there when the
        // acceptance already had to compute it
        let mut accepted: Option<(ShellState, f64, f64, Option<Gradient>)> = None;
        // saw a trial whose energy matched the current one bitwise but whose
        // gradient norm would not improve — the signature of the fp floor
        let mut flat_trial = false;
        // the step shrank until the retraction reproduced the state bitwise,
        // so the whole achievable range of the direction was probed
        let mut bottomed_out = false;
        let mut halvings = 0;
        loop {
            let trial = retract(&state, &dir.m, &dir.r, -t)?;
            let e_trial = assemble_energy(mesh, &trial, p, f)?.total;
            if e_trial <= energy - opts.armijo_c * t * gd {
                if e_trial < energy {
                    accepted = Some((trial, e_trial, t, None));
                    break;
                }
                // The decrease is below one ulp of the energy.  Fall back to
                // the stationarity measure itself: accept only strict
                // gradient-norm progress, otherwise keep shrinking.
                if trial.m == state.m && trial.r == state.r {
                    bottomed_out = true;
                    break; // smaller steps stay bitwise zero
                }
                let g_trial = assemble_gradient(mesh, &trial, p, f, &fixed)?;
                if g_trial.norm() < gnorm {
                    accepted = Some((trial, e_trial, t, Some(g_trial)));
                    break;
                }
                flat_trial = true;
            }
            halvings += 1;
            // A search that only ever increased the energy gets the
            // documented 60-halving budget.  Once trials start landing on
            // the current energy exactly, keep shrinking until the move
            // rounds to nothing: only then has the floor been demonstrated.
            if (halvings > 60 && !flat_trial) || halvings > 1100 {
                break;
            }
            t *= opts.shrink;
        }
        let Some((trial, e_trial, t_acc, g_trial)) = accepted else {
            if bottomed_out || flat_trial {
                // No strict decrease and no gradient-norm progress anywhere
                // between the trial step and a bitwise-zero move.  Realign
                // the step grid a few times — a fresh sweep from a shifted
                // step0 lands on different trial points and often finds
                // further one-ulp decreases — before declaring double
                // precision exhausted.
                if realignments < 4 {
                    realignments += 1;
                    previous = None;
                    step = opts.step0 * 1.3f64.powi(realignments as i32);
                    continue;
                }
                let stats = SolveStats {
                    iterations,
                    final_energy: energy,
                    final_grad_norm: gnorm,
                    energy_history: history,
                    wall_time: start.elapsed(),
                };
                return Ok((state, stats));
            }
            return Err(ShellError::Stagnation {
                iteration: iterations,
                step: t,
            });
        };
        let g_new = match g_trial {
            Some(g) => g,
            None => assemble_gradient(mesh, &trial, p, f, &fixed)?,
        };
        realignments = 0;
        previous = Some((dir, gd, t_acc));
        grad = g_new;
        state = trial;
        energy = e_trial;
        history.push(energy);
        step = 2.0 * t_acc;
        iterations += 1;
    }
}

/// Euclidean inner product of two gradients in the right-translated
/// coordinates (positions and rotation axials stacked).
fn grad_dot(a: &Gradient, b: &Gradient) -> f64 {
    let m: f64 = a.m.iter().zip(&b.m).map(|(x, y)| x.dot(y)).sum();
    let r: f64 = a.r.iter().zip(&b.r).map(|(x, y)| x.dot(y)).sum();
    m + r
}

/// Jacobi-style nodal stiffness scales.  The descent direction is the
/// gradient divided by these, which equalizes the stiff membrane block
/// against the soft rotation/curvature block and removes the mesh-size
/// imbalance between interior and boundary nodes.  Only the order of
/// magnitude matters; the line search absorbs the rest.
struct Precond {
    m: Vec<f64>,
    r: Vec<f64>,
}

impl Precond {
    fn build(mesh: &Mesh, p: &MaterialParams) -> Precond {
        let n = mesh.num_nodes();
        // diagonal of the P1 Laplacian: σ_i = Σ_e A_e·|∇φ_i|²
        let mut sigma = vec![0.0f64; n];
        for e in 0..mesh.num_triangles() {
            let tri = mesh.triangles()[e];
            let grads = mesh.shape_gradients(e);
            let area = mesh.element_area(e);
            for k in 0..3 {
                sigma[tri[k]] += area * grads[k].norm_squared();
            }
        }
        let zeroth = 2.0 * (p.mu + p.mu_c + p.elongation_coefficient());
        let bending = 2.0
            * p.curvature_coefficient()
            * p.b1.max(p.b2).max(p.b3).max(1.0);
        let w = mesh.lumped_node_areas();
        let m = sigma.iter().map(|&s| zeroth * s).collect();
        let r = sigma
            .iter()
            .zip(w)
            .map(|(&s, &wi)| zeroth * wi + bending * s)
            .collect();
        Precond { m, r }
    }

    /// `K⁻¹·g`, the preconditioned descent direction.
    fn apply(&self, g: &Gradient) -> Gradient {
        Gradient {
            m: g.m.iter().zip(&self.m).map(|(v, k)| v / *k).collect(),
            r: g.r.iter().zip(&self.r).map(|(v, k)| v / *k).collect(),
        }
    }
}

/// Largest per-coordinate relative deviation between `grad` and a central
/// finite difference of the assembled energy, using the metric
/// `|g_i − fd_i| / max(1, |fd_i|)`.
///
/// Position coordinates of `fixed` nodes are skipped (their gradient entries
/// are masked by construction).  On meshes with more than 100 nodes, 200
/// position and 200 rotation coordinates are sampled with a fixed seed.  The
/// step `h` must lie in `[1e-8, 1e-3]`.
pub fn compare_gradient(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    fixed: &[usize],
    h: f64,
    grad: &Gradient,
) -> Result<f64> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(ShellError::invalid(format!(
            "finite-difference step must lie in [1e-8, 1e-3], got {h}"
        )));
    }
    if grad.m.len() != mesh.num_nodes() || grad.r.len() != mesh.num_nodes() {
        return Err(ShellError::SizeMismatch {
            what: "gradient nodes",
            expected: mesh.num_nodes(),
            got: grad.m.len(),
        });
    }
    let n = mesh.num_nodes();
    let is_fixed = {
        let mut mask = vec![false; n];
        for &v in fixed {
            if v >= n {
                return Err(ShellError::invalid(format!(
                    "fixed node index {v} out of range ({n} nodes)"
                )));
            }
            mask[v] = true;
        }
        mask
    };
    let coords: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..3).map(move |k| (i, k))).collect();
    let m_coords: Vec<(usize, usize)> = coords
        .iter()
        .copied()
        .filter(|&(i, _)| !is_fixed[i])
        .collect();
    let r_coords = coords;
    let (m_sample, r_sample) = if n > 100 {
        let mut rng = StdRng::seed_from_u64(0xC0FFEE);
        let pick = |v: &[(usize, usize)], rng: &mut StdRng| -> Vec<(usize, usize)> {
            (0..200).map(|_| v[rng.random_range(0..v.len())]).collect()
        };
        (pick(&m_coords, &mut rng), pick(&r_coords, &mut rng))
    } else {
        (m_coords, r_coords)
    };
    let energy_of = |s: &ShellState| -> Result<f64> { Ok(assemble_energy(mesh, s, p, f)?.total) };
    let mut worst = 0.0_f64;
    for (i, k) in m_sample {
        let mut plus = state.clone();
        let mut minus = state.clone();
        plus.m[i][k] += h;
        minus.m[i][k] -= h;
        let fd = (energy_of(&plus)? - energy_of(&minus)?) / (2.0 * h);
        let rel = (grad.m[i][k] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(rel);
    }
    for (i, k) in r_sample {
        let mut axis = Vec3::zeros();
        axis[k] = 1.0;
        let mut plus = state.clone();
        let mut minus = state.clone();
        plus.r[i] = state.r[i] * exp_so3(&(h * axis));
        minus.r[i] = state.r[i] * exp_so3(&(-h * axis));
        let fd = (energy_of(&plus)? - energy_of(&minus)?) / (2.0 * h);
        let rel = (grad.r[i][k] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Assemble the gradient at `state` and compare it against finite
/// differences; see [`compare_gradient`] for the metric and sampling.
pub fn check_gradient(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    bc: &BoundaryCondition,
    h: f64,
) -> Result<f64> {
    let fixed = bc.dirichlet_nodes(mesh);
    let grad = assemble_gradient(mesh, state, p, f, &fixed)?;
    compare_gradient(mesh, state, p, f, &fixed, h, &grad)
}
