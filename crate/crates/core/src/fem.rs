//! P1 triangle discretization on the unit disk.
//!
//! Meshes store immutable geometry (nodes, positively oriented triangles,
//! boundary extracted from edge incidence) together with precomputed element
//! areas, shape-function gradients, and mass-lumped nodal weights.  The disk
//! mesh starts from a hexagonal fan and is refined by edge bisection with
//! boundary nodes projected back onto the unit circle.
//!
//! Discrete energy: the membrane density is integrated by *vertex lumping*
//! `(A_e/3) Σ_v W(Dm_e, R_v)` so that the discrete energy is a smooth
//! function of the nodal rotations; the uni-constant curvature term uses
//! one-point quadrature (it only depends on the elementwise-constant rotation
//! gradients) and the general curvature mode is vertex-lumped as well.  The
//! gradient assembly differentiates exactly this discrete energy, so finite
//! differences of [`assemble_energy`] agree with [`assemble_gradient`] to
//! quadrature-free accuracy.
//!
//! Assembly runs on a private thread pool honoring `SHELL_THREADS`; element
//! contributions are collected in element order and reduced sequentially, so
//! results are bitwise identical for any thread count.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::energy::{
    self, curvature_density_raw, load_potential, membrane_parts_raw, CurvatureMode, EnergyReport,
    MaterialParams,
};
use crate::error::{Result, ShellError};
use crate::so3::{self, Mat3, Mat3x2, Rotation, Vec3};

/// Planar node coordinates.
pub type Vec2 = Vector2<f64>;

/// Triangles with signed area at or below this bound are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Maximum refinement level accepted by [`make_disk_mesh`].
pub const MAX_REFINEMENT_LEVEL: u32 = 8;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Ok(v) = std::env::var("SHELL_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n > 0 {
                    builder = builder.num_threads(n);
                }
            }
        }
        builder.build().expect("failed to build assembly thread pool")
    })
}

/// Format a float with enough digits to round-trip exactly through text.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Immutable P1 triangle mesh with precomputed element geometry.
#[derive(Clone, Debug)]
pub struct Mesh {
    nodes: Vec<Vec2>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
    areas: Vec<f64>,
    shape_grads: Vec<[Vec2; 3]>,
    lumped_areas: Vec<f64>,
    total_area: f64,
}

impl Mesh {
    /// Build a mesh from nodes and positively oriented triangles, validating
    /// indices, orientation/degeneracy, and edge manifoldness, and extracting
    /// the boundary (edges incident to exactly one triangle).
    pub fn new(nodes: Vec<Vec2>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(ShellError::invalid(format!("mesh needs at least 3 nodes, got {n}")));
        }
        if triangles.is_empty() {
            return Err(ShellError::invalid("mesh needs at least one triangle"));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut shape_grads = Vec::with_capacity(triangles.len());
        let mut lumped_areas = vec![0.0; n];
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for (e, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(ShellError::invalid(format!(
                        "triangle {e} references node {v}, but the mesh has {n} nodes"
                    )));
                }
            }
            let [i, j, k] = *tri;
            let (a, b, c) = (nodes[i], nodes[j], nodes[k]);
            let double_area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            let area = 0.5 * double_area;
            if area <= MIN_TRIANGLE_AREA {
                return Err(ShellError::DegenerateTriangle { element: e, area });
            }
            areas.push(area);
            // ∇φ_i for the linear shape function that is 1 at node i.
            let grads = [
                Vec2::new(b.y - c.y, c.x - b.x) / double_area,
                Vec2::new(c.y - a.y, a.x - c.x) / double_area,
                Vec2::new(a.y - b.y, b.x - a.x) / double_area,
            ];
            shape_grads.push(grads);
            for &v in tri {
                lumped_areas[v] += area / 3.0;
            }
            for (p, q) in [(i, j), (j, k), (k, i)] {
                let key = (p.min(q), p.max(q));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        let mut is_boundary = vec![false; n];
        for (&(p, q), &count) in &edge_count {
            if count > 2 {
                return Err(ShellError::invalid(format!(
                    "edge ({p}, {q}) is shared by {count} triangles; the mesh is not manifold"
                )));
            }
            if count == 1 {
                is_boundary[p] = true;
                is_boundary[q] = true;
            }
        }
        let boundary_nodes: Vec<usize> = (0..n).filter(|&v| is_boundary[v]).collect();
        let total_area = areas.iter().sum();
        Ok(Mesh {
            nodes,
            triangles,
            boundary_nodes,
            is_boundary,
            areas,
            shape_grads,
            lumped_areas,
            total_area,
        })
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary node indices in increasing order.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Total reference area (sum of element areas).
    pub fn area(&self) -> f64 {
        self.total_area
    }

    pub fn element_area(&self, e: usize) -> f64 {
        self.areas[e]
    }

    /// Shape-function gradients `[∇φ_{i}, ∇φ_{j}, ∇φ_{k}]` of element `e`.
    pub fn shape_gradients(&self, e: usize) -> &[Vec2; 3] {
        &self.shape_grads[e]
    }

    /// Mass-lumped nodal weights `w_i = Σ_{e ∋ i} A_e / 3`.
    pub fn lumped_node_areas(&self) -> &[f64] {
        &self.lumped_areas
    }

    /// Serialize to the plain-text mesh format:
    /// `nodes N` / N coordinate lines / `triangles M` / M index triples /
    /// `boundary B` / B node indices.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("nodes {}\n", self.nodes.len()));
        for p in &self.nodes {
            s.push_str(&format!("{} {}\n", format_f64(p.x), format_f64(p.y)));
        }
        s.push_str(&format!("triangles {}\n", self.triangles.len()));
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s.push_str(&format!("boundary {}\n", self.boundary_nodes.len()));
        for b in &self.boundary_nodes {
            s.push_str(&format!("{b}\n"));
        }
        s
    }

    /// Parse the plain-text format, rebuild all derived data, and verify that
    /// the stored boundary list matches the boundary recomputed from the
    /// triangle topology.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        fn next_usize<'a>(
            tokens: &mut impl Iterator<Item = &'a str>,
            what: &str,
        ) -> Result<usize> {
            let t = tokens
                .next()
                .ok_or_else(|| ShellError::Parse(format!("missing {what}")))?;
            t.parse()
                .map_err(|_| ShellError::Parse(format!("invalid {what}: '{t}'")))
        }
        fn next_f64<'a>(tokens: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<f64> {
            let t = tokens
                .next()
                .ok_or_else(|| ShellError::Parse(format!("missing {what}")))?;
            t.parse()
                .map_err(|_| ShellError::Parse(format!("invalid {what}: '{t}'")))
        }
        fn expect_word<'a>(tokens: &mut impl Iterator<Item = &'a str>, word: &str) -> Result<()> {
            match tokens.next() {
                Some(t) if t == word => Ok(()),
                Some(t) => Err(ShellError::Parse(format!("expected '{word}', found '{t}'"))),
                None => Err(ShellError::Parse(format!("expected '{word}', found end of input"))),
            }
        }
        expect_word(&mut tokens, "nodes")?;
        let n = next_usize(&mut tokens, "node count")?;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let x = next_f64(&mut tokens, &format!("x coordinate of node {i}"))?;
            let y = next_f64(&mut tokens, &format!("y coordinate of node {i}"))?;
            nodes.push(Vec2::new(x, y));
        }
        expect_word(&mut tokens, "triangles")?;
        let m = next_usize(&mut tokens, "triangle count")?;
        let mut triangles = Vec::with_capacity(m);
        for e in 0..m {
            let i = next_usize(&mut tokens, &format!("vertex 0 of triangle {e}"))?;
            let j = next_usize(&mut tokens, &format!("vertex 1 of triangle {e}"))?;
            let k = next_usize(&mut tokens, &format!("vertex 2 of triangle {e}"))?;
            triangles.push([i, j, k]);
        }
        expect_word(&mut tokens, "boundary")?;
        let b = next_usize(&mut tokens, "boundary count")?;
        let mut listed = Vec::with_capacity(b);
        for i in 0..b {
            listed.push(next_usize(&mut tokens, &format!("boundary node {i}"))?);
        }
        if let Some(t) = tokens.next() {
            return Err(ShellError::Parse(format!("unexpected trailing token '{t}'")));
        }
        let mesh = Mesh::new(nodes, triangles)?;
        let mut sorted = listed.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != mesh.boundary_nodes {
            return Err(ShellError::Parse(format!(
                "stored boundary list ({} nodes) disagrees with the boundary recomputed \
                 from the triangle topology ({} nodes)",
                listed.len(),
                mesh.boundary_nodes.len()
            )));
        }
        Ok(mesh)
    }

    /// Write the text format to `path`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| ShellError::io(path, e))
    }

    /// Read the text format from `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ShellError::io(path, e))?;
        Self::from_text(&text)
    }
}

fn refine(nodes: &mut Vec<Vec2>, triangles: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |p: usize, q: usize, nodes: &mut Vec<Vec2>| -> usize {
        let key = (p.min(q), p.max(q));
        *midpoint.entry(key).or_insert_with(|| {
            nodes.push(0.5 * (nodes[p] + nodes[q]));
            nodes.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * triangles.len());
    for &[i, j, k] in triangles {
        let ij = mid(i, j, nodes);
        let jk = mid(j, k, nodes);
        let ki = mid(k, i, nodes);
        out.push([i, ij, ki]);
        out.push([ij, j, jk]);
        out.push([ki, jk, k]);
        out.push([ij, jk, ki]);
    }
    out
}

fn boundary_flags(num_nodes: usize, triangles: &[[usize; 3]]) -> Vec<bool> {
    let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
    for &[i, j, k] in triangles {
        for (p, q) in [(i, j), (j, k), (k, i)] {
            *edge_count.entry((p.min(q), p.max(q))).or_insert(0) += 1;
        }
    }
    let mut flags = vec![false; num_nodes];
    for (&(p, q), &count) in &edge_count {
        if count == 1 {
            flags[p] = true;
            flags[q] = true;
        }
    }
    flags
}

/// Build a triangulation of the closed unit disk: a hexagonal fan around the
/// origin, refined `level` times by edge bisection with boundary nodes
/// projected onto the unit circle after every refinement.
///
/// Node/triangle counts: level 0 has 7 nodes and 6 triangles; each level
/// quadruples the triangles.  `level` is limited to [`MAX_REFINEMENT_LEVEL`].
pub fn make_disk_mesh(level: u32) -> Result<Mesh> {
    if level > MAX_REFINEMENT_LEVEL {
        return Err(ShellError::invalid(format!(
            "refinement level {level} exceeds the maximum {MAX_REFINEMENT_LEVEL}"
        )));
    }
    let mut nodes = vec![Vec2::zeros()];
    for k in 0..6 {
        let theta = std::f64::consts::FRAC_PI_3 * k as f64;
        nodes.push(Vec2::new(theta.cos(), theta.sin()));
    }
    let mut triangles: Vec<[usize; 3]> = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    for _ in 0..level {
        triangles = refine(&mut nodes, &triangles);
        let flags = boundary_flags(nodes.len(), &triangles);
        for (v, &on_boundary) in flags.iter().enumerate() {
            if on_boundary {
                let r = nodes[v].norm();
                nodes[v] /= r;
            }
        }
    }
    Mesh::new(nodes, triangles)
}

/// Discrete shell configuration: one midsurface position and one
/// microrotation per mesh node.
#[derive(Clone, Debug)]
pub struct ShellState {
    /// Midsurface positions.
    pub m: Vec<Vec3>,
    /// Nodal microrotations.
    pub r: Vec<Rotation>,
}

impl ShellState {
    /// Combine position and rotation fields of equal length.
    pub fn new(m: Vec<Vec3>, r: Vec<Rotation>) -> Result<Self> {
        if m.len() != r.len() {
            return Err(ShellError::SizeMismatch {
                what: "state rotation field",
                expected: m.len(),
                got: r.len(),
            });
        }
        Ok(ShellState { m, r })
    }

    pub fn num_nodes(&self) -> usize {
        self.m.len()
    }

    /// Re-project every nodal rotation onto SO(3) (polar projection).
    pub fn renormalize(&mut self) -> Result<()> {
        for r in &mut self.r {
            *r = so3::polar_project(r.matrix())?;
        }
        Ok(())
    }

    /// Largest deviation `‖RᵀR − I‖` over all nodes.
    pub fn max_orthogonality_deviation(&self) -> f64 {
        self.r
            .iter()
            .map(|r| r.orthogonality_deviation())
            .fold(0.0, f64::max)
    }
}

/// Dirichlet data on the mesh boundary.
#[derive(Clone, Debug)]
pub enum BoundaryCondition {
    /// No constraint.
    Free,
    /// Pin boundary node `(x, y)` to `(r·x, r·y, 0)` with `0 < r ≤ 1`.
    RadialCompression(f64),
    /// Explicit positions, one per boundary node in `boundary_nodes()` order.
    Fixed(Vec<Vec3>),
}

impl BoundaryCondition {
    /// Validate against a mesh: the compression ratio must lie in `(0, 1]`
    /// and fixed data must match the boundary node count.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        match self {
            BoundaryCondition::Free => Ok(()),
            BoundaryCondition::RadialCompression(r) => {
                if !(*r > 0.0 && *r <= 1.0) {
                    Err(ShellError::invalid(format!(
                        "compression ratio must lie in (0, 1], got {r}"
                    )))
                } else {
                    Ok(())
                }
            }
            BoundaryCondition::Fixed(values) => {
                if values.len() != mesh.boundary_nodes().len() {
                    Err(ShellError::SizeMismatch {
                        what: "fixed boundary values",
                        expected: mesh.boundary_nodes().len(),
                        got: values.len(),
                    })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Nodes whose midsurface position is constrained.
    pub fn dirichlet_nodes(&self, mesh: &Mesh) -> Vec<usize> {
        match self {
            BoundaryCondition::Free => Vec::new(),
            _ => mesh.boundary_nodes().to_vec(),
        }
    }
}

/// Overwrite constrained midsurface positions with their boundary data.
/// Rotations are never constrained.
pub fn apply_boundary(state: &mut ShellState, bc: &BoundaryCondition, mesh: &Mesh) -> Result<()> {
    bc.validate(mesh)?;
    if state.num_nodes() != mesh.num_nodes() {
        return Err(ShellError::SizeMismatch {
            what: "state nodes",
            expected: mesh.num_nodes(),
            got: state.num_nodes(),
        });
    }
    match bc {
        BoundaryCondition::Free => {}
        BoundaryCondition::RadialCompression(r) => {
            for &v in mesh.boundary_nodes() {
                let p = mesh.nodes()[v];
                state.m[v] = Vec3::new(r * p.x, r * p.y, 0.0);
            }
        }
        BoundaryCondition::Fixed(values) => {
            for (i, &v) in mesh.boundary_nodes().iter().enumerate() {
                state.m[v] = values[i];
            }
        }
    }
    Ok(())
}

/// Initial guess for a radial-compression solve: boundary nodes at
/// `(r·x, r·y, 0)`, interior nodes lifted to a shallow cone
/// `(x, y, 0.1·(1 − ρ))` with `ρ = |(x,y)|`, identity rotations everywhere.
pub fn initial_state(mesh: &Mesh, r: f64) -> Result<ShellState> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(ShellError::invalid(format!(
            "compression ratio must lie in (0, 1], got {r}"
        )));
    }
    let mut m = Vec::with_capacity(mesh.num_nodes());
    for (v, p) in mesh.nodes().iter().enumerate() {
        if mesh.is_boundary(v) {
            m.push(Vec3::new(r * p.x, r * p.y, 0.0));
        } else {
            let rho = p.norm();
            m.push(Vec3::new(p.x, p.y, 0.1 * (1.0 - rho)));
        }
    }
    let rot = vec![Rotation::identity(); mesh.num_nodes()];
    ShellState::new(m, rot)
}

/// Elementwise-constant discrete gradients on one triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementGradients {
    /// Midsurface deformation gradient `Dm = Σ_v m_v ∇φ_vᵀ`.
    pub dm: Mat3x2,
    /// Componentwise rotation gradient `∂ₓR = Σ_v (∇φ_v)_x R_v`.
    pub dxr: Mat3,
    /// Componentwise rotation gradient `∂ᵧR`.
    pub dyr: Mat3,
    /// Polar projection of the vertex-averaged rotation.
    pub r_c: Rotation,
}

fn element_fields(mesh: &Mesh, state: &ShellState, e: usize) -> (Mat3x2, Mat3, Mat3) {
    let tri = mesh.triangles()[e];
    let grads = mesh.shape_gradients(e);
    let mut dm = Mat3x2::zeros();
    let mut dxr = Mat3::zeros();
    let mut dyr = Mat3::zeros();
    for (v, &node) in tri.iter().enumerate() {
        let g = grads[v];
        dm += state.m[node] * g.transpose();
        dxr += g.x * state.r[node].matrix();
        dyr += g.y * state.r[node].matrix();
    }
    (dm, dxr, dyr)
}

/// Discrete gradients and centroid rotation of element `e`.
pub fn element_gradients(mesh: &Mesh, state: &ShellState, e: usize) -> Result<ElementGradients> {
    if e >= mesh.num_triangles() {
        return Err(ShellError::invalid(format!(
            "element index {e} out of range ({} triangles)",
            mesh.num_triangles()
        )));
    }
    check_state_size(mesh, state)?;
    let (dm, dxr, dyr) = element_fields(mesh, state, e);
    let tri = mesh.triangles()[e];
    let avg = (state.r[tri[0]].matrix() + state.r[tri[1]].matrix() + state.r[tri[2]].matrix())
        / 3.0;
    let r_c = so3::polar_project(&avg)?;
    Ok(ElementGradients { dm, dxr, dyr, r_c })
}

fn check_state_size(mesh: &Mesh, state: &ShellState) -> Result<()> {
    if state.num_nodes() != mesh.num_nodes() {
        return Err(ShellError::SizeMismatch {
            what: "state nodes",
            expected: mesh.num_nodes(),
            got: state.num_nodes(),
        });
    }
    Ok(())
}

fn check_force_size(mesh: &Mesh, f: Option<&[Vec3]>) -> Result<()> {
    if let Some(f) = f {
        if f.len() != mesh.num_nodes() {
            return Err(ShellError::SizeMismatch {
                what: "body force values",
                expected: mesh.num_nodes(),
                got: f.len(),
            });
        }
    }
    Ok(())
}

/// Total discrete energy, itemized.  The membrane and general curvature
/// densities are vertex-lumped, the uni-constant curvature term uses
/// one-point quadrature, and the load term is the mass-lumped potential
/// `+Σ w_i ⟨f_i, m_i⟩`.
pub fn assemble_energy(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
) -> Result<EnergyReport> {
    p.validate()?;
    check_state_size(mesh, state)?;
    check_force_size(mesh, f)?;
    // (stretch, drill, shear, elongation, curvature) per element
    let contributions: Vec<[f64; 5]> = pool().install(|| {
        (0..mesh.num_triangles())
            .into_par_iter()
            .map(|e| {
                let (dm, dxr, dyr) = element_fields(mesh, state, e);
                let tri = mesh.triangles()[e];
                let area = mesh.element_area(e);
                let mut out = [0.0; 5];
                for &node in &tri {
                    let r = state.r[node].matrix();
                    let parts = membrane_parts_raw(&dm, r, p);
                    out[0] += area / 3.0 * parts.stretch;
                    out[1] += area / 3.0 * parts.drill;
                    out[2] += area / 3.0 * parts.transverse_shear;
                    out[3] += area / 3.0 * parts.elongation;
                }
                match p.curvature {
                    CurvatureMode::UniConstant => {
                        out[4] = area
                            * curvature_density_raw(&dxr, &dyr, state.r[tri[0]].matrix(), p);
                    }
                    CurvatureMode::General => {
                        for &node in &tri {
                            out[4] += area / 3.0
                                * curvature_density_raw(&dxr, &dyr, state.r[node].matrix(), p);
                        }
                    }
                }
                out
            })
            .collect()
    });
    // Compensated (Neumaier) sums: the optimizer compares energies of nearby
    // states, so the totals should carry rounding at the level of a single
    // term rather than one that grows with the element count.
    let mut sums = [0.0f64; 5];
    let mut comps = [0.0f64; 5];
    for c in &contributions {
        for k in 0..5 {
            let t = sums[k] + c[k];
            comps[k] += if sums[k].abs() >= c[k].abs() {
                (sums[k] - t) + c[k]
            } else {
                (c[k] - t) + sums[k]
            };
            sums[k] = t;
        }
    }
    let mut report = EnergyReport::default();
    report.stretch = sums[0] + comps[0];
    report.drill = sums[1] + comps[1];
    report.transverse_shear = sums[2] + comps[2];
    report.elongation = sums[3] + comps[3];
    report.curvature = sums[4] + comps[4];
    if let Some(f) = f {
        report.load = load_potential(&state.m, f, mesh)?;
    }
    Ok(report.finish())
}

/// Diagnostic energy with all densities evaluated at the projected centroid
/// rotation (one-point quadrature throughout).  Not used by the solver; it
/// serves as an independent quadrature for convergence comparisons.
pub fn assemble_energy_projected_centroid(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
) -> Result<f64> {
    p.validate()?;
    check_state_size(mesh, state)?;
    check_force_size(mesh, f)?;
    let mut total = 0.0;
    for e in 0..mesh.num_triangles() {
        let eg = element_gradients(mesh, state, e)?;
        let area = mesh.element_area(e);
        total += area
            * (energy::membrane_density(&eg.dm, &eg.r_c, p)
                + energy::curvature_density(&eg.dxr, &eg.dyr, &eg.r_c, p));
    }
    if let Some(f) = f {
        total += load_potential(&state.m, f, mesh)?;
    }
    Ok(total)
}

/// Riemannian gradient of the discrete energy: a translation per node and a
/// rotation tangent coefficient `γ_i ∈ ℝ³` per node, defined by
/// `d/dt E(…, R_i exp(t·Anti(w)), …)|₀ = ⟨γ_i, w⟩`.
#[derive(Clone, Debug)]
pub struct Gradient {
    /// Derivatives with respect to nodal positions.
    pub m: Vec<Vec3>,
    /// Rotation tangent coefficients.
    pub r: Vec<Vec3>,
}

impl Gradient {
    /// Euclidean norm over all position and rotation components.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.m.iter().map(|v| v.norm_squared()).sum::<f64>()
            + self.r.iter().map(|v| v.norm_squared()).sum::<f64>();
        s.sqrt()
    }

    /// Largest per-node combined magnitude, for diagnostics.
    pub fn max_node_norm(&self) -> f64 {
        self.m
            .iter()
            .zip(&self.r)
            .map(|(a, b)| (a.norm_squared() + b.norm_squared()).sqrt())
            .fold(0.0, f64::max)
    }
}

struct ElementGrad {
    gm: [Vec3; 3],
    gr: [Mat3; 3],
}

/// Exact gradient of the discrete energy of [`assemble_energy`].
///
/// `fixed` lists nodes whose *positions* are Dirichlet-constrained; their
/// translation gradient entries are zeroed.  Rotations are never constrained.
pub fn assemble_gradient(
    mesh: &Mesh,
    state: &ShellState,
    p: &MaterialParams,
    f: Option<&[Vec3]>,
    fixed: &[usize],
) -> Result<Gradient> {
    p.validate()?;
    check_state_size(mesh, state)?;
    check_force_size(mesh, f)?;
    for &v in fixed {
        if v >= mesh.num_nodes() {
            return Err(ShellError::invalid(format!(
                "fixed node index {v} out of range ({} nodes)",
                mesh.num_nodes()
            )));
        }
    }
    let element_grads: Vec<ElementGrad> = pool().install(|| {
        (0..mesh.num_triangles())
            .into_par_iter()
            .map(|e| {
                let (dm, dxr, dyr) = element_fields(mesh, state, e);
                let tri = mesh.triangles()[e];
                let grads = mesh.shape_gradients(e);
                let area = mesh.element_area(e);
                let third = area / 3.0;
                let mut gm = [Vec3::zeros(); 3];
                let mut gr = [Mat3::zeros(); 3];
                // Membrane: Σ_v (A/3) W(Dm, R_v).
                let mut d_dm_sum = Mat3x2::zeros();
                for (v, &node) in tri.iter().enumerate() {
                    let mg = energy::membrane_grad(&dm, state.r[node].matrix(), p);
                    d_dm_sum += mg.d_dm;
                    gr[v] += third * mg.d_r;
                }
                for (w, g) in grads.iter().enumerate() {
                    gm[w] += third * (d_dm_sum * g);
                }
                // Curvature.
                match p.curvature {
                    CurvatureMode::UniConstant => {
                        let cg = energy::curvature_grad(&dxr, &dyr, state.r[tri[0]].matrix(), p);
                        for (w, g) in grads.iter().enumerate() {
                            gr[w] += area * (g.x * cg.d_dxr + g.y * cg.d_dyr);
                        }
                    }
                    CurvatureMode::General => {
                        for (v, &node) in tri.iter().enumerate() {
                            let cg = energy::curvature_grad(&dxr, &dyr, state.r[node].matrix(), p);
                            for (w, g) in grads.iter().enumerate() {
                                gr[w] += third * (g.x * cg.d_dxr + g.y * cg.d_dyr);
                            }
                            gr[v] += third * cg.d_r;
                        }
                    }
                }
                ElementGrad { gm, gr }
            })
            .collect()
    });
    let n = mesh.num_nodes();
    let mut gm = vec![Vec3::zeros(); n];
    let mut gr_eucl = vec![Mat3::zeros(); n];
    for (e, eg) in element_grads.iter().enumerate() {
        let tri = mesh.triangles()[e];
        for v in 0..3 {
            gm[tri[v]] += eg.gm[v];
            gr_eucl[tri[v]] += eg.gr[v];
        }
    }
    if let Some(f) = f {
        let w = mesh.lumped_node_areas();
        for i in 0..n {
            gm[i] += w[i] * f[i];
        }
    }
    // Project Euclidean rotation gradients onto the tangent coefficients:
    // γ = 2 axl(skew(Rᵀ G)).
    let mut gr = Vec::with_capacity(n);
    for i in 0..n {
        let s = so3::skew_part(&(state.r[i].matrix().transpose() * gr_eucl[i]));
        gr.push(2.0 * so3::axl_unchecked(&s));
    }
    for &v in fixed {
        gm[v] = Vec3::zeros();
    }
    Ok(Gradient { m: gm, r: gr })
}
