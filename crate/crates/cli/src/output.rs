//! On-disk state formats: a lossless CSV of the nodal fields and a legacy
//! VTK file for visualisation.
//!
//! The CSV stores one node per row with full `f64` precision so a state can
//! be reloaded and re-evaluated bit-for-bit.  The VTK file places the mesh
//! at the deformed midsurface and attaches the director and the out-of-plane
//! displacement as point data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cosserat_shell::fem::{Mesh, ShellState};
use cosserat_shell::{Mat3, Result, Rotation, ShellError, Vec3};

/// CSV column layout; the rotation is stored row-major.
const CSV_HEADER: &str = "x,y,mx,my,mz,r11,r12,r13,r21,r22,r23,r31,r32,r33";

/// Render an `f64` with 17 significant digits, enough to reproduce the bit
/// pattern on re-parse.
fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write the nodal state as CSV next to the reference coordinates.
pub fn write_state_csv(path: impl AsRef<Path>, mesh: &Mesh, state: &ShellState) -> Result<()> {
    let mut text = String::new();
    text.push_str(CSV_HEADER);
    text.push('\n');
    for (i, p) in mesh.nodes().iter().enumerate() {
        let m = state.m[i];
        let r = state.r[i].matrix();
        let mut fields = vec![
            format_f64(p.x),
            format_f64(p.y),
            format_f64(m.x),
            format_f64(m.y),
            format_f64(m.z),
        ];
        for row in 0..3 {
            for col in 0..3 {
                fields.push(format_f64(r[(row, col)]));
            }
        }
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    fs::write(path.as_ref(), text).map_err(|e| {
        ShellError::invalid(format!(
            "could not write {}: {e}",
            path.as_ref().display()
        ))
    })
}

/// Read a state CSV produced by [`write_state_csv`], checking that the
/// reference coordinates match `mesh` and that every rotation block is a
/// valid member of SO(3).
pub fn read_state_csv(path: impl AsRef<Path>, mesh: &Mesh) -> Result<ShellState> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| ShellError::invalid(format!("could not read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(ShellError::Parse(format!(
                "{}: expected header `{CSV_HEADER}`, found `{}`",
                path.display(),
                other.unwrap_or("<empty file>")
            )))
        }
    }
    let mut m = Vec::with_capacity(mesh.num_nodes());
    let mut r = Vec::with_capacity(mesh.num_nodes());
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| {
                    ShellError::Parse(format!(
                        "{} line {}: bad number `{f}`: {e}",
                        path.display(),
                        lineno + 2
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if fields.len() != 14 {
            return Err(ShellError::Parse(format!(
                "{} line {}: expected 14 fields, found {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let i = m.len();
        if i >= mesh.num_nodes() {
            return Err(ShellError::SizeMismatch {
                what: "state rows",
                expected: mesh.num_nodes(),
                got: i + 1,
            });
        }
        let p = mesh.nodes()[i];
        if (fields[0] - p.x).abs() > 1e-9 || (fields[1] - p.y).abs() > 1e-9 {
            return Err(ShellError::Parse(format!(
                "{} line {}: reference coordinates ({}, {}) do not match mesh node {i} ({}, {})",
                path.display(),
                lineno + 2,
                fields[0],
                fields[1],
                p.x,
                p.y
            )));
        }
        m.push(Vec3::new(fields[2], fields[3], fields[4]));
        let mat = Mat3::new(
            fields[5], fields[6], fields[7], fields[8], fields[9], fields[10], fields[11],
            fields[12], fields[13],
        );
        r.push(Rotation::from_matrix(mat)?);
    }
    if m.len() != mesh.num_nodes() {
        return Err(ShellError::SizeMismatch {
            what: "state rows",
            expected: mesh.num_nodes(),
            got: m.len(),
        });
    }
    ShellState::new(m, r)
}

/// Write the deformed surface as a legacy-format VTK unstructured grid with
/// the director field and the out-of-plane displacement attached to points.
pub fn write_vtk(path: impl AsRef<Path>, mesh: &Mesh, state: &ShellState) -> Result<()> {
    let n = mesh.num_nodes();
    let tris = mesh.triangles();
    let mut text = String::new();
    text.push_str("# vtk DataFile Version 3.0\n");
    text.push_str("cosserat shell state\n");
    text.push_str("ASCII\n");
    text.push_str("DATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(text, "POINTS {n} double");
    for m in &state.m {
        let _ = writeln!(text, "{} {} {}", m.x, m.y, m.z);
    }
    let _ = writeln!(text, "CELLS {} {}", tris.len(), 4 * tris.len());
    for t in tris {
        let _ = writeln!(text, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(text, "CELL_TYPES {}", tris.len());
    for _ in tris {
        text.push_str("5\n");
    }
    let _ = writeln!(text, "POINT_DATA {n}");
    text.push_str("VECTORS director double\n");
    for r in &state.r {
        let m = r.matrix();
        let _ = writeln!(text, "{} {} {}", m[(0, 2)], m[(1, 2)], m[(2, 2)]);
    }
    text.push_str("SCALARS out_of_plane double 1\n");
    text.push_str("LOOKUP_TABLE default\n");
    for m in &state.m {
        let _ = writeln!(text, "{}", m.z);
    }
    fs::write(path.as_ref(), text).map_err(|e| {
        ShellError::invalid(format!(
            "could not write {}: {e}",
            path.as_ref().display()
        ))
    })
}

/// Write a flat `key = value` summary file.
pub fn write_summary(path: impl AsRef<Path>, entries: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    for (key, value) in entries {
        let _ = writeln!(text, "{key} = {value}");
    }
    fs::write(path.as_ref(), text).map_err(|e| {
        ShellError::invalid(format!(
            "could not write {}: {e}",
            path.as_ref().display()
        ))
    })
}
