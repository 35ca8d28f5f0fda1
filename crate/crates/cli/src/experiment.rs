//! End-to-end radial-compression experiment: build the disk, start from the
//! spherical-cap guess, minimize the shell energy under the radial boundary
//! condition, then write the state, a VTK view, and a summary of the run.

use std::path::PathBuf;

use cosserat_shell::energy::EnergyReport;
use cosserat_shell::fem::{assemble_energy, initial_state, make_disk_mesh, Mesh, ShellState};
use cosserat_shell::optim::{minimize, SolveStats};
use cosserat_shell::Result;

use crate::config::ExperimentConfig;
use crate::output::{write_state_csv, write_summary, write_vtk};
use crate::wrinkle::{wrinkle_metric, WrinkleMetric};

/// Everything a finished run produced.
pub struct ExperimentOutcome {
    pub mesh: Mesh,
    pub state: ShellState,
    pub stats: SolveStats,
    pub report: EnergyReport,
    pub metric: WrinkleMetric,
    /// Whether the minimizer stopped before the iteration cap.
    pub converged: bool,
    pub csv_path: PathBuf,
    pub vtk_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Run the experiment described by `config` and write its output files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let p = config.material_params()?;
    let mesh = make_disk_mesh(config.refinement_level)?;
    let state0 = initial_state(&mesh, config.r)?;
    let bc = config.boundary();
    let opts = config.solve_options();

    let (state, stats) = minimize(&mesh, state0, &p, None, &bc, &opts)?;
    let report = assemble_energy(&mesh, &state, &p, None)?;
    let ring_count = 1usize << config.refinement_level;
    let metric = wrinkle_metric(&state, &mesh, ring_count)?;
    let converged = stats.iterations < config.max_iters;

    let csv_path = PathBuf::from(format!("{}_nodes.csv", config.output_prefix));
    let vtk_path = PathBuf::from(format!("{}.vtk", config.output_prefix));
    let summary_path = PathBuf::from(format!("{}_summary.txt", config.output_prefix));
    write_state_csv(&csv_path, &mesh, &state)?;
    write_vtk(&vtk_path, &mesh, &state)?;

    let mut entries: Vec<(&str, String)> = vec![
        ("mu", format!("{:e}", config.mu)),
        ("lambda", format!("{:e}", config.lambda)),
        ("mu_c_ratio", format!("{:e}", config.mu_c_ratio)),
        ("L_c", format!("{:e}", config.l_c)),
        ("r", format!("{}", config.r)),
        ("refinement_level", format!("{}", config.refinement_level)),
        ("nodes", format!("{}", mesh.num_nodes())),
        ("triangles", format!("{}", mesh.num_triangles())),
        ("converged", format!("{converged}")),
        ("iterations", format!("{}", stats.iterations)),
        ("final_energy", format!("{:.16e}", stats.final_energy)),
        ("final_grad_norm", format!("{:.16e}", stats.final_grad_norm)),
        ("wall_time_s", format!("{:.3}", stats.wall_time.as_secs_f64())),
        ("energy_total", format!("{:.16e}", report.total)),
        ("energy_stretch", format!("{:.16e}", report.stretch)),
        ("energy_drill", format!("{:.16e}", report.drill)),
        (
            "energy_transverse_shear",
            format!("{:.16e}", report.transverse_shear),
        ),
        ("energy_elongation", format!("{:.16e}", report.elongation)),
        ("energy_curvature", format!("{:.16e}", report.curvature)),
        ("max_amplitude", format!("{:.16e}", metric.max_amplitude)),
        (
            "max_sign_changes",
            format!("{}", metric.max_sign_changes()),
        ),
    ];
    let rings = metric
        .ring_radii
        .iter()
        .zip(&metric.sign_changes)
        .map(|(r, c)| format!("{r:.4}:{c}"))
        .collect::<Vec<_>>()
        .join(" ");
    entries.push(("ring_sign_changes", rings));
    write_summary(&summary_path, &entries)?;

    Ok(ExperimentOutcome {
        mesh,
        state,
        stats,
        report,
        metric,
        converged,
        csv_path,
        vtk_path,
        summary_path,
    })
}
