//! `shell` — command-line driver for the micropolar shell solver.
//!
//! Subcommands:
//! * `run`        — minimize a radial-compression experiment from a config file
//! * `verify`     — run the built-in algebraic/identity verification suites
//! * `grad-check` — compare the assembled gradient against finite differences
//! * `residual`   — evaluate equilibrium residuals of a saved state
//! * `mesh`       — emit a refined disk mesh as a text file
//!
//! Exit codes: 0 on success (including a converged `run`), 2 when a `run`
//! stops at the iteration cap, and 1 on any configuration or verification
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cosserat_shell::fem::make_disk_mesh;
use cosserat_shell::optim::check_gradient;
use cosserat_shell::so3::exp_so3;
use cosserat_shell::stress::el_residual_weak;
use cosserat_shell::{checks, Result, Vec3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shell_cli::config::ExperimentConfig;
use shell_cli::experiment::run_experiment;
use shell_cli::output::read_state_csv;

#[derive(Parser)]
#[command(
    name = "shell",
    about = "Geometrically nonlinear micropolar membrane shell solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a radial-compression experiment described by a config file.
    Run {
        /// Path to a `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override single keys, e.g. `--set r=0.9 --set L_c=1e-3`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the built-in verification suites and report each identity.
    Verify,
    /// Compare assembled gradients against central finite differences on a
    /// random feasible state.
    GradCheck {
        /// Disk refinement level of the test mesh.
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Seed of the random state.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the weak-form equilibrium residuals of a saved state.
    Residual {
        /// State CSV produced by `run` (the `*_nodes.csv` file).
        #[arg(long)]
        state: PathBuf,
        /// Config file the state was produced with.
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a refined disk mesh and write it as a text file.
    Mesh {
        /// Refinement level (0 is the coarse hexagonal fan).
        #[arg(long)]
        level: u32,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, set } => cmd_run(&config, &set),
        Command::Verify => Ok(cmd_verify()),
        Command::GradCheck { level, seed } => cmd_grad_check(level, seed),
        Command::Residual { state, config } => cmd_residual(&state, &config),
        Command::Mesh { level, out } => cmd_mesh(level, &out),
    }
}

fn cmd_run(path: &PathBuf, overrides: &[String]) -> Result<ExitCode> {
    let config = ExperimentConfig::load(path, overrides)?;
    let outcome = run_experiment(&config)?;
    println!(
        "{} after {} iterations in {:.3} s",
        if outcome.converged {
            "converged"
        } else {
            "stopped at the iteration cap"
        },
        outcome.stats.iterations,
        outcome.stats.wall_time.as_secs_f64()
    );
    println!(
        "energy {:.9e}   gradient norm {:.3e}",
        outcome.report.total, outcome.stats.final_grad_norm
    );
    println!(
        "wrinkles: max amplitude {:.3e}, sign changes per ring {:?}",
        outcome.metric.max_amplitude, outcome.metric.sign_changes
    );
    println!(
        "wrote {}, {}, {}",
        outcome.csv_path.display(),
        outcome.vtk_path.display(),
        outcome.summary_path.display()
    );
    Ok(ExitCode::from(if outcome.converged { 0 } else { 2 }))
}

fn cmd_verify() -> ExitCode {
    let reports = checks::run_all();
    let mut failures = 0;
    for report in &reports {
        println!("{report}");
        if !report.passed() {
            failures += 1;
        }
    }
    if failures == 0 {
        println!("all {} verification suites passed", reports.len());
        ExitCode::from(0)
    } else {
        println!("{failures} of {} verification suites FAILED", reports.len());
        ExitCode::from(1)
    }
}

fn cmd_grad_check(level: u32, seed: u64) -> Result<ExitCode> {
    use cosserat_shell::energy::MaterialParams;
    use cosserat_shell::fem::{BoundaryCondition, ShellState};

    let mesh = make_disk_mesh(level)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let m = mesh
        .nodes()
        .iter()
        .map(|p| {
            Vec3::new(
                p.x + rng.random_range(-0.1..0.1),
                p.y + rng.random_range(-0.1..0.1),
                rng.random_range(-0.1..0.1),
            )
        })
        .collect();
    let r = (0..mesh.num_nodes())
        .map(|_| {
            exp_so3(&Vec3::new(
                rng.random_range(-0.6..0.6),
                rng.random_range(-0.6..0.6),
                rng.random_range(-0.6..0.6),
            ))
        })
        .collect();
    let state = ShellState::new(m, r)?;
    let p = MaterialParams::gamma_limit(2.7191e4, 4.4364e4, 2.7191e4, 1e-3)?;

    let mut worst = 0.0f64;
    for bc in [
        BoundaryCondition::Free,
        BoundaryCondition::RadialCompression(0.9),
    ] {
        let err = check_gradient(&mesh, &state, &p, None, &bc, 1e-6)?;
        println!("level {level}, seed {seed}, {bc:?}: max relative gradient error {err:.3e}");
        worst = worst.max(err);
    }
    if worst <= 1e-5 {
        println!("gradient check passed");
        Ok(ExitCode::from(0))
    } else {
        println!("gradient check FAILED (worst {worst:.3e} > 1e-5)");
        Ok(ExitCode::from(1))
    }
}

fn cmd_residual(state_path: &PathBuf, config_path: &PathBuf) -> Result<ExitCode> {
    let config = ExperimentConfig::from_file(config_path)?;
    let p = config.material_params()?;
    let mesh = make_disk_mesh(config.refinement_level)?;
    let state = read_state_csv(state_path, &mesh)?;
    let fixed = config.boundary().dirichlet_nodes(&mesh);

    let residual = el_residual_weak(&mesh, &state, &p, None, &fixed)?;
    let m_max = residual
        .m
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    let r_max = residual
        .r
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max);
    println!("midsurface residual: max node norm {m_max:.6e}");
    println!("rotation residual:   max node norm {r_max:.6e}");
    println!("combined norm:       {:.6e}", residual.norm());
    Ok(ExitCode::from(0))
}

fn cmd_mesh(level: u32, out: &PathBuf) -> Result<ExitCode> {
    let mesh = make_disk_mesh(level)?;
    mesh.save(out)?;
    println!(
        "wrote level-{level} disk mesh ({} nodes, {} triangles) to {}",
        mesh.num_nodes(),
        mesh.num_triangles(),
        out.display()
    );
    Ok(ExitCode::from(0))
}
