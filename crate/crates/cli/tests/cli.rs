//! End-to-end smoke tests of the `shell` binary: every subcommand is driven
//! through its public interface and judged on exit code and artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn shell() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shell"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch the shell binary")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "expected exit {code};\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shell_cli_{name}"));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const TINY_RUN: &str = "\
# small, fast compression test
mu = 2.0
lambda = 1.2
mu_c_ratio = 1.0
L_c = 0.3
r = 0.9
refinement_level = 1
grad_tol = 1e-8
max_iters = 20000
";

#[test]
fn run_converges_writes_outputs_and_the_state_reloads() {
    let dir = temp_dir("run");
    let config = write_config(&dir, "tiny.cfg", TINY_RUN);
    let prefix = dir.join("tiny");

    let out = run(shell()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--set")
        .arg(format!("output_prefix={}", prefix.display())));
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("converged"), "{stdout}");

    for suffix in ["_nodes.csv", ".vtk", "_summary.txt"] {
        let path = PathBuf::from(format!("{}{suffix}", prefix.display()));
        assert!(path.exists(), "missing artifact {}", path.display());
    }

    // `residual` accepts the state the run just wrote
    let out = run(shell()
        .arg("residual")
        .arg("--state")
        .arg(format!("{}_nodes.csv", prefix.display()))
        .arg("--config")
        .arg(&config));
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("midsurface residual"), "{stdout}");

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_without_compression_reports_zero_energy() {
    let dir = temp_dir("flat");
    let config = write_config(&dir, "flat.cfg", TINY_RUN);
    let prefix = dir.join("flat");

    let out = run(shell()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--set")
        .arg("r=1.0")
        .arg("--set")
        .arg(format!("output_prefix={}", prefix.display())));
    assert_exit(&out, 0);

    let summary =
        std::fs::read_to_string(format!("{}_summary.txt", prefix.display())).unwrap();
    let energy: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("energy_total = "))
        .expect("summary lists energy_total")
        .trim()
        .parse()
        .unwrap();
    assert!(energy.abs() <= 1e-10, "flat disk energy {energy}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_rejects_bad_configs_with_exit_one() {
    let dir = temp_dir("bad");

    // missing required key
    let missing = write_config(&dir, "missing.cfg", "mu_c_ratio = 1.0\nr = 0.9\n");
    let out = run(shell().arg("run").arg("--config").arg(&missing));
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("L_c"));

    // unknown key names the offender
    let unknown = write_config(&dir, "unknown.cfg", "mu_c_ratio=1\nL_c=1e-3\nr=0.9\nbogus=3\n");
    let out = run(shell().arg("run").arg("--config").arg(&unknown));
    assert_exit(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    // harmonic shear with a vanishing couple modulus is ill-posed
    let illposed = write_config(
        &dir,
        "illposed.cfg",
        "mu_c_ratio = 0\nL_c = 1e-3\nr = 0.95\nshear_mean = harmonic\n",
    );
    let out = run(shell().arg("run").arg("--config").arg(&illposed));
    assert_exit(&out, 1);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("not well-posed"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn iteration_cap_exits_with_code_two() {
    let dir = temp_dir("cap");
    let config = write_config(&dir, "cap.cfg", TINY_RUN);
    let prefix = dir.join("cap");

    let out = run(shell()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .arg("--set")
        .arg("max_iters=3")
        .arg("--set")
        .arg("grad_tol=1e-14")
        .arg("--set")
        .arg(format!("output_prefix={}", prefix.display())));
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("iteration cap"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_subcommand_passes() {
    let out = run(&mut shell().arg("verify"));
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all"), "{stdout}");
    assert!(!stdout.contains("FAIL "), "{stdout}");
}

#[test]
fn grad_check_subcommand_passes() {
    let out = run(shell()
        .arg("grad-check")
        .arg("--level")
        .arg("2")
        .arg("--seed")
        .arg("7"));
    assert_exit(&out, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("gradient check passed"));
}

#[test]
fn mesh_subcommand_emits_a_loadable_mesh() {
    let dir = temp_dir("mesh");
    let path = dir.join("disk.mesh");
    let out = run(shell()
        .arg("mesh")
        .arg("--level")
        .arg("2")
        .arg("--out")
        .arg(&path));
    assert_exit(&out, 0);

    let mesh = cosserat_shell::fem::Mesh::load(&path).unwrap();
    let direct = cosserat_shell::fem::make_disk_mesh(2).unwrap();
    assert_eq!(mesh.num_nodes(), direct.num_nodes());
    assert_eq!(mesh.num_triangles(), direct.num_triangles());
    assert_eq!(mesh.nodes(), direct.nodes());
    std::fs::remove_dir_all(&dir).ok();
}
