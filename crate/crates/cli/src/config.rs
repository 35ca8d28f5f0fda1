//! Flat `key = value` experiment configuration.
//!
//! The format is line-oriented ASCII: one assignment per line, `#` starts a
//! comment, blank lines are ignored.  Command-line `--set key=value`
//! overrides reuse the same key table, so a config file plus its overrides
//! fully records an experiment.

use cosserat_shell::energy::{EnergyVariant, MaterialParams, ShearMean};
use cosserat_shell::fem::BoundaryCondition;
use cosserat_shell::optim::SolveOptions;
use cosserat_shell::{Result, ShellError};

/// Parameters of one radial-compression experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Shear modulus.
    pub mu: f64,
    /// Lamé parameter.
    pub lambda: f64,
    /// Couple modulus as a fraction of `mu` (`mu_c = mu_c_ratio·mu`).
    pub mu_c_ratio: f64,
    /// Internal length scale of the curvature term.
    pub l_c: f64,
    /// Compressed boundary radius in (0, 1].
    pub r: f64,
    /// Disk mesh refinement level.
    pub refinement_level: u32,
    /// Transverse shear averaging rule.
    pub shear_mean: ShearMean,
    /// Membrane energy family.
    pub variant: EnergyVariant,
    /// Solver stopping tolerance on the gradient norm.
    pub grad_tol: f64,
    /// Solver iteration cap.
    pub max_iters: usize,
    /// Prefix of the output files (`<prefix>_nodes.csv`, `<prefix>.vtk`,
    /// `<prefix>_summary.txt`).
    pub output_prefix: String,
    /// Seed of the initial rotation jitter.
    pub seed: u64,
    /// Amplitude of the initial rotation jitter (0 disables it).
    pub jitter: f64,
}

/// Paper values used when a config does not override the moduli.
pub const DEFAULT_MU: f64 = 2.7191e4;
pub const DEFAULT_LAMBDA: f64 = 4.4364e4;

impl ExperimentConfig {
    /// Defaults with the required keys (`mu_c_ratio`, `L_c`, `r`) left unset.
    pub fn with_defaults() -> ExperimentConfig {
        ExperimentConfig {
            mu: DEFAULT_MU,
            lambda: DEFAULT_LAMBDA,
            mu_c_ratio: f64::NAN,
            l_c: f64::NAN,
            r: f64::NAN,
            refinement_level: 4,
            shear_mean: ShearMean::Harmonic,
            variant: EnergyVariant::GammaLimit,
            grad_tol: 1e-6,
            max_iters: 50_000,
            output_prefix: "shell_out".to_string(),
            seed: 0,
            jitter: 0.0,
        }
    }

    /// Parse a configuration file.  `mu_c_ratio`, `L_c`, and `r` are
    /// required; everything else has defaults.
    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        let cfg = Self::parse(text)?;
        cfg.check_required()?;
        Ok(cfg)
    }

    /// Read and parse a configuration file from disk.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ShellError::invalid(format!("could not read {}: {e}", path.display()))
        })?;
        Self::from_text(&text)
    }

    /// Read a configuration file and apply `key=value` overrides before
    /// enforcing the required keys, so overrides may supply them.
    pub fn load(
        path: impl AsRef<std::path::Path>,
        overrides: &[String],
    ) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ShellError::invalid(format!("could not read {}: {e}", path.display()))
        })?;
        let mut cfg = Self::parse(&text)?;
        for kv in overrides {
            cfg.apply_override(kv)?;
        }
        cfg.check_required()?;
        Ok(cfg)
    }

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = Self::with_defaults();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ShellError::Parse(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Apply one `key=value` override (the `--set` form).
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ShellError::invalid(format!(
                "override `{assignment}` is not of the form key=value"
            )));
        };
        self.set(key.trim(), value.trim())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num(key: &str, value: &str) -> Result<f64> {
            value.parse().map_err(|_| {
                ShellError::Parse(format!("value `{value}` for key `{key}` is not a number"))
            })
        }
        match key {
            "mu" => self.mu = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "mu_c_ratio" => self.mu_c_ratio = num(key, value)?,
            "L_c" => self.l_c = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "refinement_level" => {
                self.refinement_level = value.parse().map_err(|_| {
                    ShellError::Parse(format!("refinement_level `{value}` is not an integer"))
                })?
            }
            "shear_mean" => {
                self.shear_mean = match value {
                    "harmonic" => ShearMean::Harmonic,
                    "arithmetic" => ShearMean::Arithmetic,
                    other => {
                        return Err(ShellError::Parse(format!(
                            "shear_mean must be `harmonic` or `arithmetic`, got `{other}`"
                        )))
                    }
                }
            }
            "variant" => {
                self.variant = match value {
                    "gamma_limit" => EnergyVariant::GammaLimit,
                    "engineering" => EnergyVariant::Engineering,
                    "normalized_p" | "normalized" => EnergyVariant::NormalizedP,
                    other => {
                        return Err(ShellError::Parse(format!(
                            "variant must be `gamma_limit`, `engineering`, or `normalized_p`, got `{other}`"
                        )))
                    }
                }
            }
            "grad_tol" => self.grad_tol = num(key, value)?,
            "max_iters" => {
                self.max_iters = value.parse().map_err(|_| {
                    ShellError::Parse(format!("max_iters `{value}` is not an integer"))
                })?
            }
            "output_prefix" => self.output_prefix = value.to_string(),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| ShellError::Parse(format!("seed `{value}` is not an integer")))?
            }
            "jitter" => self.jitter = num(key, value)?,
            other => {
                return Err(ShellError::Parse(format!(
                    "unknown configuration key `{other}`"
                )))
            }
        }
        Ok(())
    }

    fn check_required(&self) -> Result<()> {
        for (name, value) in [
            ("mu_c_ratio", self.mu_c_ratio),
            ("L_c", self.l_c),
            ("r", self.r),
        ] {
            if value.is_nan() {
                return Err(ShellError::invalid(format!(
                    "missing required configuration key `{name}`"
                )));
            }
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(ShellError::invalid(format!(
                "compression radius r must lie in (0, 1], got {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Expand into material parameters, enforcing their invariants
    /// (including the rejection of harmonic shear with `mu_c = 0`).
    pub fn material_params(&self) -> Result<MaterialParams> {
        MaterialParams::new(
            self.mu,
            self.lambda,
            self.mu_c_ratio * self.mu,
            self.l_c,
            self.shear_mean,
            self.variant,
        )
    }

    /// The radial-compression boundary condition of this experiment.
    pub fn boundary(&self) -> BoundaryCondition {
        BoundaryCondition::RadialCompression(self.r)
    }

    /// Solver options for this experiment.
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            r_jitter: self.jitter,
            m_jitter: self.jitter,
            jitter_seed: self.seed,
            ..SolveOptions::default()
        }
    }
}
