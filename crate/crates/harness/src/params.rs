//! Run parameters: defaults, the `key = value` config file and command-line
//! overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use apint::{Kernel, KernelKind};
use clap::{Args, ValueEnum};
use serde::Deserialize;

/// Kernel families selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Bump,
    Gaussian,
}

impl KernelChoice {
    pub fn kernel(self) -> Kernel<f64> {
        match self {
            KernelChoice::Bump => Kernel::of_kind(KernelKind::Bump),
            KernelChoice::Gaussian => Kernel::of_kind(KernelKind::Gaussian),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelChoice::Bump => "bump",
            KernelChoice::Gaussian => "gaussian",
        }
    }
}

/// Default averaging windows, in multiples of the coarse step.
pub const DEFAULT_WINDOW_MULTIPLES: [f64; 6] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0];

/// Default windows for the averaging-error oracle (absolute).
pub const DEFAULT_ORACLE_WINDOWS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub epsilon: Vec<f64>,
    pub froude: f64,
    pub nx: usize,
    pub dt_fine: f64,
    pub dt_coarse: f64,
    /// Averaging windows `T₀`; empty means the default grid.
    pub window: Vec<f64>,
    pub kernel: KernelChoice,
    /// Quadrature nodes per average; `None` picks enough to resolve the
    /// fastest triad phase.
    pub quad_points: Option<usize>,
    pub substeps: usize,
    pub tol: f64,
    /// `None` means one iteration per slab, where Parareal is exact.
    pub max_iters: Option<usize>,
    pub t_end: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    /// Width of the Gaussian initial height field.
    pub width: f64,
    /// Exponent of the `ΔT ε^{−s}` heuristic.
    pub scaling_exponent: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            epsilon: vec![0.01, 0.1, 1.0],
            froude: 1.0,
            nx: 64,
            dt_fine: 2e-4,
            dt_coarse: 0.1,
            window: Vec::new(),
            kernel: KernelChoice::Bump,
            quad_points: None,
            substeps: 1,
            tol: 1e-7,
            max_iters: None,
            t_end: 1.0,
            out_dir: PathBuf::from("out"),
            workers: 1,
            seed: 0,
            width: 0.5,
            scaling_exponent: 0.2,
        }
    }
}

impl RunParams {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Averaging windows for window sweeps: explicit values or the default
    /// multiples of the coarse step.
    pub fn sweep_windows(&self) -> Vec<f64> {
        if self.window.is_empty() {
            DEFAULT_WINDOW_MULTIPLES.iter().map(|m| m * self.dt_coarse).collect()
        } else {
            self.window.clone()
        }
    }

    pub fn oracle_windows(&self) -> Vec<f64> {
        if self.window.is_empty() {
            DEFAULT_ORACLE_WINDOWS.to_vec()
        } else {
            self.window.clone()
        }
    }

    pub fn n_slabs(&self) -> usize {
        (self.t_end / self.dt_coarse).round() as usize
    }

    pub fn iteration_cap(&self) -> usize {
        self.max_iters.unwrap_or_else(|| self.n_slabs())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_empty() {
            bail!("at least one epsilon is required");
        }
        if self.epsilon.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            bail!("epsilon values must lie in (0, 1]");
        }
        if self.window.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            bail!("windows must be finite and non-negative");
        }
        for (name, v) in [
            ("froude", self.froude),
            ("dt_fine", self.dt_fine),
            ("dt_coarse", self.dt_coarse),
            ("tol", self.tol),
            ("t_end", self.t_end),
            ("width", self.width),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bail!("{name} must be positive, got {v}");
            }
        }
        if self.workers == 0 {
            bail!("workers must be >= 1");
        }
        if self.substeps == 0 {
            bail!("substeps must be >= 1");
        }
        if !(self.scaling_exponent > 0.0 && self.scaling_exponent < 1.0) {
            bail!("scaling_exponent must lie in (0, 1)");
        }
        let slabs = self.t_end / self.dt_coarse;
        if (slabs - slabs.round()).abs() > 1e-9 * slabs.max(1.0) || slabs.round() < 1.0 {
            bail!("t_end = {} is not a multiple of dt_coarse = {}", self.t_end, self.dt_coarse);
        }
        Ok(())
    }
}

/// Command-line flags; each overrides the corresponding config-file key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scale separations, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long)]
    pub froude: Option<f64>,
    /// Number of Fourier modes.
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub dt_fine: Option<f64>,
    #[arg(long)]
    pub dt_coarse: Option<f64>,
    /// Averaging windows T0, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub window: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// Coarse substeps per slab.
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Sweep cells evaluated concurrently.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Width of the Gaussian initial height field.
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub scaling_exponent: Option<f64>,
}

impl Flags {
    /// Config file (if any) with the flags applied on top.
    pub fn resolve(&self) -> Result<RunParams> {
        let mut p = match &self.config {
            Some(path) => RunParams::from_file(path)?,
            None => RunParams::default(),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field {
                    p.$field = v.clone();
                })*
            };
        }
        take!(epsilon, froude, nx, dt_fine, dt_coarse, window, kernel, substeps, tol, t_end, out_dir, workers, seed, width, scaling_exponent);
        if self.quad_points.is_some() {
            p.quad_points = self.quad_points;
        }
        if self.max_iters.is_some() {
            p.max_iters = self.max_iters;
        }
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("apint-params-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "epsilon = [0.5]\nnx = 32\nkernel = \"gaussian\"\nquad_points = 40\n").unwrap();
        let flags = Flags {
            config: Some(path),
            nx: Some(16),
            ..Flags::default()
        };
        let p = flags.resolve().unwrap();
        assert_eq!(p.epsilon, vec![0.5]);
        assert_eq!(p.nx, 16);
        assert_eq!(p.kernel, KernelChoice::Gaussian);
        assert_eq!(p.quad_points, Some(40));
        assert_eq!(p.dt_fine, 2e-4);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunParams>("epsilonn = [1.0]").is_err());
    }

    #[test]
    fn default_grid_is_relative_to_coarse_step() {
        let p = RunParams::default();
        assert_eq!(p.sweep_windows(), vec![0.0125, 0.025, 0.05, 0.1, 0.2, 0.4]);
        assert_eq!(p.n_slabs(), 10);
        assert_eq!(p.iteration_cap(), 10);
        p.validate().unwrap();
    }

    #[test]
    fn slab_cover_is_checked() {
        let p = RunParams {
            t_end: 0.95,
            dt_coarse: 0.1,
            ..RunParams::default()
        };
        assert!(p.validate().is_err());
    }
}
