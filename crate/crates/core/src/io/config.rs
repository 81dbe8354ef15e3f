//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//!
//! [grid]
//! dim = 2
//! n = 64
//!
//! [coefficients]          # either alpha/nu or all eight explicit values
//! alpha = 1.0
//! nu = 1.0
//! epsilon = 0.1
//!
//! [stepper]
//! dt = 5e-4
//! t_end = 0.5
//! scheme = "semi-implicit-euler"   # or "imex-bdf2"
//!
//! [regularization]        # optional
//! enabled = true
//! m = 8
//! r = 4.0
//!
//! [initial_condition]
//! preset = "perturbed-director"
//! amplitude = 0.1
//! modes = 4
//!
//! [diagnostics]
//! cadence = 1
//! output_dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeffs::{validate, LeslieCoefficients, RegimeReport, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::solver::{RegularizationConfig, TimeStepperConfig};
use crate::spectral::SpectralGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

fn default_epsilon() -> f64 {
    0.1
}

/// Coefficients given either through the `alpha`/`nu` family or explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu5: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu6: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Absolute tolerance for the constraint checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl CoefficientConfig {
    pub fn alpha(alpha: f64, nu: f64, epsilon: f64) -> Self {
        CoefficientConfig {
            alpha: Some(alpha),
            nu: Some(nu),
            lambda1: None,
            lambda2: None,
            mu1: None,
            mu2: None,
            mu3: None,
            mu4: None,
            mu5: None,
            mu6: None,
            epsilon,
            tolerance: None,
        }
    }

    pub fn explicit(c: &LeslieCoefficients) -> Self {
        CoefficientConfig {
            alpha: None,
            nu: None,
            lambda1: Some(c.lambda1),
            lambda2: Some(c.lambda2),
            mu1: Some(c.mu1),
            mu2: Some(c.mu2),
            mu3: Some(c.mu3),
            mu4: Some(c.mu4),
            mu5: Some(c.mu5),
            mu6: Some(c.mu6),
            epsilon: c.epsilon,
            tolerance: None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOL)
    }

    pub fn resolve(&self) -> Result<LeslieCoefficients> {
        let explicit = [self.lambda1, self.lambda2, self.mu1, self.mu2, self.mu3, self.mu4, self.mu5, self.mu6];
        let given = explicit.iter().filter(|v| v.is_some()).count();
        match (self.alpha, self.nu, given) {
            (Some(a), Some(nu), 0) => LeslieCoefficients::from_alpha(a, nu, self.epsilon),
            (None, None, 8) => {
                let v: Vec<f64> = explicit.iter().map(|v| v.unwrap()).collect();
                LeslieCoefficients::new(v[0], v[1], [v[2], v[3], v[4], v[5], v[6], v[7]], self.epsilon)
            }
            (None, None, _) => Err(Error::Config(
                "coefficients: give all of lambda1, lambda2, mu1..mu6, or alpha and nu".into(),
            )),
            _ => Err(Error::Config("coefficients: use either alpha/nu or explicit values, not both".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    Quiescent,
    TaylorGreenUniformDirector {
        #[serde(default = "one")]
        amplitude: f64,
    },
    PerturbedDirector {
        amplitude: f64,
        /// Largest wavenumber per axis in the perturbation.
        #[serde(default = "four")]
        modes: usize,
        /// Optional Taylor-Green velocity amplitude added to `u = 0`.
        #[serde(default, skip_serializing_if = "is_zero")]
        velocity_amplitude: f64,
    },
    Snapshot {
        velocity: PathBuf,
        director: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

fn default_cadence() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

fn default_refine() -> usize {
    1
}

fn default_slack() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write `u`/`d` snapshots every this many steps (never when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// Sup norms on a grid this many times finer (power of two).
    #[serde(default = "default_refine")]
    pub sup_refinement: usize,
    /// Allowed energy increase per audited step before it is flagged.
    #[serde(default = "default_slack")]
    pub monotonicity_slack: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            cadence: 1,
            output_dir: default_output(),
            snapshot_every: None,
            sup_refinement: 1,
            monotonicity_slack: default_slack(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub coefficients: CoefficientConfig,
    pub stepper: TimeStepperConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularization: Option<RegularizationConfig>,
    pub initial_condition: InitialCondition,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative snapshot paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let InitialCondition::Snapshot { velocity, director } = &mut cfg.initial_condition {
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [velocity, director] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<std::sync::Arc<SpectralGrid>> {
        SpectralGrid::shared(self.grid.dim, self.grid.n).map_err(|e| Error::Config(format!("grid: {e}")))
    }

    pub fn coefficients(&self) -> Result<LeslieCoefficients> {
        self.coefficients.resolve()
    }

    pub fn regime(&self) -> Result<RegimeReport> {
        Ok(validate(&self.coefficients()?, self.coefficients.tolerance()))
    }

    /// Regularization settings when enabled.
    pub fn active_regularization(&self) -> Option<&RegularizationConfig> {
        self.regularization.as_ref().filter(|r| r.enabled)
    }

    /// Structural checks that do not touch the coefficient regime.
    pub fn check(&self) -> Result<()> {
        self.check_in(Path::new(""))
    }

    /// As [`RunConfig::check`], resolving relative snapshot paths against `base`.
    pub fn check_in(&self, base: &Path) -> Result<()> {
        let grid = self.grid()?;
        self.coefficients()?;
        self.stepper.validate().map_err(|e| Error::Config(format!("stepper: {e}")))?;
        if let Some(r) = self.active_regularization() {
            r.validate(&grid).map_err(|e| Error::Config(format!("regularization: {e}")))?;
        }
        let d = &self.diagnostics;
        if d.cadence == 0 {
            return Err(Error::Config("diagnostics: cadence must be positive".into()));
        }
        if d.sup_refinement == 0 || !d.sup_refinement.is_power_of_two() {
            return Err(Error::Config("diagnostics: sup_refinement must be a power of two".into()));
        }
        if d.snapshot_every == Some(0) {
            return Err(Error::Config("diagnostics: snapshot_every must be positive".into()));
        }
        match &self.initial_condition {
            InitialCondition::PerturbedDirector { amplitude, modes, velocity_amplitude } => {
                if !amplitude.is_finite() || !velocity_amplitude.is_finite() {
                    return Err(Error::Config("initial_condition: amplitudes must be finite".into()));
                }
                if *modes == 0 || *modes > grid.dealias_cutoff() {
                    return Err(Error::Config(format!(
                        "initial_condition: modes must lie in 1..={}",
                        grid.dealias_cutoff()
                    )));
                }
            }
            InitialCondition::TaylorGreenUniformDirector { amplitude } if !amplitude.is_finite() => {
                return Err(Error::Config("initial_condition: amplitude must be finite".into()));
            }
            InitialCondition::Snapshot { velocity, director } => {
                for p in [velocity, director] {
                    if !base.join(p).exists() {
                        return Err(Error::Config(format!("snapshot {} does not exist", p.display())));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Stable fingerprint of the serialized configuration.
    pub fn hash(&self) -> Result<String> {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.to_toml_string()?.hash(&mut h);
        Ok(format!("{:016x}", h.finish()))
    }
}
