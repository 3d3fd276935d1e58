use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::control::{default_initial_state, LossKind, OptimizerConfig};
use crate::dynamics::TimeGrid;
use crate::gaussian::{thermal_state, GaussianState};
use crate::optomech::{DriveWaveforms, OptomechParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_end: f64,
    #[serde(default = "default_knots")]
    pub n_knots: usize,
    #[serde(default = "default_steps_per_knot")]
    pub steps_per_knot: usize,
}

fn default_knots() -> usize {
    200
}

fn default_steps_per_knot() -> usize {
    40
}

impl GridSection {
    /// Integration grid with `steps_per_knot` steps between neighbouring knots.
    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        if self.n_knots < 2 || self.steps_per_knot == 0 {
            return Err(CliError::Config(
                "grid needs n_knots >= 2 and steps_per_knot >= 1".into(),
            ));
        }
        Ok(TimeGrid::new(
            self.t_end,
            self.steps_per_knot * (self.n_knots - 1),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for DeviationSection {
    fn default() -> Self {
        Self {
            min: -0.1,
            max: 0.1,
            points: 21,
        }
    }
}

impl DeviationSection {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 || !(self.min < self.max) {
            return Err(CliError::Config(
                "deviation grid needs points >= 2 and min < max".into(),
            ));
        }
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let s = i as f64 / last;
                self.min * (1.0 - s) + self.max * s
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub runs: usize,
    /// Standard deviation of the amplitude noise, in units of `ω_m`.
    pub omega_std: f64,
    /// Standard deviation of the phase noise, in radians.
    pub phi_std: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            runs: 10,
            omega_std: 200.0,
            phi_std: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Loss for verbs that do not fix it (sweeps, noise, free evolution).
    pub loss: LossKind,
    /// Constant initial amplitude; defaults to 500 for cooling and 1000 for entanglement.
    pub omega0: Option<f64>,
    pub phi0: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub pulse: Option<PathBuf>,
    /// Initial mechanical occupation; defaults to the bath occupation.
    pub n_mech0: Option<f64>,
    pub n_cavity0: f64,
    pub deviation: DeviationSection,
    pub noise: NoiseSection,
    /// Length of the drive-free continuation.
    pub free_extension: f64,
    /// Fock scenario name for `oracle-compare`, or `all`.
    pub scenario: String,
    pub fock_dims: Option<Vec<usize>>,
    pub grad_check_tol: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            loss: LossKind::MeanPhonon,
            omega0: None,
            phi0: 0.0,
            seed: 0,
            out: None,
            pulse: None,
            n_mech0: None,
            n_cavity0: 0.0,
            deviation: DeviationSection::default(),
            noise: NoiseSection::default(),
            free_extension: std::f64::consts::TAU,
            scenario: "all".into(),
            fock_dims: None,
            grad_check_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub physical: OptomechParams,
    pub grid: GridSection,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |e: crate::Error| CliError::Config(e.to_string());
        self.physical.validate().map_err(invalid)?;
        self.grid.time_grid()?;
        self.optimizer.validate().map_err(invalid)?;
        let e = &self.experiment;
        if let Some(o) = e.omega0 {
            if !o.is_finite() {
                return Err(CliError::Config("omega0 must be finite".into()));
            }
        }
        if !(e.free_extension.is_finite() && e.free_extension >= 0.0) {
            return Err(CliError::Config("free_extension must be >= 0".into()));
        }
        if !(e.noise.omega_std >= 0.0 && e.noise.phi_std >= 0.0) {
            return Err(CliError::Config(
                "noise standard deviations must be >= 0".into(),
            ));
        }
        if e.noise.runs == 0 {
            return Err(CliError::Config("noise runs must be positive".into()));
        }
        if !(e.grad_check_tol > 0.0) {
            return Err(CliError::Config("grad_check_tol must be positive".into()));
        }
        e.deviation.values()?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.experiment.out = None;
        let text = toml::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn initial_state(&self) -> Result<GaussianState, CliError> {
        let e = &self.experiment;
        Ok(match e.n_mech0 {
            None if e.n_cavity0 == 0.0 => default_initial_state(&self.physical)?,
            n => thermal_state(&[e.n_cavity0, n.unwrap_or(self.physical.n_bar_m)])?,
        })
    }

    pub fn initial_drives(&self, kind: LossKind) -> Result<DriveWaveforms, CliError> {
        let omega0 = self.experiment.omega0.unwrap_or(match kind {
            LossKind::MeanPhonon => 500.0,
            LossKind::EtaMinus => 1000.0,
        });
        Ok(DriveWaveforms::uniform(
            self.grid.t_end,
            self.grid.n_knots,
            omega0,
            self.experiment.phi0,
        )?)
    }
}
