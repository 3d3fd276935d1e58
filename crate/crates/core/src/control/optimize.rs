use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::gradient::{gradient_with, GradientMode, DEFAULT_FD_STEP};
use super::{loss_value, LossKind};
use crate::dynamics::TimeGrid;
use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;
use crate::optomech::{DriveWaveforms, OptomechParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `Q ← Q - χ ∂C/∂Q`
    Plain,
    /// Adaptive moment estimates; `χ` bounds the per-knot step.
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub lr_omega: f64,
    pub lr_phi: f64,
    pub method: Method,
    /// Stop once an accepted step changes the loss by less than this fraction.
    pub stop_tol: f64,
    pub gradient_mode: GradientMode,
    pub fd_step: f64,
    pub seed: u64,
    /// Projects amplitudes onto `|Ω| ≤ omega_max` after every step.
    pub omega_max: Option<f64>,
    /// Halvings of the step scale tried before giving up on an iteration.
    pub max_backtracks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            lr_omega: 20.0,
            lr_phi: 0.02,
            method: Method::Adam,
            stop_tol: 0.0,
            gradient_mode: GradientMode::Adjoint,
            fd_step: DEFAULT_FD_STEP,
            seed: 0,
            omega_max: None,
            max_backtracks: 30,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lr_omega", self.lr_omega), ("lr_phi", self.lr_phi)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!(
                    "{name} must be a nonnegative number, got {v}"
                )));
            }
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(invalid(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= 0.0) {
            return Err(invalid("stop_tol must be a nonnegative number"));
        }
        if let Some(m) = self.omega_max {
            if !(m.is_finite() && m > 0.0) {
                return Err(invalid("omega_max must be positive"));
            }
        }
        Ok(())
    }
}

/// One row of the optimization log. Row 0 is the initial pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub loss: f64,
    /// Norm of the gradient the step was taken along.
    pub grad_norm: f64,
    /// Largest amplitude change applied to any knot.
    pub step_omega: f64,
    /// Largest phase change applied to any knot.
    pub step_phi: f64,
    pub wall_s: f64,
}

/// Everything needed to continue an optimization exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub iter: usize,
    pub drives: DriveWaveforms,
    pub loss: f64,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    pub adam_t: u64,
    pub step_scale: f64,
    pub finished: bool,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-12;

/// Gradient descent with backtracking, advanced one iteration at a time.
pub struct Optimizer {
    params: OptomechParams,
    grid: TimeGrid,
    initial: GaussianState,
    kind: LossKind,
    config: OptimizerConfig,
    state: OptimizerState,
}

impl Optimizer {
    pub fn new(
        params: &OptomechParams,
        drives0: &DriveWaveforms,
        grid: &TimeGrid,
        initial: &GaussianState,
        kind: LossKind,
        config: &OptimizerConfig,
    ) -> Result<(Self, IterationRecord)> {
        config.validate()?;
        let clock = Instant::now();
        let drives0 = project(drives0, config.omega_max)?;
        let loss = loss_value(params, &drives0, grid, initial, kind)?;
        if !loss.is_finite() {
            return Err(invalid("initial loss is not finite"));
        }
        let n = 2 * drives0.len();
        let state = OptimizerState {
            iter: 0,
            drives: drives0,
            loss,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            adam_t: 0,
            step_scale: 1.0,
            finished: config.max_iters == 0,
        };
        let record = IterationRecord {
            iter: 0,
            loss,
            grad_norm: 0.0,
            step_omega: 0.0,
            step_phi: 0.0,
            wall_s: clock.elapsed().as_secs_f64(),
        };
        Ok((
            Self {
                params: *params,
                grid: *grid,
                initial: initial.clone(),
                kind,
                config: config.clone(),
                state,
            },
            record,
        ))
    }

    /// Continues from a saved state.
    pub fn resume(
        params: &OptomechParams,
        grid: &TimeGrid,
        initial: &GaussianState,
        kind: LossKind,
        config: &OptimizerConfig,
        state: OptimizerState,
    ) -> Result<Self> {
        config.validate()?;
        let n = 2 * state.drives.len();
        if state.adam_m.len() != n || state.adam_v.len() != n {
            return Err(invalid("optimizer state does not match the knot count"));
        }
        let mut state = state;
        state.finished = state.finished || state.iter >= config.max_iters;
        Ok(Self {
            params: *params,
            grid: *grid,
            initial: initial.clone(),
            kind,
            config: config.clone(),
            state,
        })
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn drives(&self) -> &DriveWaveforms {
        &self.state.drives
    }

    pub fn is_finished(&self) -> bool {
        self.state.finished
    }

    fn try_loss(&self, drives: &DriveWaveforms) -> Option<f64> {
        loss_value(&self.params, drives, &self.grid, &self.initial, self.kind)
            .ok()
            .filter(|l| l.is_finite())
    }

    fn direction(&mut self, g: &[f64]) -> Vec<f64> {
        let n = g.len() / 2;
        let lr = |i: usize| {
            if i < n {
                self.config.lr_omega
            } else {
                self.config.lr_phi
            }
        };
        match self.config.method {
            Method::Plain => g.iter().enumerate().map(|(i, gi)| -lr(i) * gi).collect(),
            Method::Adam => {
                let s = &mut self.state;
                s.adam_t += 1;
                let t = s.adam_t as i32;
                let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
                (0..g.len())
                    .map(|i| {
                        s.adam_m[i] = BETA1 * s.adam_m[i] + (1.0 - BETA1) * g[i];
                        s.adam_v[i] = BETA2 * s.adam_v[i] + (1.0 - BETA2) * g[i] * g[i];
                        let (m, v) = (s.adam_m[i] / c1, s.adam_v[i] / c2);
                        -lr(i) * m / (v.sqrt() + ADAM_EPS)
                    })
                    .collect()
            }
        }
    }

    /// Runs one iteration. Returns `None` once the optimizer has finished.
    pub fn step(&mut self) -> Result<Option<IterationRecord>> {
        if self.state.finished {
            return Ok(None);
        }
        let clock = Instant::now();
        let report = gradient_with(
            &self.params,
            &self.state.drives,
            &self.grid,
            &self.initial,
            self.kind,
            self.config.gradient_mode,
            self.config.fd_step,
        )?;
        let g = report.flat();
        if g.iter().any(|x| !x.is_finite()) {
            self.state.finished = true;
            return Err(Error::NumericalDegeneracy("gradient is not finite".into()));
        }
        let grad_norm = report.norm();
        let dir = self.direction(&g);
        let n = self.state.drives.len();
        let base = &self.state.drives;
        let mut scale = self.state.step_scale;
        let mut accepted = None;
        if dir.iter().all(|d| *d == 0.0) {
            accepted = Some((base.clone(), self.state.loss));
        }
        for _ in 0..=self.config.max_backtracks {
            if accepted.is_some() {
                break;
            }
            let omega = base
                .omega()
                .iter()
                .zip(&dir[..n])
                .map(|(o, d)| o + scale * d)
                .collect();
            let phi = base
                .phi()
                .iter()
                .zip(&dir[n..])
                .map(|(p, d)| p + scale * d)
                .collect();
            let trial = project(&base.with_values(omega, phi)?, self.config.omega_max)?;
            if trial == *base {
                break;
            }
            if let Some(loss) = self.try_loss(&trial) {
                if loss < self.state.loss {
                    accepted = Some((trial, loss));
                    break;
                }
            }
            scale *= 0.5;
        }
        let old_loss = self.state.loss;
        let (step_omega, step_phi) = match accepted {
            Some((trial, loss)) => {
                let max_change = |a: &[f64], b: &[f64]| {
                    a.iter()
                        .zip(b)
                        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                };
                let steps = (
                    max_change(trial.omega(), base.omega()),
                    max_change(trial.phi(), base.phi()),
                );
                self.state.drives = trial;
                self.state.loss = loss;
                self.state.step_scale = (scale * 2.0).min(1.0);
                steps
            }
            None => {
                log::info!(
                    "line search failed at iteration {}; stopping",
                    self.state.iter + 1
                );
                self.state.finished = true;
                (0.0, 0.0)
            }
        };
        self.state.iter += 1;
        let change = (old_loss - self.state.loss).abs();
        if self.state.iter >= self.config.max_iters
            || (self.config.stop_tol > 0.0 && change <= self.config.stop_tol * old_loss.abs())
        {
            self.state.finished = true;
        }
        Ok(Some(IterationRecord {
            iter: self.state.iter,
            loss: self.state.loss,
            grad_norm,
            step_omega,
            step_phi,
            wall_s: clock.elapsed().as_secs_f64(),
        }))
    }
}

fn project(drives: &DriveWaveforms, omega_max: Option<f64>) -> Result<DriveWaveforms> {
    match omega_max {
        None => Ok(drives.clone()),
        Some(m) => {
            let omega = drives.omega().iter().map(|o| o.clamp(-m, m)).collect();
            drives.with_values(omega, drives.phi().to_vec())
        }
    }
}

/// Runs the optimizer to completion and returns the final (best) drives and
/// the log, whose row 0 is the initial pulse.
pub fn optimize(
    params: &OptomechParams,
    drives0: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
    config: &OptimizerConfig,
) -> Result<(DriveWaveforms, Vec<IterationRecord>)> {
    let (mut opt, first) = Optimizer::new(params, drives0, grid, initial, kind, config)?;
    let mut records = vec![first];
    loop {
        match opt.step() {
            Ok(Some(r)) => records.push(r),
            Ok(None) => break,
            Err(e) => {
                log::warn!("optimization aborted: {e}");
                break;
            }
        }
    }
    Ok((opt.state.drives, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::default_initial_state;

    fn setup() -> (OptomechParams, DriveWaveforms, TimeGrid, GaussianState) {
        let p = OptomechParams::cooling_reference();
        let d = DriveWaveforms::uniform(4.0, 5, 800.0, 0.0).unwrap();
        let g = TimeGrid::new(4.0, 80).unwrap();
        let init = default_initial_state(&p).unwrap();
        (p, d, g, init)
    }

    #[test]
    fn zero_rates_keep_drives() {
        let (p, d, g, init) = setup();
        let cfg = OptimizerConfig {
            max_iters: 3,
            lr_omega: 0.0,
            lr_phi: 0.0,
            ..Default::default()
        };
        let (out, records) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        assert_eq!(out, d);
        assert_eq!(records.len(), 4);
        assert!(records.windows(2).all(|w| w[0].loss == w[1].loss));
    }

    #[test]
    fn loss_never_increases() {
        let (p, d, g, init) = setup();
        for method in [Method::Plain, Method::Adam] {
            let cfg = OptimizerConfig {
                max_iters: 8,
                lr_omega: if method == Method::Plain { 1e3 } else { 50.0 },
                lr_phi: if method == Method::Plain { 1.0 } else { 0.05 },
                method,
                ..Default::default()
            };
            let (_, records) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
            assert!(records.windows(2).all(|w| w[1].loss <= w[0].loss));
            assert!(records.last().unwrap().loss < records[0].loss);
        }
    }

    #[test]
    fn deterministic_records() {
        let (p, d, g, init) = setup();
        let cfg = OptimizerConfig {
            max_iters: 4,
            ..Default::default()
        };
        let (a, ra) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        let (b, rb) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        assert_eq!(a, b);
        let strip = |r: &[IterationRecord]| {
            r.iter()
                .map(|x| (x.loss, x.grad_norm, x.step_omega, x.step_phi))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&ra), strip(&rb));
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let (p, d, g, init) = setup();
        let cfg = OptimizerConfig {
            max_iters: 5,
            ..Default::default()
        };
        let (full, _) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        let (mut opt, _) = Optimizer::new(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        opt.step().unwrap();
        opt.step().unwrap();
        let json = serde_json::to_string(opt.state()).unwrap();
        let state: OptimizerState = serde_json::from_str(&json).unwrap();
        let mut resumed =
            Optimizer::resume(&p, &g, &init, LossKind::MeanPhonon, &cfg, state).unwrap();
        while resumed.step().unwrap().is_some() {}
        assert_eq!(resumed.drives(), &full);
    }

    #[test]
    fn plain_first_step_direction_invariant_under_rate_scaling() {
        let (p, d, g, init) = setup();
        let first_step = |c: f64| {
            let cfg = OptimizerConfig {
                max_iters: 1,
                lr_omega: 1e2 * c,
                lr_phi: 0.1 * c,
                method: Method::Plain,
                ..Default::default()
            };
            let (out, _) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
            let delta: Vec<f64> = out
                .omega()
                .iter()
                .zip(d.omega())
                .map(|(a, b)| a - b)
                .chain(out.phi().iter().zip(d.phi()).map(|(a, b)| a - b))
                .collect();
            let norm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
            delta.into_iter().map(|x| x / norm).collect::<Vec<_>>()
        };
        let (a, b) = (first_step(1.0), first_step(0.5));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn amplitude_bound_enforced() {
        let (p, d, g, init) = setup();
        let cfg = OptimizerConfig {
            max_iters: 5,
            lr_omega: 500.0,
            omega_max: Some(850.0),
            ..Default::default()
        };
        let (out, _) = optimize(&p, &d, &g, &init, LossKind::MeanPhonon, &cfg).unwrap();
        assert!(out.omega().iter().all(|o| o.abs() <= 850.0));
    }

    #[test]
    fn invalid_config() {
        let cfg = OptimizerConfig {
            fd_step: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig {
            lr_omega: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
