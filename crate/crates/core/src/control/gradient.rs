use nalgebra::{Matrix2, Matrix3, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_problem, coupled_initial, loss_value, LossKind};
use crate::dynamics::TimeGrid;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{block, two_mode_invariants, GaussianState};
use crate::optomech::{
    ControlVariation, CoupledState, CoupledSystem, DriveWaveforms, OptomechParams,
};
use crate::rk4::{self, Linear};

/// Guard on `Z` and `η⁻` in the `η⁻` differential.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Default relative finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMode {
    Adjoint,
    ForwardSensitivity,
    FiniteDifference,
}

impl std::fmt::Display for GradientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GradientMode::Adjoint => "adjoint",
            GradientMode::ForwardSensitivity => "forward-sensitivity",
            GradientMode::FiniteDifference => "finite-difference",
        })
    }
}

/// Partial derivatives of the loss with respect to every amplitude and phase knot.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub d_omega: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub loss: f64,
    pub mode: GradientMode,
}

impl GradientReport {
    /// Amplitude partials followed by phase partials.
    pub fn flat(&self) -> Vec<f64> {
        self.d_omega.iter().chain(&self.d_phi).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Worst elementwise relative disagreement between two gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDiscrepancy {
    pub max_rel: f64,
    /// Knot index of the worst component.
    pub knot: usize,
    /// `true` when the worst component is a phase partial.
    pub phase: bool,
}

/// `max_i |a_i - b_i| / |b_i|` over components with `|b_i| > 1e-8 ‖b‖_∞`.
pub fn compare_gradients(a: &GradientReport, b: &GradientReport) -> GradientDiscrepancy {
    let (ga, gb) = (a.flat(), b.flat());
    let n = a.d_omega.len();
    let scale = gb.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = GradientDiscrepancy {
        max_rel: 0.0,
        knot: 0,
        phase: false,
    };
    for (i, (x, y)) in ga.iter().zip(&gb).enumerate() {
        if y.abs() > 1e-8 * scale {
            let rel = (x - y).abs() / y.abs();
            if !worst.max_rel.is_nan() && !(rel <= worst.max_rel) {
                worst = GradientDiscrepancy {
                    max_rel: rel,
                    knot: i % n,
                    phase: i >= n,
                };
            }
        }
    }
    worst
}

/// `d⟨b†b⟩ = (dV₃₃ + dV₄₄)/2`.
pub fn phonon_sensitivity(dv: &Matrix4<f64>) -> f64 {
    0.5 * (dv[(2, 2)] + dv[(3, 3)])
}

fn cofactor2(m: &Matrix2<f64>) -> Matrix2<f64> {
    Matrix2::new(m[(1, 1)], -m[(1, 0)], -m[(0, 1)], m[(0, 0)])
}

fn cofactor4(v: &Matrix4<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| {
        let minor = Matrix3::from_fn(|i, j| {
            let ii = if i < r { i } else { i + 1 };
            let jj = if j < c { j } else { j + 1 };
            v[(ii, jj)]
        });
        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Gradient of `η⁻` with respect to the entries of `V`, so that
/// `dη⁻ = Σ_ij G_ij dV_ij` for any (symmetric) `dV`.
pub fn eta_minus_gradient(v: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let inv = two_mode_invariants(v)?;
    if inv.z <= DEGENERACY_TOL || inv.eta_minus <= DEGENERACY_TOL {
        return Err(Error::DegeneratePoint(format!(
            "Z = {:e}, η⁻ = {:e}",
            inv.z, inv.eta_minus
        )));
    }
    let mut d_sigma = Matrix4::zeros();
    d_sigma
        .fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&cofactor2(&block(v, 0, 0)));
    d_sigma
        .fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&cofactor2(&block(v, 2, 2)));
    d_sigma
        .fixed_view_mut::<2, 2>(0, 2)
        .copy_from(&(cofactor2(&block(v, 0, 2)) * -2.0));
    let eta = inv.eta_minus;
    Ok((cofactor4(v) - d_sigma * (eta * eta)) / (2.0 * eta * inv.z))
}

/// Directional derivative of `η⁻` at `V` along `dV`.
pub fn eta_minus_sensitivity(v: &Matrix4<f64>, dv: &Matrix4<f64>) -> Result<f64> {
    Ok(eta_minus_gradient(v)?.dot(dv))
}

/// `∂L/∂V` for the given loss.
pub fn loss_gradient_matrix(kind: LossKind, v: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    match kind {
        LossKind::MeanPhonon => {
            let mut g = Matrix4::zeros();
            g[(2, 2)] = 0.5;
            g[(3, 3)] = 0.5;
            Ok(g)
        }
        LossKind::EtaMinus => eta_minus_gradient(v),
    }
}

/// Gradient in the requested mode with the default finite-difference step.
pub fn gradient(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
    mode: GradientMode,
) -> Result<GradientReport> {
    gradient_with(params, drives, grid, initial, kind, mode, DEFAULT_FD_STEP)
}

/// Gradient in the requested mode. Analytic modes fall back to finite
/// differences at a degenerate `η⁻` point.
pub fn gradient_with(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
    mode: GradientMode,
    fd_step: f64,
) -> Result<GradientReport> {
    let analytic = match mode {
        GradientMode::Adjoint => adjoint(params, drives, grid, initial, kind),
        GradientMode::ForwardSensitivity => forward(params, drives, grid, initial, kind),
        GradientMode::FiniteDifference => {
            return finite_difference_gradient(params, drives, grid, initial, kind, fd_step)
        }
    };
    match analytic {
        Err(Error::DegeneratePoint(msg)) => {
            log::warn!("{mode} gradient at degenerate point ({msg}); using finite differences");
            finite_difference_gradient(params, drives, grid, initial, kind, fd_step)
        }
        other => other,
    }
}

/// Central differences `(L(θ+h) - L(θ-h))/2h` with `h = fd_step·max(1, |θ|)`.
pub fn finite_difference_gradient(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
    fd_step: f64,
) -> Result<GradientReport> {
    if !(fd_step.is_finite() && fd_step > 0.0) {
        return Err(invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    let loss = loss_value(params, drives, grid, initial, kind)?;
    let n = drives.len();
    let probe = |j: usize| -> Result<f64> {
        let (mut omega, mut phi) = (drives.omega().to_vec(), drives.phi().to_vec());
        let target = if j < n {
            &mut omega[j]
        } else {
            &mut phi[j - n]
        };
        let theta = *target;
        let h = fd_step * theta.abs().max(1.0);
        *target = theta + h;
        let plus = drives.with_values(omega.clone(), phi.clone())?;
        let (mut omega, mut phi) = (omega, phi);
        if j < n {
            omega[j] = theta - h;
        } else {
            phi[j - n] = theta - h;
        }
        let minus = drives.with_values(omega, phi)?;
        let lp = loss_value(params, &plus, grid, initial, kind)?;
        let lm = loss_value(params, &minus, grid, initial, kind)?;
        Ok((lp - lm) / (2.0 * h))
    };
    let all = (0..2 * n)
        .into_par_iter()
        .map(probe)
        .collect::<Result<Vec<_>>>()?;
    let (d_omega, d_phi) = all.split_at(n);
    Ok(GradientReport {
        d_omega: d_omega.to_vec(),
        d_phi: d_phi.to_vec(),
        loss,
        mode: GradientMode::FiniteDifference,
    })
}

struct Forward<'a> {
    system: CoupledSystem<'a>,
    states: Vec<CoupledState>,
    h: f64,
}

fn run_forward<'a>(
    params: &OptomechParams,
    drives: &'a DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
) -> Result<Forward<'a>> {
    check_problem(drives, grid)?;
    let system = CoupledSystem::new(params, drives)?;
    let states = system.simulate(grid, coupled_initial(initial)?)?;
    Ok(Forward {
        system,
        states,
        h: grid.dt(),
    })
}

/// Reverse pass through the Runge-Kutta steps, accumulating knot cotangents
/// from the drive cotangent at every stage time.
fn adjoint(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
) -> Result<GradientReport> {
    let fw = run_forward(params, drives, grid, initial)?;
    let n = grid.n_steps();
    let final_cov = fw.states[n].cov;
    let loss = kind.value(&final_cov)?;
    let mut lam = CoupledState {
        cov: loss_gradient_matrix(kind, &final_cov)?,
        ..CoupledState::zero()
    };
    let h = fw.h;
    let mut d_omega = vec![0.0; drives.len()];
    let mut d_phi = vec![0.0; drives.len()];
    let mut scatter = |t: f64, c: ControlVariation| {
        let s = drives.segment(t);
        d_omega[s.index] += (1.0 - s.weight) * c.omega;
        d_omega[s.index + 1] += s.weight * c.omega;
        d_phi[s.index] += (1.0 - s.weight) * c.phi;
        d_phi[s.index + 1] += s.weight * c.phi;
    };
    for k in (0..n).rev() {
        let t = grid.time(k);
        lam = lam.symmetrized();
        let st = rk4::stages(t, h, &fw.states[k], |s, x| fw.system.rhs(s, x));
        let ts = rk4::stage_times(t, h);
        let mut y_bar = lam;
        let mut k_bar = [
            lam.scaled(h / 6.0),
            lam.scaled(h / 3.0),
            lam.scaled(h / 3.0),
            lam.scaled(h / 6.0),
        ];
        let feed = [h / 2.0, h / 2.0, h];
        for i in (0..4).rev() {
            let (stage_bar, c) = fw.system.cotangent(ts[i], &st.states[i], &k_bar[i]);
            scatter(ts[i], c);
            y_bar = y_bar.add(&stage_bar);
            if i > 0 {
                k_bar[i - 1] = k_bar[i - 1].axpy(feed[i - 1], &stage_bar);
            }
        }
        lam = y_bar;
    }
    Ok(GradientReport {
        d_omega,
        d_phi,
        loss,
        mode: GradientMode::Adjoint,
    })
}

/// Tangent of the full discrete trajectory, one knot parameter at a time.
fn forward(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
) -> Result<GradientReport> {
    let fw = run_forward(params, drives, grid, initial)?;
    let n = grid.n_steps();
    let h = fw.h;
    let final_cov = fw.states[n].cov;
    let loss = kind.value(&final_cov)?;
    let differential = |dv: &Matrix4<f64>| -> Result<f64> {
        match kind {
            LossKind::MeanPhonon => Ok(phonon_sensitivity(dv)),
            LossKind::EtaMinus => eta_minus_sensitivity(&final_cov, dv),
        }
    };
    // fail early at a degenerate point
    differential(&Matrix4::zeros())?;

    let stage_states: Vec<[CoupledState; 4]> = (0..n)
        .map(|k| rk4::stages(grid.time(k), h, &fw.states[k], |s, x| fw.system.rhs(s, x)).states)
        .collect();
    let knots = drives.len();
    let column = |j: usize| -> Result<f64> {
        let (knot, is_phase) = if j < knots {
            (j, false)
        } else {
            (j - knots, true)
        };
        let hat = |t: f64| {
            let s = drives.segment(t);
            let w = if s.index == knot {
                1.0 - s.weight
            } else if s.index + 1 == knot {
                s.weight
            } else {
                0.0
            };
            if is_phase {
                ControlVariation { omega: 0.0, phi: w }
            } else {
                ControlVariation { omega: w, phi: 0.0 }
            }
        };
        let mut dy = CoupledState::zero();
        for k in 0..n {
            let ts = rk4::stage_times(grid.time(k), h);
            let ys = &stage_states[k];
            let dk1 = fw.system.tangent(ts[0], &ys[0], &dy, hat(ts[0]));
            let dy2 = dy.axpy(0.5 * h, &dk1);
            let dk2 = fw.system.tangent(ts[1], &ys[1], &dy2, hat(ts[1]));
            let dy3 = dy.axpy(0.5 * h, &dk2);
            let dk3 = fw.system.tangent(ts[2], &ys[2], &dy3, hat(ts[2]));
            let dy4 = dy.axpy(h, &dk3);
            let dk4 = fw.system.tangent(ts[3], &ys[3], &dy4, hat(ts[3]));
            dy = rk4::combine(h, &dy, &[dk1, dk2, dk3, dk4]).symmetrized();
        }
        differential(&dy.cov)
    };
    let all = (0..2 * knots)
        .into_par_iter()
        .map(column)
        .collect::<Result<Vec<_>>>()?;
    let (d_omega, d_phi) = all.split_at(knots);
    Ok(GradientReport {
        d_omega: d_omega.to_vec(),
        d_phi: d_phi.to_vec(),
        loss,
        mode: GradientMode::ForwardSensitivity,
    })
}
