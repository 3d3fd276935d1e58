//! Losses on the final covariance, their gradients with respect to the drive
//! knots, and a gradient-descent optimizer.

mod gradient;
mod mean_target;
mod optimize;

pub use gradient::{
    compare_gradients, eta_minus_gradient, eta_minus_sensitivity, finite_difference_gradient,
    gradient, gradient_with, loss_gradient_matrix, phonon_sensitivity, GradientDiscrepancy,
    GradientMode, GradientReport, DEFAULT_FD_STEP, DEGENERACY_TOL,
};
pub use mean_target::{mean_target_fd_gradient, mean_target_gradient, MeanTargetProblem};
pub use optimize::{optimize, IterationRecord, Method, Optimizer, OptimizerConfig, OptimizerState};

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{MomentTrajectory, TimeGrid};
use crate::error::{invalid, Result};
use crate::gaussian::{thermal_state, two_mode_invariants, GaussianState};
use crate::optomech::{
    ClassicalTrajectory, CoupledState, CoupledSystem, DriveWaveforms, OptomechParams, C64,
};

/// Scalar figure of merit evaluated on the covariance at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `⟨b†b⟩(T) = (V₃₃ + V₄₄ - 1)/2`
    MeanPhonon,
    /// Smallest symplectic eigenvalue of the partially transposed covariance.
    EtaMinus,
}

impl LossKind {
    pub fn value(self, cov: &Matrix4<f64>) -> Result<f64> {
        match self {
            LossKind::MeanPhonon => Ok(0.5 * (cov[(2, 2)] + cov[(3, 3)] - 1.0)),
            LossKind::EtaMinus => Ok(two_mode_invariants(cov)?.eta_minus),
        }
    }
}

/// Vacuum cavity and thermal mechanics at the bath occupation.
pub fn default_initial_state(params: &OptomechParams) -> Result<GaussianState> {
    thermal_state(&[0.0, params.n_bar_m])
}

/// Splits a two-mode Gaussian state into displacements and fluctuations.
pub fn coupled_initial(initial: &GaussianState) -> Result<CoupledState> {
    let cov = initial.cov4()?;
    let m = initial.mean();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(CoupledState {
        alpha: C64::new(m[0], m[1]) * s,
        beta: C64::new(m[2], m[3]) * s,
        cov,
    })
}

pub(crate) fn check_problem(drives: &DriveWaveforms, grid: &TimeGrid) -> Result<()> {
    let (a, b) = (drives.t_end(), grid.t_end());
    if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
        return Err(invalid(format!(
            "drives span [0, {a}] but grid ends at {b}"
        )));
    }
    Ok(())
}

pub(crate) fn simulate(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
) -> Result<Vec<CoupledState>> {
    check_problem(drives, grid)?;
    let y0 = coupled_initial(initial)?;
    CoupledSystem::new(params, drives)?.simulate(grid, y0)
}

/// Splits coupled states into a fluctuation trajectory (zero means) and the
/// classical displacement trajectory.
pub fn split_states(
    params: &OptomechParams,
    grid: &TimeGrid,
    states: &[CoupledState],
) -> (MomentTrajectory, ClassicalTrajectory) {
    let covs = states
        .iter()
        .map(|s| DMatrix::from_fn(4, 4, |r, c| s.cov[(r, c)]))
        .collect();
    let means = vec![DVector::zeros(4); states.len()];
    let alpha = states.iter().map(|s| s.alpha).collect();
    let beta = states.iter().map(|s| s.beta).collect();
    (
        MomentTrajectory {
            grid: *grid,
            means,
            covs,
        },
        ClassicalTrajectory::from_amplitudes(params, *grid, alpha, beta),
    )
}

/// Loss at `T` together with the full trajectories it was computed from.
pub fn evaluate_loss(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
) -> Result<(f64, MomentTrajectory, ClassicalTrajectory)> {
    let states = simulate(params, drives, grid, initial)?;
    let loss = kind.value(&states[grid.n_steps()].cov)?;
    let (traj, classical) = split_states(params, grid, &states);
    Ok((loss, traj, classical))
}

/// Loss at `T` only.
pub fn loss_value(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    initial: &GaussianState,
    kind: LossKind,
) -> Result<f64> {
    let states = simulate(params, drives, grid, initial)?;
    kind.value(&states[grid.n_steps()].cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::logarithmic_negativity;

    #[test]
    fn free_thermalization() {
        let p = OptomechParams::cooling_reference();
        let drives = DriveWaveforms::uniform(38.0, 20, 0.0, 0.0).unwrap();
        let grid = TimeGrid::new(38.0, 760).unwrap();
        let init = default_initial_state(&p).unwrap();
        let (loss, _, _) = evaluate_loss(&p, &drives, &grid, &init, LossKind::MeanPhonon).unwrap();
        // bath and initial occupation coincide, so only the diffusion offset moves it
        let expected = p.n_bar_m;
        assert!((loss - expected).abs() < 1e-9 * expected, "{loss}");
    }

    #[test]
    fn free_relaxation_from_hotter_state() {
        let p = OptomechParams::cooling_reference();
        let drives = DriveWaveforms::uniform(38.0, 20, 0.0, 0.0).unwrap();
        let grid = TimeGrid::new(38.0, 760).unwrap();
        let init = thermal_state(&[0.0, 2.0 * p.n_bar_m]).unwrap();
        let (loss, _, _) = evaluate_loss(&p, &drives, &grid, &init, LossKind::MeanPhonon).unwrap();
        let expected = p.n_bar_m + p.n_bar_m * (-p.gamma_m * 38.0).exp();
        assert!((loss - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn vacuum_stays_empty() {
        let p = OptomechParams {
            n_bar_m: 0.0,
            ..OptomechParams::cooling_reference()
        };
        let drives = DriveWaveforms::uniform(5.0, 6, 0.0, 0.0).unwrap();
        let grid = TimeGrid::new(5.0, 100).unwrap();
        let init = GaussianState::vacuum(2).unwrap();
        let (loss, _, _) = evaluate_loss(&p, &drives, &grid, &init, LossKind::MeanPhonon).unwrap();
        assert!(loss.abs() < 1e-15);
    }

    #[test]
    fn undriven_product_state_is_separable() {
        let p = OptomechParams::entanglement_reference();
        let drives = DriveWaveforms::uniform(10.0, 6, 0.0, 0.0).unwrap();
        let grid = TimeGrid::new(10.0, 400).unwrap();
        let init = default_initial_state(&p).unwrap();
        let (eta, traj, _) = evaluate_loss(&p, &drives, &grid, &init, LossKind::EtaMinus).unwrap();
        assert!(eta >= 0.5);
        let n = logarithmic_negativity(&traj.final_state().unwrap()).unwrap();
        assert_eq!(n.log_negativity, 0.0);
    }

    #[test]
    fn initial_mean_moves_into_displacements() {
        let init = GaussianState::vacuum(2)
            .unwrap()
            .with_mean(DVector::from_vec(vec![2f64.sqrt(), 0.0, 0.0, -2f64.sqrt()]))
            .unwrap();
        let y = coupled_initial(&init).unwrap();
        assert!((y.alpha - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((y.beta - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn mismatched_span_rejected() {
        let p = OptomechParams::cooling_reference();
        let drives = DriveWaveforms::uniform(5.0, 6, 0.0, 0.0).unwrap();
        let grid = TimeGrid::new(6.0, 100).unwrap();
        let init = default_initial_state(&p).unwrap();
        assert!(evaluate_loss(&p, &drives, &grid, &init, LossKind::MeanPhonon).is_err());
    }
}
