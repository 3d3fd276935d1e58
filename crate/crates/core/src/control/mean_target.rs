//! Mean-steering loss for a generic LGQ system driven directly through `u(t)`.
//!
//! `L = ‖⟨x(T)⟩ - x_target‖²` with `u(t)` piecewise linear on knots. The
//! variation of the mean is `δ⟨x(T)⟩ = ∫ U(T) U⁻¹(s) δu(s) ds`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{propagate_moments, transition_matrices, FnGenerator, TimeGrid};
use crate::error::{invalid, Result};
use crate::gaussian::GaussianState;

type DriftFn = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
pub struct MeanTargetProblem {
    pub n_modes: usize,
    pub drift: Arc<DriftFn>,
    pub diffusion: DMatrix<f64>,
    pub initial: GaussianState,
    pub target: DVector<f64>,
    /// Knot times of the piecewise-linear control, starting at 0 and ending at `T`.
    pub knots: Vec<f64>,
    pub grid: TimeGrid,
}

impl MeanTargetProblem {
    fn segment(knots: &[f64], t: f64) -> (usize, f64) {
        let last = knots.len() - 2;
        let i = knots
            .partition_point(|&k| k <= t)
            .saturating_sub(1)
            .min(last);
        (
            i,
            ((t - knots[i]) / (knots[i + 1] - knots[i])).clamp(0.0, 1.0),
        )
    }

    fn hat(&self, j: usize, t: f64) -> f64 {
        let (i, w) = Self::segment(&self.knots, t);
        if j == i {
            1.0 - w
        } else if j == i + 1 {
            w
        } else {
            0.0
        }
    }

    fn control(&self, u: &[DVector<f64>]) -> impl Fn(f64) -> DVector<f64> + Send + Sync + 'static {
        let knots = self.knots.clone();
        let u = u.to_vec();
        move |t| {
            let (i, w) = Self::segment(&knots, t);
            &u[i] * (1.0 - w) + &u[i + 1] * w
        }
    }

    fn validate(&self, u: &[DVector<f64>]) -> Result<()> {
        if self.knots.len() < 2 || u.len() != self.knots.len() {
            return Err(invalid(
                "need one control vector per knot and at least two knots",
            ));
        }
        if u.iter().any(|v| v.len() != 2 * self.n_modes) {
            return Err(invalid("control vectors must have length 2N"));
        }
        Ok(())
    }

    /// Final mean and loss for the knot controls `u`.
    pub fn evaluate(&self, u: &[DVector<f64>]) -> Result<(DVector<f64>, f64)> {
        self.validate(u)?;
        let drift = self.drift.clone();
        let gen = FnGenerator::new(
            self.n_modes,
            move |t| drift(t),
            self.control(u),
            self.diffusion.clone(),
        )?;
        let traj = propagate_moments(&gen, &self.initial, &self.grid)?;
        let x = traj.means[self.grid.n_steps()].clone();
        let loss = (&x - &self.target).norm_squared();
        Ok((x, loss))
    }
}

/// Loss and per-knot gradient from the transition-matrix formula.
///
/// The time integral uses Simpson's rule on the grid nodes when the step count
/// is even (knots should then sit on even nodes) and the trapezoidal rule
/// otherwise.
pub fn mean_target_gradient(
    problem: &MeanTargetProblem,
    u: &[DVector<f64>],
) -> Result<(f64, Vec<DVector<f64>>)> {
    let (x, loss) = problem.evaluate(u)?;
    let residual = (&x - &problem.target) * 2.0;
    let drift = problem.drift.clone();
    let dim = 2 * problem.n_modes;
    let homogeneous = FnGenerator::new(
        problem.n_modes,
        move |t| drift(t),
        move |_| DVector::zeros(dim),
        problem.diffusion.clone(),
    )?;
    let us = transition_matrices(&homogeneous, &problem.grid)?;
    let n = problem.grid.n_steps();
    let u_t = &us[n];
    let h = problem.grid.dt();
    let mut grads = vec![DVector::zeros(dim); u.len()];
    for (k, u_s) in us.iter().enumerate() {
        let inv = u_s
            .clone()
            .try_inverse()
            .ok_or_else(|| invalid("transition matrix is singular"))?;
        let sensitivity = (u_t * inv).transpose() * &residual;
        let w = if n.is_multiple_of(2) {
            let inner = if k % 2 == 1 { 4.0 } else { 2.0 };
            h / 3.0 * if k == 0 || k == n { 1.0 } else { inner }
        } else if k == 0 || k == n {
            0.5 * h
        } else {
            h
        };
        let t = problem.grid.time(k);
        for (j, g) in grads.iter_mut().enumerate() {
            let hat = problem.hat(j, t);
            if hat != 0.0 {
                *g += &sensitivity * (w * hat);
            }
        }
    }
    Ok((loss, grads))
}

/// Central differences of the loss in every control component.
pub fn mean_target_fd_gradient(
    problem: &MeanTargetProblem,
    u: &[DVector<f64>],
    step: f64,
) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let mut g = DVector::zeros(u[j].len());
        for c in 0..u[j].len() {
            let mut plus = u.to_vec();
            let mut minus = u.to_vec();
            plus[j][c] += step;
            minus[j][c] -= step;
            g[c] = (problem.evaluate(&plus)?.1 - problem.evaluate(&minus)?.1) / (2.0 * step);
        }
        out.push(g);
    }
    Ok(out)
}
