//! Classical displacements and quantum covariance integrated as one system.
//!
//! The state is `(α, β, V)`. The drift seen by `V` at each Runge-Kutta stage
//! uses the stage values of `α` and `β`, so the discrete map is a single
//! smooth function of the drive knots. Its tangent ([`CoupledSystem::tangent`])
//! and transpose ([`CoupledSystem::cotangent`]) are what the gradient code
//! differentiates.

use nalgebra::Matrix4;

use super::{dissipation_matrices, drift, DriveWaveforms, OptomechParams, C64, OMEGA_M};
use crate::dynamics::TimeGrid;
use crate::error::{invalid, Error, Result};
use crate::rk4::{self, Linear};

/// One point of the coupled flow: cavity and mechanical displacements plus the
/// covariance of the fluctuations around them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledState {
    pub alpha: C64,
    pub beta: C64,
    pub cov: Matrix4<f64>,
}

impl CoupledState {
    pub fn zero() -> Self {
        Self {
            alpha: C64::new(0.0, 0.0),
            beta: C64::new(0.0, 0.0),
            cov: Matrix4::zeros(),
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.alpha.re.is_finite()
            && self.alpha.im.is_finite()
            && self.beta.re.is_finite()
            && self.beta.im.is_finite()
            && self.cov.iter().all(|v| v.is_finite())
    }

    pub(crate) fn symmetrized(mut self) -> Self {
        self.cov = (self.cov + self.cov.transpose()) * 0.5;
        self
    }
}

impl Linear for CoupledState {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        Self {
            alpha: self.alpha + x.alpha * a,
            beta: self.beta + x.beta * a,
            cov: self.cov + x.cov * a,
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            alpha: self.alpha * a,
            beta: self.beta * a,
            cov: self.cov * a,
        }
    }

    fn add(&self, x: &Self) -> Self {
        Self {
            alpha: self.alpha + x.alpha,
            beta: self.beta + x.beta,
            cov: self.cov + x.cov,
        }
    }
}

/// Variation of the drive at one instant: `(δΩ(t), δφ(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlVariation {
    pub omega: f64,
    pub phi: f64,
}

fn unit(r: usize, c: usize) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(r, c)] = 1.0;
    m
}

/// `∂A/∂Δ`, `∂A/∂Re G`, `∂A/∂Im G`.
fn drift_partials() -> [Matrix4<f64>; 3] {
    [
        unit(0, 1) - unit(1, 0),
        (unit(1, 2) + unit(3, 0)) * -2.0,
        (unit(0, 2) - unit(3, 1)) * 2.0,
    ]
}

/// Right-hand side of the coupled displacement and covariance equations.
#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    params: OptomechParams,
    drives: &'a DriveWaveforms,
    diffusion: Matrix4<f64>,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(params: &OptomechParams, drives: &'a DriveWaveforms) -> Result<Self> {
        params.validate()?;
        let (_, diffusion) = dissipation_matrices(params);
        Ok(Self {
            params: *params,
            drives,
            diffusion,
        })
    }

    pub fn params(&self) -> &OptomechParams {
        &self.params
    }

    pub fn drives(&self) -> &DriveWaveforms {
        self.drives
    }

    /// `(α̇, β̇)` from the displacement equations.
    pub(crate) fn classical_rhs(&self, t: f64, alpha: C64, beta: C64) -> (C64, C64) {
        let p = &self.params;
        let (omega, phi) = self.drives.sample(t);
        let delta = p.detuning(beta);
        let drive = C64::new(0.0, omega) * C64::from_polar(1.0, -phi);
        let d_alpha = -C64::new(p.kappa / 2.0, delta) * alpha + drive;
        let d_beta =
            -C64::new(p.gamma_m / 2.0, OMEGA_M) * beta - C64::new(0.0, p.g0 * alpha.norm_sqr());
        (d_alpha, d_beta)
    }

    pub fn drift_at(&self, state: &CoupledState) -> Matrix4<f64> {
        drift(
            self.params.detuning(state.beta),
            self.params.coupling(state.alpha),
            &self.params,
        )
    }

    pub fn rhs(&self, t: f64, y: &CoupledState) -> CoupledState {
        let (alpha, beta) = self.classical_rhs(t, y.alpha, y.beta);
        let a = self.drift_at(y);
        let av = a * y.cov;
        CoupledState {
            alpha,
            beta,
            cov: av + av.transpose() + self.diffusion,
        }
    }

    /// Tangent of [`Self::rhs`] along `(dy, dc)`.
    ///
    /// Three pieces: the linearized displacement equations forced by the drive
    /// variation, the induced drift variation `δA` through `δΔ = g₀(δβ + δβ*)`
    /// and `δG = g₀ δα`, and the covariance variation
    /// `δV̇ = A δV + δV Aᵀ + δA V + V δAᵀ`.
    pub fn tangent(
        &self,
        t: f64,
        y: &CoupledState,
        dy: &CoupledState,
        dc: ControlVariation,
    ) -> CoupledState {
        let p = &self.params;
        let (omega, phi) = self.drives.sample(t);
        let delta = p.detuning(y.beta);
        let e_minus = C64::from_polar(1.0, -phi);

        let d_delta = 2.0 * p.g0 * dy.beta.re;
        let d_alpha = -C64::new(p.kappa / 2.0, delta) * dy.alpha - C64::new(0.0, d_delta) * y.alpha
            + C64::new(0.0, dc.omega) * e_minus
            + e_minus * (omega * dc.phi);
        let d_beta = -C64::new(p.gamma_m / 2.0, OMEGA_M) * dy.beta
            - C64::new(0.0, 2.0 * p.g0 * (y.alpha.conj() * dy.alpha).re);

        let d_g = dy.alpha * p.g0;
        let [a_delta, a_gr, a_gi] = drift_partials();
        let da = a_delta * d_delta + a_gr * d_g.re + a_gi * d_g.im;
        let a = self.drift_at(y);
        let adv = a * dy.cov + da * y.cov;
        CoupledState {
            alpha: d_alpha,
            beta: d_beta,
            cov: adv + adv.transpose(),
        }
    }

    /// Transpose of [`Self::tangent`]: maps an output cotangent `w` to the
    /// cotangent of the state and of the instantaneous drive.
    ///
    /// Complex components use `⟨w, z⟩ = Re(w̄ z)`.
    pub fn cotangent(
        &self,
        t: f64,
        y: &CoupledState,
        w: &CoupledState,
    ) -> (CoupledState, ControlVariation) {
        let p = &self.params;
        let (omega, phi) = self.drives.sample(t);
        let delta = p.detuning(y.beta);
        let e_minus = C64::from_polar(1.0, -phi);
        let a = self.drift_at(y);

        // covariance block
        let cov_bar = a.transpose() * w.cov + w.cov * a;
        let m = w.cov * y.cov.transpose() + w.cov.transpose() * y.cov;
        let [a_delta, a_gr, a_gi] = drift_partials();
        let mut delta_bar = a_delta.dot(&m);
        let g_bar = C64::new(a_gr.dot(&m), a_gi.dot(&m));

        // cavity displacement equation
        let mut alpha_bar = C64::new(-p.kappa / 2.0, delta) * w.alpha;
        delta_bar += (w.alpha.conj() * C64::new(0.0, -1.0) * y.alpha).re;
        let control = ControlVariation {
            omega: (w.alpha.conj() * C64::new(0.0, 1.0) * e_minus).re,
            phi: (w.alpha.conj() * e_minus * omega).re,
        };

        // mechanical displacement equation
        let mut beta_bar = C64::new(-p.gamma_m / 2.0, OMEGA_M) * w.beta;
        let s_bar = (w.beta.conj() * C64::new(0.0, -2.0 * p.g0)).re;
        alpha_bar += y.alpha * s_bar;

        // through G = g₀ α and Δ = Δ_c + 2 g₀ Re β
        alpha_bar += g_bar * p.g0;
        beta_bar += C64::new(2.0 * p.g0 * delta_bar, 0.0);

        (
            CoupledState {
                alpha: alpha_bar,
                beta: beta_bar,
                cov: cov_bar,
            },
            control,
        )
    }

    /// One Runge-Kutta step followed by covariance symmetrization.
    pub fn step(&self, t: f64, h: f64, y: &CoupledState) -> CoupledState {
        rk4::step(t, h, y, |s, x| self.rhs(s, x)).symmetrized()
    }

    /// States at every grid node, starting from `y0`.
    pub fn simulate(&self, grid: &TimeGrid, y0: CoupledState) -> Result<Vec<CoupledState>> {
        self.simulate_from(grid, 0.0, y0)
    }

    /// As [`Self::simulate`] but with node times offset by `t0`.
    pub fn simulate_from(
        &self,
        grid: &TimeGrid,
        t0: f64,
        y0: CoupledState,
    ) -> Result<Vec<CoupledState>> {
        if !y0.is_finite() {
            return Err(invalid("initial coupled state is not finite"));
        }
        let h = grid.dt();
        let mut out = Vec::with_capacity(grid.n_nodes());
        out.push(y0);
        let mut y = y0;
        for k in 0..grid.n_steps() {
            y = self.step(t0 + grid.time(k), h, &y);
            if !y.is_finite() {
                return Err(Error::Divergence {
                    step: k + 1,
                    time: t0 + grid.time(k + 1),
                });
            }
            out.push(y);
        }
        Ok(out)
    }
}
