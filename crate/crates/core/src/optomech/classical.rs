use nalgebra::{DMatrix, DVector, Matrix4};

use super::coupled::CoupledSystem;
use super::{dissipation_matrices, drift, DriveWaveforms, OptomechParams, C64, OMEGA_M};
use crate::dynamics::{LgqGenerator, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::rk4::{self, Linear};

/// Displacement amplitudes and derived detuning and coupling at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub grid: TimeGrid,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    /// `Δ(t_k) = Δ_c + g₀(β_k + β_k*)`
    pub delta: Vec<f64>,
    /// `G(t_k) = g₀ α_k`
    pub g: Vec<C64>,
}

impl ClassicalTrajectory {
    pub(crate) fn from_amplitudes(
        params: &OptomechParams,
        grid: TimeGrid,
        alpha: Vec<C64>,
        beta: Vec<C64>,
    ) -> Self {
        let delta = beta.iter().map(|b| params.detuning(*b)).collect();
        let g = alpha.iter().map(|a| params.coupling(*a)).collect();
        Self {
            grid,
            alpha,
            beta,
            delta,
            g,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Amplitudes {
    alpha: C64,
    beta: C64,
}

impl Linear for Amplitudes {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        Self {
            alpha: self.alpha + x.alpha * a,
            beta: self.beta + x.beta * a,
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            alpha: self.alpha * a,
            beta: self.beta * a,
        }
    }

    fn add(&self, x: &Self) -> Self {
        Self {
            alpha: self.alpha + x.alpha,
            beta: self.beta + x.beta,
        }
    }
}

fn check_span(drives: &DriveWaveforms, grid: &TimeGrid) -> Result<()> {
    let (a, b) = (drives.t_end(), grid.t_end());
    if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
        return Err(invalid(format!(
            "drives span [0, {a}] but grid ends at {b}"
        )));
    }
    Ok(())
}

/// Integrates `α̇ = -(iΔ + κ/2)α + iΩe^{-iφ}` and `β̇ = -(iω_m + γ_m/2)β - i g₀|α|²`.
pub fn integrate_classical(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    alpha0: C64,
    beta0: C64,
) -> Result<ClassicalTrajectory> {
    check_span(drives, grid)?;
    let sys = CoupledSystem::new(params, drives)?;
    let h = grid.dt();
    let mut y = Amplitudes {
        alpha: alpha0,
        beta: beta0,
    };
    let mut alpha = Vec::with_capacity(grid.n_nodes());
    let mut beta = Vec::with_capacity(grid.n_nodes());
    alpha.push(y.alpha);
    beta.push(y.beta);
    for k in 0..grid.n_steps() {
        y = rk4::step(grid.time(k), h, &y, |t, s| {
            let (a, b) = sys.classical_rhs(t, s.alpha, s.beta);
            Amplitudes { alpha: a, beta: b }
        });
        let finite = [y.alpha.re, y.alpha.im, y.beta.re, y.beta.im]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Divergence {
                step: k + 1,
                time: grid.time(k + 1),
            });
        }
        alpha.push(y.alpha);
        beta.push(y.beta);
    }
    Ok(ClassicalTrajectory::from_amplitudes(
        params, *grid, alpha, beta,
    ))
}

/// Coefficient matrix of the linearized displacement equations acting on
/// `(δα, δβ, δα*, δβ*)`.
pub fn sensitivity_matrix(params: &OptomechParams, alpha: C64, beta: C64) -> Matrix4<C64> {
    let delta = params.detuning(beta);
    let i = C64::new(0.0, 1.0);
    let ga = i * params.g0 * alpha;
    let gac = i * params.g0 * alpha.conj();
    let z = C64::new(0.0, 0.0);
    let cav = C64::new(-params.kappa / 2.0, -delta);
    let mech = C64::new(-params.gamma_m / 2.0, -OMEGA_M);
    Matrix4::new(
        cav,
        -ga,
        z,
        -ga, //
        -gac,
        mech,
        -ga,
        z, //
        z,
        gac,
        cav.conj(),
        gac, //
        gac,
        z,
        ga,
        mech.conj(),
    )
}

#[derive(Debug, Clone, Copy)]
struct WithPropagator {
    amp: Amplitudes,
    lambda: Matrix4<C64>,
}

impl Linear for WithPropagator {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        Self {
            amp: self.amp.axpy(a, &x.amp),
            lambda: self.lambda + x.lambda * C64::new(a, 0.0),
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            amp: self.amp.scaled(a),
            lambda: self.lambda * C64::new(a, 0.0),
        }
    }

    fn add(&self, x: &Self) -> Self {
        Self {
            amp: self.amp.add(&x.amp),
            lambda: self.lambda + x.lambda,
        }
    }
}

/// Propagator `Λ(t)` of the linearized displacement equations, `Λ̇ = W(t)Λ`,
/// `Λ(0) = I`, integrated together with `α` and `β`.
///
/// Column `j` of `Λ(t_k)` is the response of `(α, β, α*, β*)(t_k)` to a unit
/// perturbation of component `j` at `t = 0`.
pub fn classical_sensitivity_propagator(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    alpha0: C64,
    beta0: C64,
) -> Result<(ClassicalTrajectory, Vec<Matrix4<C64>>)> {
    check_span(drives, grid)?;
    let sys = CoupledSystem::new(params, drives)?;
    let h = grid.dt();
    let mut y = WithPropagator {
        amp: Amplitudes {
            alpha: alpha0,
            beta: beta0,
        },
        lambda: Matrix4::identity(),
    };
    let mut alpha = vec![alpha0];
    let mut beta = vec![beta0];
    let mut lambdas = vec![y.lambda];
    for k in 0..grid.n_steps() {
        y = rk4::step(grid.time(k), h, &y, |t, s| {
            let (a, b) = sys.classical_rhs(t, s.amp.alpha, s.amp.beta);
            WithPropagator {
                amp: Amplitudes { alpha: a, beta: b },
                lambda: sensitivity_matrix(params, s.amp.alpha, s.amp.beta) * s.lambda,
            }
        });
        if y.lambda
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Divergence {
                step: k + 1,
                time: grid.time(k + 1),
            });
        }
        alpha.push(y.amp.alpha);
        beta.push(y.amp.beta);
        lambdas.push(y.lambda);
    }
    Ok((
        ClassicalTrajectory::from_amplitudes(params, *grid, alpha, beta),
        lambdas,
    ))
}

/// LGQ generator of the linearized model in the displaced frame (`u ≡ 0`).
///
/// The displacement amplitudes are integrated on a grid twice as fine as the
/// propagation grid, so the drift at every node and half-node is an exact
/// sample; other times are linearly interpolated.
#[derive(Debug, Clone)]
pub struct OptomechGenerator {
    params: OptomechParams,
    fine: ClassicalTrajectory,
    diffusion: DMatrix<f64>,
}

impl OptomechGenerator {
    pub fn classical(&self) -> &ClassicalTrajectory {
        &self.fine
    }

    fn sample(&self, t: f64) -> (f64, C64) {
        let grid = &self.fine.grid;
        let pos = (t / grid.dt()).clamp(0.0, grid.n_steps() as f64);
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            let k = nearest as usize;
            return (self.fine.delta[k], self.fine.g[k]);
        }
        let k = (pos.floor() as usize).min(grid.n_steps() - 1);
        let w = pos - k as f64;
        let delta = (1.0 - w) * self.fine.delta[k] + w * self.fine.delta[k + 1];
        let g = self.fine.g[k] * (1.0 - w) + self.fine.g[k + 1] * w;
        (delta, g)
    }
}

impl LgqGenerator for OptomechGenerator {
    fn n_modes(&self) -> usize {
        2
    }

    fn drift(&self, t: f64) -> DMatrix<f64> {
        let (delta, g) = self.sample(t);
        let a = drift(delta, g, &self.params);
        DMatrix::from_fn(4, 4, |r, c| a[(r, c)])
    }

    fn drive(&self, _t: f64) -> DVector<f64> {
        DVector::zeros(4)
    }

    fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }
}

/// Generator for `(params, drives)` plus the classical trajectory on `grid`.
pub fn build_generator(
    params: &OptomechParams,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
    alpha0: C64,
    beta0: C64,
) -> Result<(OptomechGenerator, ClassicalTrajectory)> {
    let fine = integrate_classical(params, drives, &grid.refined(2), alpha0, beta0)?;
    let pick = |v: &Vec<C64>| v.iter().step_by(2).copied().collect::<Vec<_>>();
    let coarse =
        ClassicalTrajectory::from_amplitudes(params, *grid, pick(&fine.alpha), pick(&fine.beta));
    let (_, e) = dissipation_matrices(params);
    let diffusion = DMatrix::from_fn(4, 4, |r, c| e[(r, c)]);
    Ok((
        OptomechGenerator {
            params: *params,
            fine,
            diffusion,
        },
        coarse,
    ))
}
