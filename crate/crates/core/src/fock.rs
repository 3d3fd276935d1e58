//! Truncated Fock-space Lindblad simulator for one or two modes.
//!
//! Used as an independent check of the moment equations. Mode 0 is the cavity
//! (or the only mode), mode 1 the mechanics. Basis index is
//! `n₀·d₁ + n₁`. Ladder operators are applied by index arithmetic rather than
//! stored as matrices.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    drift_from_hamiltonian, propagate_moments, ConstantGenerator, DissipatorSet, LgqGenerator,
    TimeGrid,
};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{symplectic_form, thermal_state, GaussianState};
use crate::optomech::{dissipation_matrices, drift, ClassicalTrajectory, OptomechParams, C64};
use crate::rk4::{self, Linear};

/// Population allowed in the highest retained Fock level of any mode.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;
/// Largest Hilbert-space dimension accepted.
pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct FockConfig {
    pub dims: Vec<usize>,
    pub grid: TimeGrid,
}

impl FockConfig {
    pub fn new(dims: Vec<usize>, grid: TimeGrid) -> Result<Self> {
        if dims.is_empty() || dims.len() > 2 {
            return Err(invalid("one or two modes supported"));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(invalid("each truncation dimension must be at least 2"));
        }
        let total: usize = dims.iter().product();
        if total > MAX_DIMENSION {
            return Err(invalid(format!(
                "Hilbert dimension {total} exceeds {MAX_DIMENSION}"
            )));
        }
        Ok(Self { dims, grid })
    }

    pub fn dimension(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Density matrix on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    rho: DMatrix<C64>,
}

#[derive(Debug, Clone, Copy)]
struct Ladder {
    mode: usize,
    dagger: bool,
}

impl DensityOperator {
    pub fn new(dims: Vec<usize>, rho: DMatrix<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || rho.nrows() != d || rho.ncols() != d {
            return Err(invalid(format!("density matrix must be {d}×{d}")));
        }
        Ok(Self { dims, rho })
    }

    fn from_pure(dims: Vec<usize>, psi: DVector<C64>) -> Result<Self> {
        let rho = &psi * psi.adjoint();
        Self::new(dims, rho)
    }

    pub fn vacuum(dims: &[usize]) -> Result<Self> {
        Self::fock(dims, &vec![0; dims.len()])
    }

    /// Number state `|n₀, n₁, …⟩`.
    pub fn fock(dims: &[usize], levels: &[usize]) -> Result<Self> {
        if levels.len() != dims.len() || levels.iter().zip(dims).any(|(n, d)| n >= d) {
            return Err(invalid("Fock level outside the truncation"));
        }
        let d: usize = dims.iter().product();
        let mut psi = DVector::zeros(d);
        psi[index(dims, levels)] = C64::new(1.0, 0.0);
        Self::from_pure(dims.to_vec(), psi)
    }

    /// Product of coherent states, renormalized inside the truncation.
    pub fn coherent(dims: &[usize], amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != dims.len() {
            return Err(invalid("one amplitude per mode"));
        }
        let factors: Vec<Vec<C64>> = dims
            .iter()
            .zip(amplitudes)
            .map(|(&d, &a)| {
                let mut c = Vec::with_capacity(d);
                let mut term = C64::new((-a.norm_sqr() / 2.0).exp(), 0.0);
                for n in 0..d {
                    c.push(term);
                    term = term * a / ((n + 1) as f64).sqrt();
                }
                c
            })
            .collect();
        let d: usize = dims.iter().product();
        let psi = DVector::from_fn(d, |i, _| {
            levels(dims, i)
                .iter()
                .enumerate()
                .fold(C64::new(1.0, 0.0), |acc, (m, &n)| acc * factors[m][n])
        });
        let norm = psi.norm();
        Self::from_pure(dims.to_vec(), psi / C64::new(norm, 0.0))
    }

    /// Product of thermal states, renormalized inside the truncation.
    pub fn thermal(dims: &[usize], occupations: &[f64]) -> Result<Self> {
        if occupations.len() != dims.len()
            || occupations.iter().any(|n| !(n.is_finite() && *n >= 0.0))
        {
            return Err(invalid("one nonnegative occupation per mode"));
        }
        let d: usize = dims.iter().product();
        let diag = DVector::from_fn(d, |i, _| {
            levels(dims, i)
                .iter()
                .zip(occupations)
                .map(|(&n, &nb)| (nb / (nb + 1.0)).powi(n as i32) / (nb + 1.0))
                .product::<f64>()
        });
        let total = diag.sum();
        let rho = DMatrix::from_diagonal(&diag.map(|p| C64::new(p / total, 0.0)));
        Self::new(dims.to_vec(), rho)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `max |ρ - ρ†|`
    pub fn hermiticity_error(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }

    /// Trace within 1e-8 of one and no eigenvalue below -1e-6.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::NumericalDegeneracy(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -1e-6 {
            return Err(Error::NumericalDegeneracy(format!(
                "eigenvalue {min:e} is negative"
            )));
        }
        Ok(())
    }

    /// Population of the highest retained level of `mode`.
    pub fn top_population(&self, mode: usize) -> f64 {
        let top = self.dims[mode] - 1;
        (0..self.rho.nrows())
            .filter(|&i| levels(&self.dims, i)[mode] == top)
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }

    fn expect(&self, ops: &[Ladder]) -> C64 {
        let mut m = self.rho.clone();
        for op in ops.iter().rev() {
            m = apply_left(&self.dims, *op, &m);
        }
        m.trace()
    }
}

fn index(dims: &[usize], levels: &[usize]) -> usize {
    levels.iter().zip(dims).fold(0, |acc, (n, d)| acc * d + n)
}

fn levels(dims: &[usize], mut i: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for m in (0..dims.len()).rev() {
        out[m] = i % dims[m];
        i /= dims[m];
    }
    out
}

fn stride(dims: &[usize], mode: usize) -> usize {
    dims[mode + 1..].iter().product()
}

/// `op · ρ`
fn apply_left(dims: &[usize], op: Ladder, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    let s = stride(dims, op.mode);
    let top = dims[op.mode];
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let n = (i / s) % top;
        // a: row i takes row i+e with √(n+1); a†: row i takes row i-e with √n
        let (src, amp) = if op.dagger {
            if n == 0 {
                continue;
            }
            (i - s, (n as f64).sqrt())
        } else {
            if n + 1 >= top {
                continue;
            }
            (i + s, ((n + 1) as f64).sqrt())
        };
        for j in 0..d {
            out[(i, j)] = rho[(src, j)] * amp;
        }
    }
    out
}

/// `ρ · op`
fn apply_right(dims: &[usize], op: Ladder, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    let s = stride(dims, op.mode);
    let top = dims[op.mode];
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let n = (j / s) % top;
        // a: column j takes column j-e with √n; a†: column j takes column j+e with √(n+1)
        let (src, amp) = if op.dagger {
            if n + 1 >= top {
                continue;
            }
            (j + s, ((n + 1) as f64).sqrt())
        } else {
            if n == 0 {
                continue;
            }
            (j - s, (n as f64).sqrt())
        };
        for i in 0..d {
            out[(i, j)] = rho[(i, src)] * amp;
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Rho(DMatrix<C64>);

impl Linear for Rho {
    fn axpy(&self, a: f64, x: &Self) -> Self {
        Rho(&self.0 + &x.0 * C64::new(a, 0.0))
    }

    fn scaled(&self, a: f64) -> Self {
        Rho(&self.0 * C64::new(a, 0.0))
    }

    fn add(&self, x: &Self) -> Self {
        Rho(&self.0 + &x.0)
    }
}

/// Loss to a thermal bath: `γ(n̄+1) D[o] + γ n̄ D[o†]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bath {
    pub rate: f64,
    pub n_bar: f64,
}

/// Time-dependent coefficients of a linear model:
/// `H = Σ_k ω_k(t) o_k†o_k + Σ_k (ε_k o_k† + ε_k* o_k) + (G a† + G* a)(b + b†)`.
pub struct FockModel<'a> {
    pub frequencies: Box<dyn Fn(f64) -> Vec<f64> + Sync + 'a>,
    pub drives: Vec<C64>,
    pub coupling: Box<dyn Fn(f64) -> C64 + Sync + 'a>,
    pub baths: Vec<Bath>,
}

impl FockModel<'_> {
    fn rhs(&self, dims: &[usize], t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = rho.nrows();
        let freqs = (self.frequencies)(t);
        let energy = DVector::from_fn(d, |i, _| {
            levels(dims, i)
                .iter()
                .zip(&freqs)
                .map(|(&n, w)| n as f64 * w)
                .sum::<f64>()
        });
        let minus_i = C64::new(0.0, -1.0);
        // -i[H₀, ρ] and the number-operator parts of the dissipators
        let number = |mode: usize, i: usize| ((i / stride(dims, mode)) % dims[mode]) as f64;
        let mut out = DMatrix::from_fn(d, d, |i, j| {
            let mut decay = 0.0;
            for (m, b) in self.baths.iter().enumerate() {
                // -½{γ(n̄+1) n + γ n̄ (n+1), ρ}
                let ni = b.rate * ((b.n_bar + 1.0) * number(m, i) + b.n_bar * (number(m, i) + 1.0));
                let nj = b.rate * ((b.n_bar + 1.0) * number(m, j) + b.n_bar * (number(m, j) + 1.0));
                decay -= 0.5 * (ni + nj);
            }
            rho[(i, j)] * (minus_i * (energy[i] - energy[j]) + decay)
        });
        let lower = |mode| Ladder {
            mode,
            dagger: false,
        };
        let raise = |mode| Ladder { mode, dagger: true };
        for (m, b) in self.baths.iter().enumerate() {
            if b.rate == 0.0 {
                continue;
            }
            let jump_down = apply_right(dims, raise(m), &apply_left(dims, lower(m), rho));
            out += jump_down * C64::new(b.rate * (b.n_bar + 1.0), 0.0);
            if b.n_bar > 0.0 {
                let jump_up = apply_right(dims, lower(m), &apply_left(dims, raise(m), rho));
                out += jump_up * C64::new(b.rate * b.n_bar, 0.0);
            }
        }
        for (m, eps) in self.drives.iter().enumerate() {
            if eps.norm() == 0.0 {
                continue;
            }
            // -i[ε o† + ε* o, ρ]
            let left = apply_left(dims, raise(m), rho) * *eps
                + apply_left(dims, lower(m), rho) * eps.conj();
            let right = apply_right(dims, raise(m), rho) * *eps
                + apply_right(dims, lower(m), rho) * eps.conj();
            out += (left - right) * minus_i;
        }
        if dims.len() == 2 {
            let g = (self.coupling)(t);
            if g.norm() != 0.0 {
                // X = (G a† + G* a)(b + b†)
                let xb = apply_left(dims, lower(1), rho) + apply_left(dims, raise(1), rho);
                let left = apply_left(dims, raise(0), &xb) * g
                    + apply_left(dims, lower(0), &xb) * g.conj();
                let ra = apply_right(dims, raise(0), rho) * g
                    + apply_right(dims, lower(0), rho) * g.conj();
                let right = apply_right(dims, lower(1), &ra) + apply_right(dims, raise(1), &ra);
                out += (left - right) * minus_i;
            }
        }
        out
    }
}

/// Moments at every node and the final density operator.
#[derive(Debug, Clone)]
pub struct FockTrajectory {
    pub moments: Vec<GaussianState>,
    pub final_rho: DensityOperator,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
}

fn check_leakage(rho: &DensityOperator) -> Result<()> {
    for mode in 0..rho.dims.len() {
        let population = rho.top_population(mode);
        if population > LEAKAGE_THRESHOLD {
            return Err(Error::Truncation {
                mode,
                population,
                threshold: LEAKAGE_THRESHOLD,
            });
        }
    }
    Ok(())
}

/// Runge-Kutta propagation of a general linear model.
pub fn propagate_model(
    config: &FockConfig,
    model: &FockModel<'_>,
    rho0: &DensityOperator,
) -> Result<FockTrajectory> {
    if rho0.dims != config.dims {
        return Err(invalid(
            "initial state dimensions differ from the configuration",
        ));
    }
    if model.baths.len() != config.dims.len() {
        return Err(invalid("one bath per mode"));
    }
    if model.drives.len() != config.dims.len() {
        return Err(invalid("one drive amplitude per mode"));
    }
    let dims = config.dims.clone();
    let grid = config.grid;
    let h = grid.dt();
    let mut rho = Rho(rho0.rho.clone());
    let mut moments = Vec::with_capacity(grid.n_nodes());
    let mut max_trace_error: f64 = 0.0;
    let mut max_herm: f64 = 0.0;
    for k in 0..=grid.n_steps() {
        let current = DensityOperator {
            dims: dims.clone(),
            rho: rho.0.clone(),
        };
        check_leakage(&current)?;
        max_trace_error = max_trace_error.max((current.trace() - C64::new(1.0, 0.0)).norm());
        max_herm = max_herm.max(current.hermiticity_error());
        moments.push(moments_from_density(&current)?);
        if k == grid.n_steps() {
            break;
        }
        rho = rk4::step(grid.time(k), h, &rho, |t, r| Rho(model.rhs(&dims, t, &r.0)));
        if rho
            .0
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::Divergence {
                step: k + 1,
                time: grid.time(k + 1),
            });
        }
    }
    Ok(FockTrajectory {
        moments,
        final_rho: DensityOperator { dims, rho: rho.0 },
        max_trace_error,
        max_hermiticity_error: max_herm,
    })
}

fn interpolate<T>(traj: &ClassicalTrajectory, values: &[T], t: f64) -> T
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let grid = &traj.grid;
    let pos = (t / grid.dt()).clamp(0.0, grid.n_steps() as f64);
    let k = (pos.floor() as usize).min(grid.n_steps() - 1);
    let w = pos - k as f64;
    values[k] * (1.0 - w) + values[k + 1] * w
}

/// Linearized optomechanics in the displaced frame with `Δ(t)` and `G(t)`
/// taken from `classical` (linear interpolation between its nodes).
pub fn propagate_lindblad(
    config: &FockConfig,
    params: &OptomechParams,
    classical: &ClassicalTrajectory,
    rho0: &DensityOperator,
) -> Result<FockTrajectory> {
    if config.dims.len() != 2 {
        return Err(invalid("the optomechanical model needs two modes"));
    }
    if (classical.grid.t_end() - config.grid.t_end()).abs() > 1e-12 * config.grid.t_end().max(1.0) {
        return Err(invalid(
            "classical trajectory does not span the propagation window",
        ));
    }
    let omega_m = params.omega_m();
    let model = FockModel {
        frequencies: Box::new(move |t| vec![interpolate(classical, &classical.delta, t), omega_m]),
        drives: vec![C64::new(0.0, 0.0); 2],
        coupling: Box::new(move |t| interpolate(classical, &classical.g, t)),
        baths: vec![
            Bath {
                rate: params.kappa,
                n_bar: 0.0,
            },
            Bath {
                rate: params.gamma_m,
                n_bar: params.n_bar_m,
            },
        ],
    };
    propagate_model(config, &model, rho0)
}

/// Mean and symmetrized covariance of the quadratures.
pub fn moments_from_density(rho: &DensityOperator) -> Result<GaussianState> {
    let n = rho.dims.len();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // x_{2m} = (a + a†)/√2, x_{2m+1} = i(a† - a)/√2
    let coeffs = |i: usize| -> [(Ladder, C64); 2] {
        let mode = i / 2;
        let (lower, raise) = (
            Ladder {
                mode,
                dagger: false,
            },
            Ladder { mode, dagger: true },
        );
        if i.is_multiple_of(2) {
            [(lower, C64::new(s, 0.0)), (raise, C64::new(s, 0.0))]
        } else {
            [(lower, C64::new(0.0, -s)), (raise, C64::new(0.0, s))]
        }
    };
    let trace = rho.trace();
    let dim = 2 * n;
    let mean = DVector::from_fn(dim, |i, _| {
        coeffs(i)
            .iter()
            .map(|(op, c)| c * rho.expect(&[*op]))
            .sum::<C64>()
            .re
            / trace.re
    });
    let mut second = DMatrix::<C64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for (oi, ci) in coeffs(i) {
                for (oj, cj) in coeffs(j) {
                    acc += ci * cj * rho.expect(&[oi, oj]);
                }
            }
            second[(i, j)] = acc / trace.re;
        }
    }
    let cov = DMatrix::from_fn(dim, dim, |i, j| {
        0.5 * (second[(i, j)] + second[(j, i)]).re - mean[i] * mean[j]
    });
    GaussianState::new(mean, cov)
}

/// Shipped Gaussian-versus-Fock comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// One mode relaxing toward a thermal bath.
    DampedThermalMode,
    /// One detuned, damped cavity with a constant coherent drive.
    DrivenDetunedCavity,
    /// Cavity and mechanics with constant `G = 0.05`, `Δ = 1`.
    TwoModeOptomech,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::DampedThermalMode,
        Scenario::DrivenDetunedCavity,
        Scenario::TwoModeOptomech,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::DampedThermalMode => "damped-thermal",
            Scenario::DrivenDetunedCavity => "driven-cavity",
            Scenario::TwoModeOptomech => "two-mode",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Largest moment discrepancies between the two simulators over all nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub max_mean_abs_error: f64,
    /// `max_k ‖V_fock - V_gauss‖_max / ‖V_gauss‖_max`
    pub max_cov_rel_error: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
}

impl ComparisonReport {
    pub fn within_tolerance(&self) -> bool {
        self.max_mean_abs_error <= 1e-6
            && self.max_cov_rel_error <= 1e-3
            && self.max_trace_error <= 1e-8
            && self.max_hermiticity_error <= 1e-8
    }
}

fn compare(
    fock: &FockTrajectory,
    gen: &dyn LgqGenerator,
    initial: &GaussianState,
    grid: &TimeGrid,
) -> Result<ComparisonReport> {
    let gauss = propagate_moments(gen, initial, grid)?;
    let mut mean_err: f64 = 0.0;
    let mut cov_err: f64 = 0.0;
    for (f, (m, v)) in fock.moments.iter().zip(gauss.means.iter().zip(&gauss.covs)) {
        mean_err = mean_err.max((f.mean() - m).amax());
        cov_err = cov_err.max((f.cov() - v).amax() / v.amax());
    }
    Ok(ComparisonReport {
        max_mean_abs_error: mean_err,
        max_cov_rel_error: cov_err,
        max_trace_error: fock.max_trace_error,
        max_hermiticity_error: fock.max_hermiticity_error,
    })
}

fn single_mode_generator(
    delta: f64,
    kappa: f64,
    n_bar: f64,
    drive: C64,
) -> Result<ConstantGenerator> {
    let down = (kappa * (n_bar + 1.0) / 2.0).sqrt();
    let up = (kappa * n_bar / 2.0).sqrt();
    let rows = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(down, 0.0),
            C64::new(0.0, down),
            C64::new(up, 0.0),
            C64::new(0.0, -up),
        ],
    );
    let dissipators = DissipatorSet::new(1, rows)?;
    let xi = symplectic_form(1)?;
    let a = drift_from_hamiltonian(&(DMatrix::identity(2, 2) * delta), &dissipators, &xi)?;
    let e = crate::dynamics::diffusion_from_dissipators(&dissipators, &xi)?;
    let s = std::f64::consts::SQRT_2;
    let u = DVector::from_vec(vec![s * drive.im, -s * drive.re]);
    ConstantGenerator::new(a, u, e)
}

/// Runs a shipped scenario with the given truncation (or its default).
pub fn run_scenario(scenario: Scenario, dims: Option<Vec<usize>>) -> Result<ComparisonReport> {
    match scenario {
        Scenario::DampedThermalMode | Scenario::DrivenDetunedCavity => {
            let (delta, kappa) = (1.0, 0.2);
            let (n_bar, n0, drive) = if scenario == Scenario::DampedThermalMode {
                (0.5, 1.0, C64::new(0.0, 0.0))
            } else {
                (0.0, 0.0, C64::new(0.3, 0.1))
            };
            let config =
                FockConfig::new(dims.unwrap_or_else(|| vec![30]), TimeGrid::new(10.0, 1000)?)?;
            let model = FockModel {
                frequencies: Box::new(move |_| vec![delta]),
                drives: vec![drive],
                coupling: Box::new(|_| C64::new(0.0, 0.0)),
                baths: vec![Bath { rate: kappa, n_bar }],
            };
            let rho0 = DensityOperator::thermal(&config.dims, &[n0])?;
            let fock = propagate_model(&config, &model, &rho0)?;
            let gen = single_mode_generator(delta, kappa, n_bar, drive)?;
            compare(&fock, &gen, &thermal_state(&[n0])?, &config.grid)
        }
        Scenario::TwoModeOptomech => {
            let params = OptomechParams {
                kappa: 0.2,
                n_bar_m: 0.5,
                ..OptomechParams::cooling_reference()
            };
            let (delta, g) = (1.0, C64::new(0.05, 0.0));
            let grid = TimeGrid::new(10.0, 1000)?;
            let config = FockConfig::new(dims.unwrap_or_else(|| vec![10, 20]), grid)?;
            let classical = constant_classical(&params, &grid, delta, g);
            let rho0 = DensityOperator::thermal(&config.dims, &[0.0, params.n_bar_m])?;
            let fock = propagate_lindblad(&config, &params, &classical, &rho0)?;
            let (_, e) = dissipation_matrices(&params);
            let a = drift(delta, g, &params);
            let gen = ConstantGenerator::homogeneous(
                DMatrix::from_fn(4, 4, |r, c| a[(r, c)]),
                DMatrix::from_fn(4, 4, |r, c| e[(r, c)]),
            )?;
            compare(&fock, &gen, &thermal_state(&[0.0, params.n_bar_m])?, &grid)
        }
    }
}

/// Classical trajectory with constant detuning and coupling.
pub fn constant_classical(
    params: &OptomechParams,
    grid: &TimeGrid,
    delta: f64,
    g: C64,
) -> ClassicalTrajectory {
    let n = grid.n_nodes();
    ClassicalTrajectory {
        grid: *grid,
        alpha: vec![g / params.g0; n],
        beta: vec![C64::new((delta - params.delta_c) / (2.0 * params.g0), 0.0); n],
        delta: vec![delta; n],
        g: vec![g; n],
    }
}
