//! Moment dynamics of linear Gaussian quantum (LGQ) systems.
//!
//! A system of `N` modes with Hamiltonian `½ xᵀ G x - xᵀ Ξ u` and linear jump
//! operators `L_j = Σ_k D_jk x_k` has closed first and second moment equations
//!
//! ```text
//! d⟨x⟩/dt = A ⟨x⟩ + u
//! dV/dt   = A V + V Aᵀ + E
//! ```
//!
//! with drift `A = Ξ [G + Im(D†D)]` and diffusion `E = Ξ Re(D†D) Ξᵀ`.

mod lyapunov;
mod propagate;
mod vectorize;

pub use lyapunov::lyapunov_steady_state;
pub use propagate::{
    propagate_moments, propagate_vectorized, transition_matrices, MomentTrajectory,
};
pub use vectorize::{superoperator, unvectorize, vectorize};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::gaussian::SymplecticForm;

/// Tolerance on the imaginary residue of the drift before it is discarded.
pub const DRIFT_IMAG_TOL: f64 = 1e-12;

/// Uniform time grid on `[0, t_end]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(invalid(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(invalid("time grid needs at least one step"));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Time of node `k`; the last node is exactly `t_end`.
    pub fn time(&self, k: usize) -> f64 {
        self.t_end * k as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes()).map(|k| self.time(k))
    }

    /// Same span with the step count multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            t_end: self.t_end,
            n_steps: self.n_steps * factor.max(1),
        }
    }
}

/// Rows of complex jump-operator coefficients, `M × 2N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorSet {
    n_modes: usize,
    rows: DMatrix<Complex<f64>>,
}

impl DissipatorSet {
    pub fn new(n_modes: usize, rows: DMatrix<Complex<f64>>) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("dissipator set needs at least one mode"));
        }
        if rows.ncols() != 2 * n_modes {
            return Err(invalid(format!(
                "dissipator rows have {} columns, expected {}",
                rows.ncols(),
                2 * n_modes
            )));
        }
        if rows.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("dissipator coefficients must be finite"));
        }
        Ok(Self { n_modes, rows })
    }

    pub fn empty(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, DMatrix::zeros(0, 2 * n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn rows(&self) -> &DMatrix<Complex<f64>> {
        &self.rows
    }

    /// `D†D`, a `2N × 2N` Hermitian matrix.
    pub fn gram(&self) -> DMatrix<Complex<f64>> {
        self.rows.adjoint() * &self.rows
    }
}

fn check_dims(what: &str, m: &DMatrix<f64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(invalid(format!(
            "{what} is {}x{}, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `A = Ξ [G + Im(D†D)]`.
pub fn drift_from_hamiltonian(
    hamiltonian: &DMatrix<f64>,
    dissipators: &DissipatorSet,
    xi: &SymplecticForm,
) -> Result<DMatrix<f64>> {
    let dim = 2 * xi.n_modes();
    check_dims("Hamiltonian matrix", hamiltonian, dim)?;
    if dissipators.n_modes() != xi.n_modes() {
        return Err(invalid(
            "dissipators and symplectic form disagree on mode count",
        ));
    }
    let xi_c = xi.matrix().map(|x| Complex::new(x, 0.0));
    let gram = dissipators.gram();
    let inner = gram.map(|z| Complex::new(z.im, 0.0)) + hamiltonian.map(|x| Complex::new(x, 0.0));
    let full = xi_c * inner;
    let residue = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > DRIFT_IMAG_TOL {
        return Err(invalid(format!(
            "drift has imaginary residue {residue:e}; Hamiltonian must be real"
        )));
    }
    Ok(full.map(|z| z.re))
}

/// `E = Ξ Re(D†D) Ξᵀ`.
pub fn diffusion_from_dissipators(
    dissipators: &DissipatorSet,
    xi: &SymplecticForm,
) -> Result<DMatrix<f64>> {
    if dissipators.n_modes() != xi.n_modes() {
        return Err(invalid(
            "dissipators and symplectic form disagree on mode count",
        ));
    }
    let re = dissipators.gram().map(|z| z.re);
    let e = xi.matrix() * re * xi.matrix().transpose();
    Ok((&e + e.transpose()) * 0.5)
}

/// Time-dependent coefficients of the moment equations.
pub trait LgqGenerator: Sync {
    fn n_modes(&self) -> usize;
    /// Drift matrix `A(t)`.
    fn drift(&self, t: f64) -> DMatrix<f64>;
    /// Drive vector `u(t)`.
    fn drive(&self, t: f64) -> DVector<f64>;
    /// Constant diffusion matrix `E`.
    fn diffusion(&self) -> &DMatrix<f64>;
}

fn check_diffusion(e: &DMatrix<f64>) -> Result<()> {
    if (e - e.transpose()).amax() > 1e-12 {
        return Err(invalid("diffusion matrix is not symmetric"));
    }
    let min = e.clone().symmetric_eigenvalues().min();
    if min < -1e-12 {
        return Err(invalid(format!(
            "diffusion matrix has eigenvalue {min:e} < 0"
        )));
    }
    Ok(())
}

/// Generator with time-independent `A`, `u` and `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantGenerator {
    drift: DMatrix<f64>,
    drive: DVector<f64>,
    diffusion: DMatrix<f64>,
}

impl ConstantGenerator {
    pub fn new(drift: DMatrix<f64>, drive: DVector<f64>, diffusion: DMatrix<f64>) -> Result<Self> {
        let dim = drive.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(invalid("drive length must be 2N"));
        }
        check_dims("drift", &drift, dim)?;
        check_dims("diffusion", &diffusion, dim)?;
        if drift.iter().chain(drive.iter()).any(|x| !x.is_finite()) {
            return Err(invalid("generator entries must be finite"));
        }
        check_diffusion(&diffusion)?;
        Ok(Self {
            drift,
            drive,
            diffusion,
        })
    }

    /// Homogeneous generator: `u = 0`.
    pub fn homogeneous(drift: DMatrix<f64>, diffusion: DMatrix<f64>) -> Result<Self> {
        let dim = drift.nrows();
        Self::new(drift, DVector::zeros(dim), diffusion)
    }
}

impl LgqGenerator for ConstantGenerator {
    fn n_modes(&self) -> usize {
        self.drive.len() / 2
    }

    fn drift(&self, _t: f64) -> DMatrix<f64> {
        self.drift.clone()
    }

    fn drive(&self, _t: f64) -> DVector<f64> {
        self.drive.clone()
    }

    fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }
}

type DriftFn = dyn Fn(f64) -> DMatrix<f64> + Send + Sync;
type DriveFn = dyn Fn(f64) -> DVector<f64> + Send + Sync;

/// Generator defined by closures for `A(t)` and `u(t)`.
pub struct FnGenerator {
    n_modes: usize,
    drift: Box<DriftFn>,
    drive: Box<DriveFn>,
    diffusion: DMatrix<f64>,
}

impl FnGenerator {
    pub fn new(
        n_modes: usize,
        drift: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        drive: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static,
        diffusion: DMatrix<f64>,
    ) -> Result<Self> {
        if n_modes == 0 {
            return Err(invalid("generator needs at least one mode"));
        }
        check_dims("diffusion", &diffusion, 2 * n_modes)?;
        check_diffusion(&diffusion)?;
        check_dims("drift(0)", &drift(0.0), 2 * n_modes)?;
        if drive(0.0).len() != 2 * n_modes {
            return Err(invalid("drive(0) has the wrong length"));
        }
        Ok(Self {
            n_modes,
            drift: Box::new(drift),
            drive: Box::new(drive),
            diffusion,
        })
    }
}

impl LgqGenerator for FnGenerator {
    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn drift(&self, t: f64) -> DMatrix<f64> {
        (self.drift)(t)
    }

    fn drive(&self, t: f64) -> DVector<f64> {
        (self.drive)(t)
    }

    fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::symplectic_form;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn drift_of_free_oscillator() {
        let xi = symplectic_form(1).unwrap();
        let w = 1.7;
        let g = DMatrix::from_diagonal_element(2, 2, w);
        let a = drift_from_hamiltonian(&g, &DissipatorSet::empty(1).unwrap(), &xi).unwrap();
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]));
    }

    #[test]
    fn cavity_decay_drift_and_diffusion() {
        let kappa: f64 = 0.3;
        let xi = symplectic_form(1).unwrap();
        let k = (kappa / 2.0).sqrt();
        let d =
            DissipatorSet::new(1, DMatrix::from_row_slice(1, 2, &[c(k, 0.0), c(0.0, k)])).unwrap();
        let a = drift_from_hamiltonian(&DMatrix::zeros(2, 2), &d, &xi).unwrap();
        let e = diffusion_from_dissipators(&d, &xi).unwrap();
        let expected = DMatrix::identity(2, 2) * (kappa / 2.0);
        assert_relative_eq!(a, -&expected, epsilon = 1e-15);
        assert_relative_eq!(e, expected, epsilon = 1e-15);
    }

    #[test]
    fn empty_dissipators_give_zero_diffusion() {
        let xi = symplectic_form(3).unwrap();
        let e = diffusion_from_dissipators(&DissipatorSet::empty(3).unwrap(), &xi).unwrap();
        assert_eq!(e, DMatrix::zeros(6, 6));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let xi = symplectic_form(2).unwrap();
        let d = DissipatorSet::empty(1).unwrap();
        assert!(drift_from_hamiltonian(&DMatrix::zeros(4, 4), &d, &xi).is_err());
        assert!(diffusion_from_dissipators(&d, &xi).is_err());
        let d2 = DissipatorSet::empty(2).unwrap();
        assert!(drift_from_hamiltonian(&DMatrix::zeros(2, 2), &d2, &xi).is_err());
        assert!(DissipatorSet::new(2, DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn grid_nodes() {
        let g = TimeGrid::new(38.0, 8000).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(8000), 38.0);
        assert_eq!(g.n_nodes(), 8001);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn drift_is_real_for_hermitian_inputs(
            g in proptest::collection::vec(-2.0f64..2.0, 16),
            d in proptest::collection::vec(-1.0f64..1.0, 24),
        ) {
            let xi = symplectic_form(2).unwrap();
            let g = DMatrix::from_row_slice(4, 4, &g);
            let g = (&g + g.transpose()) * 0.5;
            let rows = DMatrix::from_fn(3, 4, |r, col| c(d[2 * (4 * r + col)], d[2 * (4 * r + col) + 1]));
            let dis = DissipatorSet::new(2, rows).unwrap();
            let a = drift_from_hamiltonian(&g, &dis, &xi);
            prop_assert!(a.is_ok());
            let e = diffusion_from_dissipators(&dis, &xi).unwrap();
            let min = e.clone().symmetric_eigenvalues().min();
            prop_assert!(min > -1e-12);
        }
    }
}
