//! Gaussian states over `N` bosonic modes.
//!
//! Quadratures are ordered `(q1, p1, ..., qN, pN)` with `q = (a† + a)/√2` and
//! `p = i(a† - a)/√2`, so the vacuum covariance is `I/2` and `[x_j, x_k] = iΞ_jk`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2, Matrix4};

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Default tolerance for the uncertainty-relation check.
pub const PHYSICALITY_TOL: f64 = 1e-9;
/// Relative tolerance under which `Σ² - 4 det V` is clamped to zero.
pub const ETA_DISCRIMINANT_TOL: f64 = 1e-12;

/// The symplectic form Ξ of `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Builds Ξ from its Kronecker-delta definition (1-based indices):
/// `Ξ_jk = ½ δ_{j+1,k} [1 - (-1)^j] - ½ δ_{j,k+1} [1 + (-1)^j]`.
pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(invalid("symplectic form needs at least one mode"));
    }
    let dim = 2 * n_modes;
    let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let matrix = DMatrix::from_fn(dim, dim, |r, c| {
        let (j, k) = (r + 1, c + 1);
        let mut v = 0.0;
        if j + 1 == k {
            v += 0.5 * (1.0 - sign(j));
        }
        if j == k + 1 {
            v -= 0.5 * (1.0 + sign(j));
        }
        v
    });
    Ok(SymplecticForm { n_modes, matrix })
}

/// Mean vector and covariance matrix of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(invalid(format!("mean length {dim} is not 2N for N >= 1")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(invalid(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("state contains non-finite entries"));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(invalid(format!("covariance asymmetric by {asym:e}")));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(n_modes: usize) -> Result<Self> {
        thermal_state(&vec![0.0; n_modes])
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn with_mean(mut self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.mean.len() {
            return Err(invalid("mean length does not match the state"));
        }
        self.mean = mean;
        Ok(self)
    }

    /// Covariance as a fixed 4×4 matrix; only valid for two-mode states.
    pub fn cov4(&self) -> Result<Matrix4<f64>> {
        if self.n_modes() != 2 {
            return Err(Error::Unsupported(format!(
                "expected a two-mode state, got {} modes",
                self.n_modes()
            )));
        }
        Ok(Matrix4::from_fn(|r, c| self.cov[(r, c)]))
    }
}

/// Product of thermal states with the given mean occupations.
pub fn thermal_state(occupations: &[f64]) -> Result<GaussianState> {
    if occupations.is_empty() {
        return Err(invalid("need at least one mode"));
    }
    if let Some(n) = occupations.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
        return Err(invalid(format!(
            "occupation {n} is not a nonnegative number"
        )));
    }
    let dim = 2 * occupations.len();
    let cov = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            occupations[r / 2] + 0.5
        } else {
            0.0
        }
    });
    GaussianState::new(DVector::zeros(dim), cov)
}

/// `⟨o†o⟩` of one mode: `(V_qq + V_pp - 1)/2 + (⟨q⟩² + ⟨p⟩²)/2`.
pub fn mean_occupation(state: &GaussianState, mode: usize) -> Result<f64> {
    if mode >= state.n_modes() {
        return Err(invalid(format!(
            "mode {mode} out of range for {} modes",
            state.n_modes()
        )));
    }
    let (q, p) = (2 * mode, 2 * mode + 1);
    let cov = state.cov();
    let mean = state.mean();
    Ok(0.5 * (cov[(q, q)] + cov[(p, p)] - 1.0) + 0.5 * (mean[q] * mean[q] + mean[p] * mean[p]))
}

/// Result of the uncertainty-relation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub physical: bool,
    /// Smallest eigenvalue of the Hermitian matrix `V + (i/2)Ξ`.
    pub min_eigenvalue: f64,
}

pub fn check_physicality(state: &GaussianState, tol: f64) -> PhysicalityReport {
    let min_eigenvalue = uncertainty_min_eigenvalue(state.cov());
    PhysicalityReport {
        physical: min_eigenvalue >= -tol,
        min_eigenvalue,
    }
}

/// Smallest eigenvalue of `V + (i/2)Ξ` for a `2N×2N` covariance.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let xi = symplectic_form(cov.nrows() / 2).expect("non-empty covariance");
    let herm = DMatrix::from_fn(cov.nrows(), cov.ncols(), |r, c| {
        Complex::new(0.5 * (cov[(r, c)] + cov[(c, r)]), 0.5 * xi.matrix()[(r, c)])
    });
    herm.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Logarithmic negativity of a two-mode state together with the smallest
/// partially transposed symplectic eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negativity {
    pub log_negativity: f64,
    pub eta_minus: f64,
}

pub fn logarithmic_negativity(state: &GaussianState) -> Result<Negativity> {
    negativity_of(&state.cov4()?)
}

/// Block invariants of a two-mode covariance `[[V_A, V_C], [V_Cᵀ, V_B]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TwoModeInvariants {
    /// `Σ = det V_A + det V_B - 2 det V_C`.
    pub sigma: f64,
    pub det: f64,
    /// `Z = √(Σ² - 4 det V)`, clamped at zero near the branch point.
    pub z: f64,
    pub eta_minus: f64,
}

pub(crate) fn block(v: &Matrix4<f64>, r: usize, c: usize) -> Matrix2<f64> {
    v.fixed_view::<2, 2>(r, c).into_owned()
}

pub(crate) fn two_mode_invariants(v: &Matrix4<f64>) -> Result<TwoModeInvariants> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("covariance contains non-finite entries"));
    }
    let sigma = block(v, 0, 0).determinant() + block(v, 2, 2).determinant()
        - 2.0 * block(v, 0, 2).determinant();
    let det = v.determinant();
    let disc = sigma * sigma - 4.0 * det;
    let scale = (sigma * sigma).max(1.0);
    let disc = if disc < 0.0 {
        if disc < -ETA_DISCRIMINANT_TOL * scale {
            return Err(Error::NumericalDegeneracy(format!(
                "Σ² - 4 det V = {disc:e} is negative beyond tolerance"
            )));
        }
        0.0
    } else {
        disc
    };
    let z = disc.sqrt();
    // (Σ - Z)/2 rewritten as 2 det V / (Σ + Z) to avoid cancellation when Σ ≫ η².
    let denom = sigma + z;
    if denom <= 0.0 {
        return Err(Error::NumericalDegeneracy(format!(
            "Σ + Z = {denom:e} is not positive"
        )));
    }
    let eta_sq = 2.0 * det / denom;
    if eta_sq < 0.0 {
        return Err(Error::NumericalDegeneracy(format!(
            "η⁻² = {eta_sq:e} is negative"
        )));
    }
    Ok(TwoModeInvariants {
        sigma,
        det,
        z,
        eta_minus: eta_sq.sqrt(),
    })
}

/// `E_N = max(0, -ln 2η⁻)` for a 4×4 covariance.
pub fn negativity_of(v: &Matrix4<f64>) -> Result<Negativity> {
    let eta_minus = two_mode_invariants(v)?.eta_minus;
    let log_negativity = if 2.0 * eta_minus >= 1.0 {
        0.0
    } else {
        -(2.0 * eta_minus).ln()
    };
    Ok(Negativity {
        log_negativity,
        eta_minus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn squeezed(r: f64) -> Matrix4<f64> {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        Matrix4::new(
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        )
    }

    #[test]
    fn symplectic_small_cases() {
        let one = symplectic_form(1).unwrap();
        assert_eq!(
            one.matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
        );
        let two = symplectic_form(2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        );
        assert_eq!(two.matrix(), &expected);
        assert!(matches!(symplectic_form(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn symplectic_invariants_exhaustive() {
        for n in 1..=8 {
            let xi = symplectic_form(n).unwrap().into_matrix();
            assert_eq!(xi.transpose(), -&xi);
            assert_eq!(&xi * &xi, -DMatrix::identity(2 * n, 2 * n));
        }
    }

    #[test]
    fn thermal_construction() {
        assert_eq!(
            thermal_state(&[0.0]).unwrap().cov(),
            &(DMatrix::identity(2, 2) * 0.5)
        );
        assert_eq!(
            thermal_state(&[1000.0]).unwrap().cov(),
            &(DMatrix::identity(2, 2) * 1000.5)
        );
        let s = thermal_state(&[1000.0, 0.0]).unwrap();
        assert_eq!(
            s.cov(),
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1000.5, 1000.5, 0.5, 0.5]))
        );
        assert_eq!(mean_occupation(&s, 0).unwrap(), 1000.0);
        assert_eq!(mean_occupation(&s, 1).unwrap(), 0.0);
        assert!(thermal_state(&[-1.0]).is_err());
        assert!(mean_occupation(&s, 2).is_err());
    }

    #[test]
    fn coherent_occupation_includes_mean() {
        let s = GaussianState::vacuum(1)
            .unwrap()
            .with_mean(DVector::from_vec(vec![2f64.sqrt(), 0.0]))
            .unwrap();
        assert_relative_eq!(mean_occupation(&s, 0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let mut cov = DMatrix::identity(2, 2) * 0.5;
        cov[(0, 1)] = 1e-9;
        assert!(GaussianState::new(DVector::zeros(2), cov).is_err());
    }

    #[test]
    fn physicality_reports() {
        let vac = check_physicality(&GaussianState::vacuum(2).unwrap(), PHYSICALITY_TOL);
        assert!(vac.physical);
        assert!(vac.min_eigenvalue.abs() < 1e-14);
        let sub = GaussianState::new(DVector::zeros(4), DMatrix::identity(4, 4) * 0.25).unwrap();
        assert!(!check_physicality(&sub, PHYSICALITY_TOL).physical);
        assert!(check_physicality(&thermal_state(&[100.0]).unwrap(), PHYSICALITY_TOL).physical);
    }

    #[test]
    fn vacuum_negativity() {
        let n = logarithmic_negativity(&GaussianState::vacuum(2).unwrap()).unwrap();
        assert_eq!(n.log_negativity, 0.0);
        assert_relative_eq!(n.eta_minus, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn squeezed_negativity() {
        let n = negativity_of(&squeezed(0.5)).unwrap();
        assert_relative_eq!(n.log_negativity, 1.0, epsilon = 1e-12);
        assert_relative_eq!(n.eta_minus, (-1f64).exp() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn squeezed_eta_matches_partial_transpose_spectrum() {
        // Symplectic eigenvalues of Ṽ = PVP (P flips p_B) are the square roots of
        // the eigenvalues of the symmetric matrix Ṽ^½ Ξ Ṽ Ξᵀ Ṽ^½.
        let v = squeezed(0.5);
        let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        let vt = p * v * p;
        let xi = symplectic_form(2).unwrap().into_matrix();
        let xi4 = Matrix4::from_fn(|r, c| xi[(r, c)]);
        let root = vt.symmetric_eigen();
        let sqrt_vt = root.eigenvectors
            * Matrix4::from_diagonal(&root.eigenvalues.map(f64::sqrt))
            * root.eigenvectors.transpose();
        let m = sqrt_vt * xi4 * vt * xi4.transpose() * sqrt_vt;
        let eigs = m.symmetric_eigenvalues().map(f64::sqrt);
        let smallest = eigs.iter().copied().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(smallest, (-1f64).exp() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn three_modes_unsupported() {
        let s = GaussianState::vacuum(3).unwrap();
        assert!(matches!(
            logarithmic_negativity(&s),
            Err(Error::Unsupported(_))
        ));
    }
}
