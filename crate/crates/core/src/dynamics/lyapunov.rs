use nalgebra::{DMatrix, Schur};

use super::vectorize::{superoperator, unvectorize, vectorize};
use crate::error::{invalid, Error, Result};

/// Stationary covariance: solves `A V + V Aᵀ + E = 0` for Hurwitz `A`.
///
/// Uses the Kronecker form `J vec(V) = -vec(E)` with one step of iterative
/// refinement; the systems here are at most 64×64.
pub fn lyapunov_steady_state(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || e.nrows() != n || e.ncols() != n {
        return Err(invalid(
            "drift and diffusion must be square and of equal size",
        ));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalDegeneracy("Schur iteration did not converge".into()))?;
    let max_real_part = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max_real_part < 0.0) {
        return Err(Error::NoSteadyState { max_real_part });
    }
    let j = superoperator(a)?;
    let rhs = -vectorize(e)?;
    let lu = j.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalDegeneracy("Lyapunov operator is singular".into()))?;
    let residual = &rhs - &j * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    let v = unvectorize(&x)?;
    Ok((&v + v.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thermal_mode_steady_state() {
        let (gamma, omega, nbar) = (0.3, 1.0, 7.0);
        let a = DMatrix::from_row_slice(2, 2, &[-gamma / 2.0, omega, -omega, -gamma / 2.0]);
        let e = DMatrix::identity(2, 2) * (gamma / 2.0 * (2.0 * nbar + 1.0));
        let v = lyapunov_steady_state(&a, &e).unwrap();
        assert_relative_eq!(v, DMatrix::identity(2, 2) * (nbar + 0.5), epsilon = 1e-10);
    }

    #[test]
    fn zero_diffusion() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -1.0]);
        let v = lyapunov_steady_state(&a, &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(v, DMatrix::zeros(2, 2));
    }

    #[test]
    fn unstable_drift_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let err = lyapunov_steady_state(&a, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NoSteadyState { .. }));
    }
}
