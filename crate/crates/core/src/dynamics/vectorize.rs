use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};

/// Row-major stacking: `(V11, V12, ..., V1n, V21, ..., Vnn)`.
pub fn vectorize(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.nrows() != m.ncols() {
        return Err(invalid(format!(
            "vectorize expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    Ok(DVector::from_fn(n * n, |i, _| m[(i / n, i % n)]))
}

/// Inverse of [`vectorize`]. The length must be `4N²` for some `N ≥ 1`.
pub fn unvectorize(v: &DVector<f64>) -> Result<DMatrix<f64>> {
    let len = v.len();
    let n = (len as f64).sqrt().round() as usize;
    if len == 0 || n * n != len || !n.is_multiple_of(2) {
        return Err(invalid(format!("length {len} is not 4N² for any N >= 1")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| v[r * n + c]))
}

/// `J = I⊗A + A⊗I`, so that `vec(A V + V Aᵀ) = J vec(V)`.
///
/// The sum is symmetric in the Kronecker order, so the identity holds for
/// row-major stacking as well as column-major.
pub fn superoperator(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(invalid("superoperator expects a square matrix"));
    }
    let id = DMatrix::identity(a.nrows(), a.nrows());
    Ok(id.kronecker(a) + a.kronecker(&id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn two_by_two_layout() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vectorize(&m).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bad_lengths_rejected() {
        assert!(unvectorize(&DVector::zeros(3)).is_err());
        assert!(unvectorize(&DVector::zeros(9)).is_err());
        assert!(unvectorize(&DVector::zeros(0)).is_err());
        assert!(vectorize(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn left_multiplication_in_row_major() {
        // Row-major: vec(A V) = (A ⊗ I) vec(V) and vec(V Aᵀ) = (I ⊗ A) vec(V).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, v) = (random(4, &mut rng), random(4, &mut rng));
        let id = DMatrix::identity(4, 4);
        let lhs = vectorize(&(&a * &v)).unwrap();
        let rhs = a.kronecker(&id) * vectorize(&v).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-14);
        let lhs = vectorize(&(&v * a.transpose())).unwrap();
        let rhs = id.kronecker(&a) * vectorize(&v).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-14);
    }

    #[test]
    fn identity_superoperator() {
        let j = superoperator(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(j, DMatrix::identity(4, 4) * 2.0);
    }

    #[test]
    fn superoperator_generates_lyapunov_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random(4, &mut rng);
            let v = random(4, &mut rng);
            let v = &v + v.transpose();
            let lhs = vectorize(&(&a * &v + &v * a.transpose())).unwrap();
            let rhs = superoperator(&a).unwrap() * vectorize(&v).unwrap();
            assert!((lhs - rhs).amax() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn roundtrip(vals in proptest::collection::vec(-1e6f64..1e6, 16)) {
            let m = DMatrix::from_row_slice(4, 4, &vals);
            prop_assert_eq!(unvectorize(&vectorize(&m).unwrap()).unwrap(), m);
        }
    }
}
