use nalgebra::{DMatrix, DVector};

use super::vectorize::{superoperator, unvectorize, vectorize};
use super::{LgqGenerator, TimeGrid};
use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianState;

/// Mean and covariance at every node of a grid, including `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub grid: TimeGrid,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

impl MomentTrajectory {
    pub fn final_state(&self) -> Result<GaussianState> {
        let k = self.grid.n_steps();
        GaussianState::new(self.means[k].clone(), self.covs[k].clone())
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn ensure_finite<'a>(
    values: impl IntoIterator<Item = &'a f64>,
    step: usize,
    grid: &TimeGrid,
) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            step,
            time: grid.time(step),
        })
    }
}

fn check_generator<G: LgqGenerator + ?Sized>(gen: &G, initial: &GaussianState) -> Result<()> {
    if gen.n_modes() != initial.n_modes() {
        return Err(invalid(format!(
            "generator has {} modes, initial state {}",
            gen.n_modes(),
            initial.n_modes()
        )));
    }
    Ok(())
}

/// Classic fourth-order Runge-Kutta on the first and second moments.
///
/// `A(t)` and `u(t)` are sampled at the stage times; the covariance is
/// re-symmetrized after every step.
pub fn propagate_moments<G: LgqGenerator + ?Sized>(
    gen: &G,
    initial: &GaussianState,
    grid: &TimeGrid,
) -> Result<MomentTrajectory> {
    check_generator(gen, initial)?;
    let e = gen.diffusion();
    let h = grid.dt();
    let mut mean = initial.mean().clone();
    let mut cov = initial.cov().clone();
    let mut means = Vec::with_capacity(grid.n_nodes());
    let mut covs = Vec::with_capacity(grid.n_nodes());
    means.push(mean.clone());
    covs.push(cov.clone());

    let mean_rhs = |a: &DMatrix<f64>, u: &DVector<f64>, m: &DVector<f64>| a * m + u;
    let cov_rhs = |a: &DMatrix<f64>, v: &DMatrix<f64>| {
        let av = a * v;
        &av + av.transpose() + e
    };

    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let (a0, a1, a2) = (gen.drift(t), gen.drift(t + 0.5 * h), gen.drift(t + h));
        let (u0, u1, u2) = (gen.drive(t), gen.drive(t + 0.5 * h), gen.drive(t + h));

        let m1 = mean_rhs(&a0, &u0, &mean);
        let m2 = mean_rhs(&a1, &u1, &(&mean + &m1 * (0.5 * h)));
        let m3 = mean_rhs(&a1, &u1, &(&mean + &m2 * (0.5 * h)));
        let m4 = mean_rhs(&a2, &u2, &(&mean + &m3 * h));
        mean += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (h / 6.0);

        let v1 = cov_rhs(&a0, &cov);
        let v2 = cov_rhs(&a1, &(&cov + &v1 * (0.5 * h)));
        let v3 = cov_rhs(&a1, &(&cov + &v2 * (0.5 * h)));
        let v4 = cov_rhs(&a2, &(&cov + &v3 * h));
        cov += (v1 + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
        symmetrize(&mut cov);

        ensure_finite(mean.iter().chain(cov.iter()), k + 1, grid)?;
        means.push(mean.clone());
        covs.push(cov.clone());
    }
    Ok(MomentTrajectory {
        grid: *grid,
        means,
        covs,
    })
}

/// `U(t_k)` with `dU/dt = A(t) U`, `U(0) = I`, at every node.
pub fn transition_matrices<G: LgqGenerator + ?Sized>(
    gen: &G,
    grid: &TimeGrid,
) -> Result<Vec<DMatrix<f64>>> {
    let dim = 2 * gen.n_modes();
    let h = grid.dt();
    let mut u = DMatrix::identity(dim, dim);
    let mut out = Vec::with_capacity(grid.n_nodes());
    out.push(u.clone());
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let (a0, a1, a2) = (gen.drift(t), gen.drift(t + 0.5 * h), gen.drift(t + h));
        let k1 = &a0 * &u;
        let k2 = &a1 * (&u + &k1 * (0.5 * h));
        let k3 = &a1 * (&u + &k2 * (0.5 * h));
        let k4 = &a2 * (&u + &k3 * h);
        u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        ensure_finite(u.iter(), k + 1, grid)?;
        out.push(u.clone());
    }
    Ok(out)
}

/// Covariance flow in vectorized form, `dK/dt = J(t) K + vec(E)`.
///
/// Returns `K(t_k) = vec V(t_k)` at every node.
pub fn propagate_vectorized<G: LgqGenerator + ?Sized>(
    gen: &G,
    initial: &GaussianState,
    grid: &TimeGrid,
) -> Result<Vec<DVector<f64>>> {
    check_generator(gen, initial)?;
    let l = vectorize(gen.diffusion())?;
    let h = grid.dt();
    let mut k_vec = vectorize(initial.cov())?;
    let mut out = Vec::with_capacity(grid.n_nodes());
    out.push(k_vec.clone());
    for k in 0..grid.n_steps() {
        let t = grid.time(k);
        let j0 = superoperator(&gen.drift(t))?;
        let j1 = superoperator(&gen.drift(t + 0.5 * h))?;
        let j2 = superoperator(&gen.drift(t + h))?;
        let k1 = &j0 * &k_vec + &l;
        let k2 = &j1 * (&k_vec + &k1 * (0.5 * h)) + &l;
        let k3 = &j1 * (&k_vec + &k2 * (0.5 * h)) + &l;
        let k4 = &j2 * (&k_vec + &k3 * h) + &l;
        k_vec += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let mut v = unvectorize(&k_vec)?;
        symmetrize(&mut v);
        k_vec = vectorize(&v)?;
        ensure_finite(k_vec.iter(), k + 1, grid)?;
        out.push(k_vec.clone());
    }
    Ok(out)
}
