//! Fixed-step classic Runge-Kutta shared by the structured integrators.
//!
//! Every integrator that is later differentiated goes through [`stages`] and
//! [`combine`] so that forward, tangent and adjoint passes see the same
//! floating-point operations.

/// Minimal vector-space interface over an ODE state.
pub(crate) trait Linear: Clone {
    /// `self + a * x`
    fn axpy(&self, a: f64, x: &Self) -> Self;
    /// `a * self`
    fn scaled(&self, a: f64) -> Self;
    fn add(&self, x: &Self) -> Self;
}

/// Stage states `Y_i` and slopes `k_i` of one step from `(t, y)`.
pub(crate) struct Stages<S> {
    pub states: [S; 4],
    pub slopes: [S; 4],
}

pub(crate) fn stage_times(t: f64, h: f64) -> [f64; 4] {
    [t, t + 0.5 * h, t + 0.5 * h, t + h]
}

pub(crate) fn stages<S: Linear>(
    t: f64,
    h: f64,
    y: &S,
    mut f: impl FnMut(f64, &S) -> S,
) -> Stages<S> {
    let ts = stage_times(t, h);
    let y1 = y.clone();
    let k1 = f(ts[0], &y1);
    let y2 = y.axpy(0.5 * h, &k1);
    let k2 = f(ts[1], &y2);
    let y3 = y.axpy(0.5 * h, &k2);
    let k3 = f(ts[2], &y3);
    let y4 = y.axpy(h, &k3);
    let k4 = f(ts[3], &y4);
    Stages {
        states: [y1, y2, y3, y4],
        slopes: [k1, k2, k3, k4],
    }
}

/// `y + h/6 (k1 + 2 k2 + 2 k3 + k4)`
pub(crate) fn combine<S: Linear>(h: f64, y: &S, k: &[S; 4]) -> S {
    let sum = k[0]
        .add(&k[1].scaled(2.0))
        .add(&k[2].scaled(2.0))
        .add(&k[3]);
    y.axpy(h / 6.0, &sum)
}

pub(crate) fn step<S: Linear>(t: f64, h: f64, y: &S, f: impl FnMut(f64, &S) -> S) -> S {
    let s = stages(t, h, y, f);
    combine(h, y, &s.slopes)
}
