//! C ABI for `lgq-core`.
//!
//! Every function returns an [`LgqStatus`]; on failure the message is kept in
//! thread-local storage and can be copied out with [`lgq_last_error_message`].
//! Matrices are dense row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lgq_core::control::{
    gradient_with, loss_value, optimize, GradientMode, LossKind, Method, OptimizerConfig,
};
use lgq_core::dynamics::{lyapunov_steady_state, TimeGrid};
use lgq_core::gaussian::{negativity_of, symplectic_form, thermal_state, GaussianState};
use lgq_core::optomech::{sideband_limit, DriveWaveforms, OptomechParams};
use lgq_core::Error;
use nalgebra::{DMatrix, Matrix4};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgqStatus {
    Ok = 0,
    InvalidArgument = 1,
    Unsupported = 2,
    NumericalDegeneracy = 3,
    Divergence = 4,
    NoSteadyState = 5,
    DegeneratePoint = 6,
    Truncation = 7,
    NullPointer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgqLoss {
    MeanPhonon = 0,
    EtaMinus = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgqGradientMode {
    Adjoint = 0,
    ForwardSensitivity = 1,
    FiniteDifference = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgqMethod {
    Plain = 0,
    Adam = 1,
}

/// Physical parameters in units of the mechanical frequency.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgqParams {
    pub g0: f64,
    pub kappa: f64,
    pub gamma_m: f64,
    pub delta_c: f64,
    pub n_bar_m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgqOptimizerConfig {
    pub max_iters: usize,
    pub lr_omega: f64,
    pub lr_phi: f64,
    pub method: LgqMethod,
    pub stop_tol: f64,
    pub gradient_mode: LgqGradientMode,
    pub fd_step: f64,
    /// Amplitude bound; NaN disables it.
    pub omega_max: f64,
    pub max_backtracks: usize,
}

/// Opaque optimal-control problem: physics, time grid, initial state and loss.
pub struct LgqProblem {
    params: OptomechParams,
    grid: TimeGrid,
    n_knots: usize,
    initial: GaussianState,
    kind: LossKind,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LgqStatus {
    match e {
        Error::InvalidArgument(_) => LgqStatus::InvalidArgument,
        Error::Unsupported(_) => LgqStatus::Unsupported,
        Error::NumericalDegeneracy(_) => LgqStatus::NumericalDegeneracy,
        Error::Divergence { .. } => LgqStatus::Divergence,
        Error::NoSteadyState { .. } => LgqStatus::NoSteadyState,
        Error::DegeneratePoint(_) => LgqStatus::DegeneratePoint,
        Error::Truncation { .. } => LgqStatus::Truncation,
    }
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LgqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LgqStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LgqStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            LgqStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &'static str) -> Result<*const T, Failure> {
    if p.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(p)
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    Ok(std::slice::from_raw_parts(non_null(p, what)?, len))
}

unsafe fn slice_mut<'a>(
    p: *mut f64,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Failure> {
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    non_null(p, what)?;
    *p = value;
    Ok(())
}

fn params_of(p: &LgqParams) -> Result<OptomechParams, Error> {
    OptomechParams::new(p.g0, p.kappa, p.gamma_m, p.delta_c, p.n_bar_m)
}

fn config_of(c: &LgqOptimizerConfig) -> OptimizerConfig {
    OptimizerConfig {
        max_iters: c.max_iters,
        lr_omega: c.lr_omega,
        lr_phi: c.lr_phi,
        method: match c.method {
            LgqMethod::Plain => Method::Plain,
            LgqMethod::Adam => Method::Adam,
        },
        stop_tol: c.stop_tol,
        gradient_mode: mode_of(c.gradient_mode),
        fd_step: c.fd_step,
        seed: 0,
        omega_max: (!c.omega_max.is_nan()).then_some(c.omega_max),
        max_backtracks: c.max_backtracks,
    }
}

fn mode_of(m: LgqGradientMode) -> GradientMode {
    match m {
        LgqGradientMode::Adjoint => GradientMode::Adjoint,
        LgqGradientMode::ForwardSensitivity => GradientMode::ForwardSensitivity,
        LgqGradientMode::FiniteDifference => GradientMode::FiniteDifference,
    }
}

impl LgqProblem {
    fn drives(&self, omega: &[f64], phi: &[f64]) -> Result<DriveWaveforms, Error> {
        let d = DriveWaveforms::uniform(self.grid.t_end(), self.n_knots, 0.0, 0.0)?;
        d.with_values(omega.to_vec(), phi.to_vec())
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lgq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Length in bytes (without the terminating NUL) of the last error message on
/// this thread, or 0 if the last call succeeded.
#[no_mangle]
pub extern "C" fn lgq_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |c| c.as_bytes().len()))
}

/// Copies the last error message into `buf` (truncated to `len - 1` bytes and
/// NUL-terminated). Returns the number of bytes written, excluding the NUL.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn lgq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |c| c.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Fills `out` with the default optimizer settings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lgq_optimizer_config_default(out: *mut LgqOptimizerConfig) -> LgqStatus {
    guard(|| {
        let d = OptimizerConfig::default();
        let c = LgqOptimizerConfig {
            max_iters: d.max_iters,
            lr_omega: d.lr_omega,
            lr_phi: d.lr_phi,
            method: LgqMethod::Adam,
            stop_tol: d.stop_tol,
            gradient_mode: LgqGradientMode::Adjoint,
            fd_step: d.fd_step,
            omega_max: f64::NAN,
            max_backtracks: d.max_backtracks,
        };
        write(out, c, "out")
    })
}

/// Creates a problem on `[0, t_end]` with `n_knots` equally spaced drive knots
/// and `steps_per_knot` integration steps between knots. The initial state is
/// vacuum cavity and thermal mechanics at the bath occupation.
///
/// # Safety
/// `params` and `out` must be valid pointers. The handle must be released with
/// [`lgq_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_new(
    params: *const LgqParams,
    t_end: f64,
    n_knots: usize,
    steps_per_knot: usize,
    loss: LgqLoss,
    out: *mut *mut LgqProblem,
) -> LgqStatus {
    guard(|| {
        let p = params_of(&*non_null(params, "params")?)?;
        non_null(out, "out")?;
        if n_knots < 2 || steps_per_knot == 0 {
            return Err(
                Error::InvalidArgument("need n_knots >= 2 and steps_per_knot >= 1".into()).into(),
            );
        }
        let grid = TimeGrid::new(t_end, steps_per_knot * (n_knots - 1))?;
        let problem = LgqProblem {
            params: p,
            grid,
            n_knots,
            initial: thermal_state(&[0.0, p.n_bar_m])?,
            kind: match loss {
                LgqLoss::MeanPhonon => LossKind::MeanPhonon,
                LgqLoss::EtaMinus => LossKind::EtaMinus,
            },
        };
        *out = Box::into_raw(Box::new(problem));
        Ok(())
    })
}

/// Releases a problem handle. Passing NULL is a no-op.
///
/// # Safety
/// `problem` must come from [`lgq_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_free(problem: *mut LgqProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Replaces the initial state by thermal states with the given occupations.
///
/// # Safety
/// `problem` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_set_initial_thermal(
    problem: *mut LgqProblem,
    n_cavity: f64,
    n_mech: f64,
) -> LgqStatus {
    guard(|| {
        non_null(problem, "problem")?;
        (*problem).initial = thermal_state(&[n_cavity, n_mech])?;
        Ok(())
    })
}

/// Number of drive knots of the problem.
///
/// # Safety
/// `problem` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_n_knots(
    problem: *const LgqProblem,
    out: *mut usize,
) -> LgqStatus {
    guard(|| write(out, (*non_null(problem, "problem")?).n_knots, "out"))
}

/// Loss at the final time for knot values `omega[n]`, `phi[n]`.
///
/// # Safety
/// `problem` must be a valid handle, `omega` and `phi` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_evaluate(
    problem: *const LgqProblem,
    omega: *const f64,
    phi: *const f64,
    n: usize,
    loss: *mut f64,
) -> LgqStatus {
    guard(|| {
        let pr = &*non_null(problem, "problem")?;
        let d = pr.drives(slice(omega, n, "omega")?, slice(phi, n, "phi")?)?;
        let l = loss_value(&pr.params, &d, &pr.grid, &pr.initial, pr.kind)?;
        write(loss, l, "loss")
    })
}

/// Loss and its partial derivatives with respect to every knot value.
///
/// # Safety
/// `problem` must be a valid handle; `omega`, `phi`, `d_omega` and `d_phi`
/// must hold `n` values; `loss` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_gradient(
    problem: *const LgqProblem,
    omega: *const f64,
    phi: *const f64,
    n: usize,
    mode: LgqGradientMode,
    fd_step: f64,
    d_omega: *mut f64,
    d_phi: *mut f64,
    loss: *mut f64,
) -> LgqStatus {
    guard(|| {
        let pr = &*non_null(problem, "problem")?;
        let d = pr.drives(slice(omega, n, "omega")?, slice(phi, n, "phi")?)?;
        let g = gradient_with(
            &pr.params,
            &d,
            &pr.grid,
            &pr.initial,
            pr.kind,
            mode_of(mode),
            fd_step,
        )?;
        slice_mut(d_omega, n, "d_omega")?.copy_from_slice(&g.d_omega);
        slice_mut(d_phi, n, "d_phi")?.copy_from_slice(&g.d_phi);
        if !loss.is_null() {
            *loss = g.loss;
        }
        Ok(())
    })
}

/// Optimizes the drive in place starting from `omega`, `phi`.
///
/// # Safety
/// `problem` and `config` must be valid; `omega` and `phi` must hold `n`
/// writable values; `final_loss` and `iterations` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lgq_problem_optimize(
    problem: *const LgqProblem,
    config: *const LgqOptimizerConfig,
    omega: *mut f64,
    phi: *mut f64,
    n: usize,
    final_loss: *mut f64,
    iterations: *mut usize,
) -> LgqStatus {
    guard(|| {
        let pr = &*non_null(problem, "problem")?;
        let cfg = config_of(&*non_null(config, "config")?);
        let omega = slice_mut(omega, n, "omega")?;
        let phi = slice_mut(phi, n, "phi")?;
        let d0 = pr.drives(omega, phi)?;
        let (best, records) = optimize(&pr.params, &d0, &pr.grid, &pr.initial, pr.kind, &cfg)?;
        omega.copy_from_slice(best.omega());
        phi.copy_from_slice(best.phi());
        let last = records.last().expect("optimizer log has an initial row");
        if !final_loss.is_null() {
            *final_loss = last.loss;
        }
        if !iterations.is_null() {
            *iterations = last.iter;
        }
        Ok(())
    })
}

/// Sideband-cooling limit `n̄_m γ_m / κ`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lgq_sideband_limit(params: *const LgqParams, out: *mut f64) -> LgqStatus {
    guard(|| {
        let p = params_of(&*non_null(params, "params")?)?;
        write(out, sideband_limit(&p)?, "out")
    })
}

/// Logarithmic negativity and smallest partially transposed symplectic
/// eigenvalue of a 4×4 covariance.
///
/// # Safety
/// `cov` must hold 16 values; `log_negativity` and `eta_minus` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lgq_log_negativity(
    cov: *const f64,
    log_negativity: *mut f64,
    eta_minus: *mut f64,
) -> LgqStatus {
    guard(|| {
        let v = Matrix4::from_row_slice(slice(cov, 16, "cov")?);
        let neg = negativity_of(&v)?;
        if !log_negativity.is_null() {
            *log_negativity = neg.log_negativity;
        }
        if !eta_minus.is_null() {
            *eta_minus = neg.eta_minus;
        }
        Ok(())
    })
}

/// Writes the `2n × 2n` symplectic form of `n_modes` modes into `out`.
///
/// # Safety
/// `out` must hold `4 n_modes²` values.
#[no_mangle]
pub unsafe extern "C" fn lgq_symplectic_form(n_modes: usize, out: *mut f64) -> LgqStatus {
    guard(|| {
        let xi = symplectic_form(n_modes)?;
        let m = xi.matrix();
        let dst = slice_mut(out, m.len(), "out")?;
        for (k, v) in dst.iter_mut().enumerate() {
            *v = m[(k / m.ncols(), k % m.ncols())];
        }
        Ok(())
    })
}

/// Stationary covariance `V` with `A V + V Aᵀ + E = 0` for an `n × n` Hurwitz `A`.
///
/// # Safety
/// `a`, `e` and `v_out` must each hold `n²` values.
#[no_mangle]
pub unsafe extern "C" fn lgq_lyapunov(
    a: *const f64,
    e: *const f64,
    n: usize,
    v_out: *mut f64,
) -> LgqStatus {
    guard(|| {
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let e = DMatrix::from_row_slice(n, n, slice(e, n * n, "e")?);
        let v = lyapunov_steady_state(&a, &e)?;
        let dst = slice_mut(v_out, n * n, "v_out")?;
        for (k, x) in dst.iter_mut().enumerate() {
            *x = v[(k / n, k % n)];
        }
        Ok(())
    })
}
