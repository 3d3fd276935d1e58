#ifndef LGQ_H
#define LGQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LgqGradientMode {
  LGQ_GRADIENT_MODE_ADJOINT = 0,
  LGQ_GRADIENT_MODE_FORWARD_SENSITIVITY = 1,
  LGQ_GRADIENT_MODE_FINITE_DIFFERENCE = 2,
} LgqGradientMode;

typedef enum LgqLoss {
  LGQ_LOSS_MEAN_PHONON = 0,
  LGQ_LOSS_ETA_MINUS = 1,
} LgqLoss;

typedef enum LgqMethod {
  LGQ_METHOD_PLAIN = 0,
  LGQ_METHOD_ADAM = 1,
} LgqMethod;

typedef enum LgqStatus {
  LGQ_STATUS_OK = 0,
  LGQ_STATUS_INVALID_ARGUMENT = 1,
  LGQ_STATUS_UNSUPPORTED = 2,
  LGQ_STATUS_NUMERICAL_DEGENERACY = 3,
  LGQ_STATUS_DIVERGENCE = 4,
  LGQ_STATUS_NO_STEADY_STATE = 5,
  LGQ_STATUS_DEGENERATE_POINT = 6,
  LGQ_STATUS_TRUNCATION = 7,
  LGQ_STATUS_NULL_POINTER = 8,
  LGQ_STATUS_PANIC = 9,
} LgqStatus;

/**
 * Opaque optimal-control problem: physics, time grid, initial state and loss.
 */
typedef struct LgqProblem LgqProblem;

typedef struct LgqOptimizerConfig {
  size_t max_iters;
  double lr_omega;
  double lr_phi;
  enum LgqMethod method;
  double stop_tol;
  enum LgqGradientMode gradient_mode;
  double fd_step;
  /**
   * Amplitude bound; NaN disables it.
   */
  double omega_max;
  size_t max_backtracks;
} LgqOptimizerConfig;

/**
 * Physical parameters in units of the mechanical frequency.
 */
typedef struct LgqParams {
  double g0;
  double kappa;
  double gamma_m;
  double delta_c;
  double n_bar_m;
} LgqParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lgq_version(void);

/**
 * Length in bytes (without the terminating NUL) of the last error message on
 * this thread, or 0 if the last call succeeded.
 */
size_t lgq_last_error_length(void);

/**
 * Copies the last error message into `buf` (truncated to `len - 1` bytes and
 * NUL-terminated). Returns the number of bytes written, excluding the NUL.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes.
 */
size_t lgq_last_error_message(char *buf, size_t len);

/**
 * Fills `out` with the default optimizer settings.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum LgqStatus lgq_optimizer_config_default(struct LgqOptimizerConfig *out);

/**
 * Creates a problem on `[0, t_end]` with `n_knots` equally spaced drive knots
 * and `steps_per_knot` integration steps between knots. The initial state is
 * vacuum cavity and thermal mechanics at the bath occupation.
 *
 * # Safety
 * `params` and `out` must be valid pointers. The handle must be released with
 * [`lgq_problem_free`].
 */
enum LgqStatus lgq_problem_new(const struct LgqParams *params,
                               double t_end,
                               size_t n_knots,
                               size_t steps_per_knot,
                               enum LgqLoss loss,
                               struct LgqProblem **out);

/**
 * Releases a problem handle. Passing NULL is a no-op.
 *
 * # Safety
 * `problem` must come from [`lgq_problem_new`] and not be used afterwards.
 */
void lgq_problem_free(struct LgqProblem *problem);

/**
 * Replaces the initial state by thermal states with the given occupations.
 *
 * # Safety
 * `problem` must be a valid handle.
 */
enum LgqStatus lgq_problem_set_initial_thermal(struct LgqProblem *problem,
                                               double n_cavity,
                                               double n_mech);

/**
 * Number of drive knots of the problem.
 *
 * # Safety
 * `problem` and `out` must be valid pointers.
 */
enum LgqStatus lgq_problem_n_knots(const struct LgqProblem *problem, size_t *out);

/**
 * Loss at the final time for knot values `omega[n]`, `phi[n]`.
 *
 * # Safety
 * `problem` must be a valid handle, `omega` and `phi` must hold `n` values.
 */
enum LgqStatus lgq_problem_evaluate(const struct LgqProblem *problem,
                                    const double *omega,
                                    const double *phi,
                                    size_t n,
                                    double *loss);

/**
 * Loss and its partial derivatives with respect to every knot value.
 *
 * # Safety
 * `problem` must be a valid handle; `omega`, `phi`, `d_omega` and `d_phi`
 * must hold `n` values; `loss` may be NULL.
 */
enum LgqStatus lgq_problem_gradient(const struct LgqProblem *problem,
                                    const double *omega,
                                    const double *phi,
                                    size_t n,
                                    enum LgqGradientMode mode,
                                    double fd_step,
                                    double *d_omega,
                                    double *d_phi,
                                    double *loss);

/**
 * Optimizes the drive in place starting from `omega`, `phi`.
 *
 * # Safety
 * `problem` and `config` must be valid; `omega` and `phi` must hold `n`
 * writable values; `final_loss` and `iterations` may be NULL.
 */
enum LgqStatus lgq_problem_optimize(const struct LgqProblem *problem,
                                    const struct LgqOptimizerConfig *config,
                                    double *omega,
                                    double *phi,
                                    size_t n,
                                    double *final_loss,
                                    size_t *iterations);

/**
 * Sideband-cooling limit `n̄_m γ_m / κ`.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum LgqStatus lgq_sideband_limit(const struct LgqParams *params, double *out);

/**
 * Logarithmic negativity and smallest partially transposed symplectic
 * eigenvalue of a 4×4 covariance.
 *
 * # Safety
 * `cov` must hold 16 values; `log_negativity` and `eta_minus` may be NULL.
 */
enum LgqStatus lgq_log_negativity(const double *cov, double *log_negativity, double *eta_minus);

/**
 * Writes the `2n × 2n` symplectic form of `n_modes` modes into `out`.
 *
 * # Safety
 * `out` must hold `4 n_modes²` values.
 */
enum LgqStatus lgq_symplectic_form(size_t n_modes, double *out);

/**
 * Stationary covariance `V` with `A V + V Aᵀ + E = 0` for an `n × n` Hurwitz `A`.
 *
 * # Safety
 * `a`, `e` and `v_out` must each hold `n²` values.
 */
enum LgqStatus lgq_lyapunov(const double *a, const double *e, size_t n, double *v_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LGQ_H */
