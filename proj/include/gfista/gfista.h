/* C interface to the accelerated proximal-gradient solver library.
 *
 * All functions return gf_status unless they are pure arithmetic; on any
 * failure gf_last_error_message() describes the most recent error in the
 * calling thread. Arrays are row-major doubles owned by the caller. Dual
 * vector fields pass their two planes stacked: component 1 first, then
 * component 2, each rows*cols long.
 */
#ifndef GFISTA_H
#define GFISTA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gf_status {
  GF_OK = 0,
  GF_ERR_INVALID_ARGUMENT = 1,
  GF_ERR_DOMAIN = 2,
  GF_ERR_CONFIG = 3,
  GF_ERR_NUMERICAL = 4,
  GF_ERR_STEP_FAILURE = 5,
  GF_ERR_INVARIANT = 6,
  GF_ERR_IO = 7,
  GF_ERR_INTERNAL = 8
} gf_status;

/* Message for the last failing call on this thread; empty string if none. */
const char* gf_last_error_message(void);

typedef enum gf_step_mode {
  GF_STEP_FIXED = 0,
  GF_STEP_CLASSIC_BACKTRACKING = 1,
  GF_STEP_FULL_BACKTRACKING = 2
} gf_step_mode;

typedef struct gf_config {
  int mode;                 /* one of gf_step_mode */
  double tau0;              /* initial step size, > 0 */
  double rho;               /* step reduction factor in (0, 1) */
  double c_bt;              /* growth threshold in (0, 1), full mode only */
  double t0;                /* initial inertial parameter, >= 0 */
  int i_max;                /* cap on step reductions per iteration */
  int max_iters;            /* outer iterations to run */
  int monotone;             /* nonzero: never increase the objective */
  int recompute_y_on_retry; /* nonzero: refresh extrapolation on retries */
  int force_mu_zero;        /* nonzero: ignore strong convexity in inertia */
  int check_invariants;     /* nonzero: verify per-iteration identities */
} gf_config;

/* Fill config with the library defaults (full backtracking, tau0 = 1,
 * rho = c_bt = 0.9, t0 = 1, i_max = 50, max_iters = 100, invariants on). */
void gf_config_defaults(gf_config* config);

/* Row k of a solve trace describes iterate k. Columns without a defined
 * value (for example gap without a reference) hold NaN. */
typedef struct gf_trace_record {
  int32_t k;
  double objective;
  double gap;
  double lipschitz_estimate; /* 1 / tau */
  double tau;
  double t;
  double omega;
  double beta;
  int32_t n_backtracks;
  double certificate_bound;
} gf_trace_record;

typedef struct gf_problem gf_problem; /* opaque */

/* Dual Huber-ROF denoising built from a noisy image (rows*cols, row-major).
 * Unknown dimension: 2*rows*cols (a dual vector field). */
gf_status gf_problem_huber_rof(const double* noisy, int32_t rows, int32_t cols,
                               double lambda, double eps, gf_problem** out);

/* Photon-count denoising with a total-variation prior. background may be
 * NULL for a constant background of 1. inner_iters sets the fixed iteration
 * count of the nested prox solver. Unknown dimension: rows*cols. */
gf_status gf_problem_poisson_tv(const double* noisy, const double* background,
                                int32_t rows, int32_t cols, double lambda,
                                double eps, int32_t inner_iters,
                                gf_problem** out);

/* Separable quadratic with a known minimizer, for smoke tests. */
gf_status gf_problem_quadratic_toy(int32_t dim, double l_max, double mu_g,
                                   uint64_t seed, gf_problem** out);

void gf_problem_free(gf_problem* problem);

int64_t gf_problem_dim(const gf_problem* problem);
double gf_problem_mu_f(const gf_problem* problem);
double gf_problem_mu_g(const gf_problem* problem);

/* GF_ERR_DOMAIN when the problem does not know its Lipschitz constant. */
gf_status gf_problem_lipschitz(const gf_problem* problem, double* out);

/* Objective value F(x) = f(x) + g(x); may be +inf outside the domain of g. */
gf_status gf_problem_objective(const gf_problem* problem, const double* x,
                               double* out);

/* Canonical starting point for the problem family; x0 has length dim. */
gf_status gf_problem_default_init(const gf_problem* problem, double* x0);

/* Run the solver. x0 may be NULL to start from the default point. x_ref
 * (length dim) and f_ref supply a reference minimizer; pass x_ref = NULL to
 * leave the gap and certificate columns empty. A solve produces exactly
 * max_iters + 1 records; when trace is non-NULL, trace_capacity must be at
 * least that (GF_ERR_INVALID_ARGUMENT otherwise) and n_records reports the
 * count written. trace may be NULL. x_out (length dim) may be NULL. */
gf_status gf_solve(const gf_problem* problem, const gf_config* config,
                   const double* x0, const double* x_ref, double f_ref,
                   gf_trace_record* trace, int32_t trace_capacity,
                   int32_t* n_records, double* x_out);

/* Long fixed-step run returning a reference minimizer. x_init may be NULL
 * for the default start. cache_dir may be NULL to skip the file cache;
 * otherwise results are stored under a key derived from the problem data and
 * iters, and reused when present. x_star has length dim. */
gf_status gf_compute_reference(const gf_problem* problem, const double* x_init,
                               int32_t iters, const char* cache_dir,
                               double* x_star, double* f_star);

/* A-priori bound on F(x^k) - F* for a constant-step run. */
double gf_rate_certificate_fixed(int32_t k, double q, double t0, double tau,
                                 double mu_g, double gap0, double dist0_sq);

/* A-priori bound on F(x^k) - F* for a backtracking run under the worst-case
 * inverse condition number q_w. */
double gf_rate_certificate_backtracking(int32_t k, double q_w, double t0,
                                        double tau0, double mu_f, double rho,
                                        double l_f, double gap0,
                                        double dist0_sq, int literal_l_bt);

/* Worst-case inverse condition number of a backtracking run started at step
 * 1 / l0 on a problem with gradient Lipschitz constant l_f. */
double gf_worst_case_q(double l_f, double rho, double l0, double mu,
                       double mu_g);

/* Piecewise-constant test image with values in [0, 1]. */
gf_status gf_make_phantom(int32_t rows, int32_t cols, double* out);

/* Deterministic synthetic noise; out may alias clean. */
gf_status gf_add_gaussian_noise(const double* clean, int32_t rows, int32_t cols,
                                double variance, uint64_t seed, double* out);
gf_status gf_add_poisson_noise(const double* clean, int32_t rows, int32_t cols,
                               double peak, uint64_t seed, double* out);

/* Recover the denoised image from a dual point of a Huber-ROF problem.
 * p has length 2*rows*cols, u_out has length rows*cols. */
gf_status gf_huber_rof_primal_from_dual(const gf_problem* problem,
                                        const double* p, double* u_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GFISTA_H */
