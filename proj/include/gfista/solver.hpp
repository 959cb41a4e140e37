#pragma once

#include <gfista/types.hpp>

namespace gfista {

/// State threaded through one accelerated iteration. Invariants while a solve
/// is running: t >= 1 or t == t0 at the start; tau * mu_f < 1; q in [0, 1);
/// q * t < 1 (equivalently omega > 0). The constant-step rule additionally
/// keeps sqrt(q) * t <= 1; the adaptive rule does not (its t-sequence settles
/// strictly above 1/sqrt(q)).
struct IterateState {
  Vector x_curr;
  Vector x_prev;
  Vector candidate;  // last forward-backward output, kept for monotone mode
  double t = 1.0;
  double tau = 0.0;
  double tau_eff = 0.0;  // tau / (1 - tau * mu_f)
  double q = 0.0;
  double omega = 1.0;
  double beta = 0.0;
};

// ---- Elementary steps -----------------------------------------------------

/// One forward-backward step: prox_{tau g}(y - tau grad f(y)).
Vector forward_backward(const CompositeProblem& problem, const Vector& y,
                        double tau);

/// tau / (1 - tau * mu_f). Requires tau * mu_f < 1.
double effective_step(double tau, double mu_f);

/// q = tau * mu / (1 + tau * mu_g), the inverse condition number of one step.
double inverse_condition(double tau, double mu, double mu_g);

/// Root of the inertial update equation
///   (1 - q_next) t^2 + t (q_next r t_prev^2 - (1 - q_next)) - r t_prev^2 = 0
/// where r is the ratio of effective steps tau_eff_prev / tau_eff_next.
/// Returns the unique non-negative root; it is >= 1 whenever t_prev >= 0.
double update_t(double t_prev, double q_next, double step_ratio);

/// omega = (1 - q t) / (1 - q), the one-step decay factor of the Lyapunov
/// sequence. Equals 1 when q = 0 or t = 1.
double omega_factor(double q, double t);

/// Extrapolation weight beta = omega * (t_prev - 1) / t_next.
double beta_factor(double omega, double t_prev, double t_next);

// ---- Curvature tests ------------------------------------------------------

/// Bregman distance of f: f(x_hat) - f(x_bar) - <grad f(x_bar), x_hat - x_bar>.
/// Convexity makes it non-negative; a clearly negative value means the
/// problem's f_value and f_grad disagree and raises an invariant violation.
double bregman_f(const CompositeProblem& problem, const Vector& x_hat,
                 const Vector& x_bar);

/// Step acceptance test: D_f(x_hat, x_bar) <= |x_hat - x_bar|^2 / (2 tau),
/// with a small absolute slack for round-off.
bool check_cb(const CompositeProblem& problem, const Vector& x_hat,
              const Vector& x_bar, double tau);

/// Growth test for the full backtracking mode: true when the local curvature
/// ratio 2 D_f / |x_hat - x_bar|^2 exceeds c_bt / tau, i.e. the step should
/// not grow. A zero displacement reports false (no curvature information).
bool check_cb2(const CompositeProblem& problem, const Vector& x_hat,
               const Vector& x_bar, double tau, double c_bt);

// ---- Monotone variant -----------------------------------------------------

/// Pick the next iterate: the forward-backward candidate when it does not
/// increase the objective (ties go to the candidate), else keep x_curr.
/// Returns the chosen point and its objective value.
std::pair<Vector, double> monotone_select(const CompositeProblem& problem,
                                          const Vector& candidate,
                                          const Vector& x_curr,
                                          double f_curr);

/// Extrapolation for the monotone variant:
///   y = x_curr + beta * ((x_curr - x_prev)
///                        + t_prev / (t_prev - 1) * (candidate - x_curr)).
/// The correction term vanishes when candidate == x_curr; beta == 0 returns
/// x_curr. t_prev == 1 with a live correction term is a domain error.
Vector monotone_extrapolate(const Vector& x_curr, const Vector& x_prev,
                            const Vector& candidate, double beta,
                            double t_prev);

// ---- A-priori rate certificates -------------------------------------------

/// Fixed-step certificate: bound on F(x^k) - F* after k iterations with
/// constant step tau, inverse condition number q and initial inertia t0.
/// gap0 may be +inf (infeasible start); the t0^2 * gap0 term is dropped when
/// t0 == 0.
double rate_certificate_fixed(int k, double q, double t0, double tau,
                              double mu_g, double gap0, double dist0_sq);

/// Backtracking certificate: bound on F(x^k) - F* under the worst-case
/// inverse condition number q_w. l_bt is the effective Lipschitz constant
/// charged to the step control: l_f / rho by default, rho * l_f when
/// literal_l_bt is set.
double rate_certificate_backtracking(int k, double q_w, double t0, double tau0,
                                     double mu_f, double rho, double l_f,
                                     double gap0, double dist0_sq,
                                     bool literal_l_bt = false);

/// Worst-case inverse condition number over all steps a backtracking run can
/// visit: mu / (max(l_f / rho, rho * l0) + mu_g).
double worst_case_q(double l_f, double rho, double l0, double mu, double mu_g);

/// Check the one-step descent inequality at points (x, x_bar) with step tau:
///   F(T x_bar) + (1 + tau mu_g) |x - T x_bar|^2 / (2 tau)
///     <= F(x) + (1 - tau mu_f) |x - x_bar|^2 / (2 tau)
/// up to a relative slack of 1e-10. Requires the step to satisfy the
/// acceptance test at x_bar; callers pick tau <= 1/L_f to guarantee that.
bool verify_descent_inequality(const CompositeProblem& problem, const Vector& x,
                               const Vector& x_bar, double tau);

// ---- Drivers ----------------------------------------------------------------

/// Accelerated proximal-gradient loop with a constant step. Requires
/// problem.lipschitz_f (use the backtracking driver when it is unknown).
Trace gfista_fixed(const CompositeProblem& problem, const SolverConfig& config,
                   const Vector& x0, const Reference* ref = nullptr);

/// Accelerated proximal-gradient loop with backtracking line search on the
/// step. config.mode selects decrease-only or decrease-and-grow behavior.
Trace gfista_backtracking(const CompositeProblem& problem,
                          const SolverConfig& config, const Vector& x0,
                          const Reference* ref = nullptr);

/// Dispatch on config.mode.
Trace solve(const CompositeProblem& problem, const SolverConfig& config,
            const Vector& x0, const Reference* ref = nullptr);

}  // namespace gfista
