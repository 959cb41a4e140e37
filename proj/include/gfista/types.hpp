#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfista {

using Vector = Eigen::VectorXd;

enum class ErrorCode {
  invalid_argument,
  domain_error,
  config_error,
  numerical_failure,
  step_failure,
  invariant_violation,
  io_error,
};

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Composite objective F = f + g with f smooth and g admitting a proximal map.
/// mu_f and mu_g are the strong-convexity moduli of f and g (0 when merely
/// convex); lipschitz_f is the gradient Lipschitz constant of f when known.
struct CompositeProblem {
  std::function<double(const Vector&)> f_value;
  std::function<Vector(const Vector&)> f_grad;
  std::function<double(const Vector&)> g_value;
  // prox of g with step tau: argmin_w g(w) + |w - z|^2 / (2 tau)
  std::function<Vector(const Vector&, double)> g_prox;
  // Optional exact Bregman distance of f. The generic fallback
  // f(x_hat) - f(x_bar) - <grad f(x_bar), x_hat - x_bar> cancels catastrophically
  // for nearby points on large problems; builders that know a closed form
  // should supply it here.
  std::function<double(const Vector&, const Vector&)> f_bregman;
  double mu_f = 0.0;
  double mu_g = 0.0;
  std::optional<double> lipschitz_f;
  Eigen::Index dim = 0;

  double objective(const Vector& x) const { return f_value(x) + g_value(x); }
};

enum class StepMode {
  fixed,                 // constant step, no curvature checks
  classic_backtracking,  // step may only shrink
  full_backtracking,     // step may also grow when curvature allows
};

struct SolverConfig {
  StepMode mode = StepMode::full_backtracking;
  double tau0 = 1.0;       // initial step; fixed mode keeps it forever
  double rho = 0.9;        // step reduction factor in (0, 1)
  double c_bt = 0.9;       // growth threshold for the full mode, in (0, 1)
  double t0 = 1.0;         // initial inertial parameter, >= 0
  int i_max = 50;          // cap on step reductions per iteration
  int max_iters = 100;     // number of outer iterations to run
  bool monotone = false;   // enforce non-increasing objective values
  // When a trial step is rejected, recompute the inertial parameters and the
  // extrapolated point for the new step before retrying. Keeps the accepted
  // tuple self-consistent; disable to retry from the stale extrapolation.
  bool recompute_y_on_retry = true;
  // Run the strong-convexity-blind variant: all inertial bookkeeping treats
  // mu_f = mu_g = 0 even when the problem declares positive moduli.
  bool force_mu_zero = false;
  bool check_invariants = true;  // verify per-iteration identities, throw on failure
};

/// One row per iterate. Row k describes x^k: the objective, the step and
/// inertial parameters that produced it, and the a-priori certificate bound
/// for its objective gap. Fields without a defined value hold NaN.
struct TraceRecord {
  int k = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();
  double lipschitz_estimate = std::numeric_limits<double>::quiet_NaN();
  double tau = std::numeric_limits<double>::quiet_NaN();
  double t = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  int n_backtracks = 0;
  double certificate_bound = std::numeric_limits<double>::quiet_NaN();
};

/// Known minimizer used to fill the gap and certificate columns of a trace.
struct Reference {
  Vector x_star;
  double f_star = std::numeric_limits<double>::quiet_NaN();
};

struct Trace {
  std::vector<TraceRecord> records;
  Vector solution;
};

}  // namespace gfista
