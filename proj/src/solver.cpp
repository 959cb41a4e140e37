#include <gfista/solver.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace gfista {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

void validate_problem(const CompositeProblem& problem) {
  if (problem.dim <= 0)
    fail(ErrorCode::invalid_argument, "problem dimension must be positive");
  if (!problem.f_value || !problem.f_grad || !problem.g_value ||
      !problem.g_prox)
    fail(ErrorCode::invalid_argument,
         "problem must provide f_value, f_grad, g_value and g_prox");
  if (problem.mu_f < 0 || problem.mu_g < 0)
    fail(ErrorCode::invalid_argument,
         "strong convexity moduli must be non-negative");
  if (problem.lipschitz_f &&
      !(problem.mu_f < *problem.lipschitz_f && *problem.lipschitz_f > 0))
    fail(ErrorCode::invalid_argument,
         "lipschitz_f must be positive and exceed mu_f");
}

void validate_config(const SolverConfig& config) {
  if (!(config.tau0 > 0))
    fail(ErrorCode::config_error, "tau0 must be positive");
  if (!(config.rho > 0 && config.rho < 1))
    fail(ErrorCode::config_error, "rho must lie in (0, 1)");
  if (!(config.c_bt > 0 && config.c_bt < 1))
    fail(ErrorCode::config_error, "c_bt must lie in (0, 1)");
  if (!(config.t0 >= 0))
    fail(ErrorCode::config_error, "t0 must be non-negative");
  if (config.i_max < 1)
    fail(ErrorCode::config_error, "i_max must be positive");
  if (config.max_iters < 1)
    fail(ErrorCode::config_error, "max_iters must be positive");
}

}  // namespace

Vector forward_backward(const CompositeProblem& problem, const Vector& y,
                        double tau) {
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "forward_backward: tau must be positive");
  if (!y.allFinite())
    fail(ErrorCode::invalid_argument, "forward_backward: y must be finite");
  Vector grad = problem.f_grad(y);
  if (!grad.allFinite())
    fail(ErrorCode::numerical_failure,
         "forward_backward: gradient of f is not finite");
  Vector x_hat = problem.g_prox(y - tau * grad, tau);
  if (!x_hat.allFinite())
    fail(ErrorCode::numerical_failure,
         "forward_backward: prox output is not finite");
  return x_hat;
}

double effective_step(double tau, double mu_f) {
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "effective_step: tau must be positive");
  if (!(mu_f >= 0))
    fail(ErrorCode::invalid_argument,
         "effective_step: mu_f must be non-negative");
  if (tau * mu_f >= 1.0)
    fail(ErrorCode::domain_error, "effective_step: tau * mu_f must be below 1");
  return tau / (1.0 - tau * mu_f);
}

double inverse_condition(double tau, double mu, double mu_g) {
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument,
         "inverse_condition: tau must be positive");
  if (!(mu >= mu_g && mu_g >= 0))
    fail(ErrorCode::invalid_argument,
         "inverse_condition: need mu >= mu_g >= 0");
  return tau * mu / (1.0 + tau * mu_g);
}

double update_t(double t_prev, double q_next, double step_ratio) {
  if (!(t_prev >= 0))
    fail(ErrorCode::invalid_argument, "update_t: t_prev must be non-negative");
  if (!(q_next >= 0 && q_next < 1))
    fail(ErrorCode::invalid_argument, "update_t: q_next must lie in [0, 1)");
  if (!(step_ratio > 0))
    fail(ErrorCode::invalid_argument, "update_t: step_ratio must be positive");
  // Normalized quadratic t^2 + (a - 1) t - b = 0 with a = q b.
  const double b = step_ratio * t_prev * t_prev / (1.0 - q_next);
  const double a = q_next * b;
  const double disc = (1.0 - a) * (1.0 - a) + 4.0 * b;
  if (disc < 0)
    fail(ErrorCode::numerical_failure, "update_t: negative discriminant");
  return 0.5 * (1.0 - a + std::sqrt(disc));
}

double omega_factor(double q, double t) {
  if (!(q >= 0 && q < 1))
    fail(ErrorCode::invalid_argument, "omega_factor: q must lie in [0, 1)");
  if (!(t >= 0))
    fail(ErrorCode::invalid_argument, "omega_factor: t must be non-negative");
  const double omega = (1.0 - q * t) / (1.0 - q);
  if (!(omega > 0.0 && omega <= 1.0 + 1e-12))
    fail(ErrorCode::invariant_violation,
         "omega_factor: value left (0, 1]; inertial state is inconsistent");
  return omega;
}

double beta_factor(double omega, double t_prev, double t_next) {
  if (!(t_next > 0))
    fail(ErrorCode::invalid_argument, "beta_factor: t_next must be positive");
  return omega * (t_prev - 1.0) / t_next;
}

double bregman_f(const CompositeProblem& problem, const Vector& x_hat,
                 const Vector& x_bar) {
  double d;
  if (problem.f_bregman) {
    d = problem.f_bregman(x_hat, x_bar);
  } else {
    d = problem.f_value(x_hat) - problem.f_value(x_bar) -
        problem.f_grad(x_bar).dot(x_hat - x_bar);
  }
  if (d < -1e-12)
    fail(ErrorCode::invariant_violation,
         "bregman_f: negative value; f_value and f_grad are inconsistent");
  return d;
}

bool check_cb(const CompositeProblem& problem, const Vector& x_hat,
              const Vector& x_bar, double tau) {
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "check_cb: tau must be positive");
  const double rhs = (x_hat - x_bar).squaredNorm() / (2.0 * tau);
  return bregman_f(problem, x_hat, x_bar) <= rhs + 1e-12;
}

bool check_cb2(const CompositeProblem& problem, const Vector& x_hat,
               const Vector& x_bar, double tau, double c_bt) {
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "check_cb2: tau must be positive");
  if (!(c_bt > 0 && c_bt < 1))
    fail(ErrorCode::invalid_argument, "check_cb2: c_bt must lie in (0, 1)");
  const double norm_sq = (x_hat - x_bar).squaredNorm();
  if (norm_sq == 0.0) return false;  // zero displacement: growth allowed
  return 2.0 * bregman_f(problem, x_hat, x_bar) / norm_sq > c_bt / tau;
}

std::pair<Vector, double> monotone_select(const CompositeProblem& problem,
                                          const Vector& candidate,
                                          const Vector& x_curr,
                                          double f_curr) {
  const double f_cand = problem.objective(candidate);
  if (f_cand <= f_curr) return {candidate, f_cand};  // ties take the candidate
  return {x_curr, f_curr};
}

Vector monotone_extrapolate(const Vector& x_curr, const Vector& x_prev,
                            const Vector& candidate, double beta,
                            double t_prev) {
  if (beta == 0.0) return x_curr;
  const bool candidate_alive = !(candidate.array() == x_curr.array()).all();
  if (!candidate_alive) return x_curr + beta * (x_curr - x_prev);
  if (t_prev == 1.0)
    fail(ErrorCode::domain_error,
         "monotone_extrapolate: t_prev = 1 with an active candidate term");
  return x_curr + beta * ((x_curr - x_prev) +
                          (t_prev / (t_prev - 1.0)) * (candidate - x_curr));
}

double rate_certificate_fixed(int k, double q, double t0, double tau,
                              double mu_g, double gap0, double dist0_sq) {
  if (k < 1)
    fail(ErrorCode::invalid_argument, "rate_certificate_fixed: k must be >= 1");
  if (!(q >= 0 && q < 1))
    fail(ErrorCode::invalid_argument,
         "rate_certificate_fixed: q must lie in [0, 1)");
  if (!(t0 >= 0) || !(tau > 0) || !(mu_g >= 0) || !(dist0_sq >= 0) ||
      !(gap0 >= 0))
    fail(ErrorCode::invalid_argument,
         "rate_certificate_fixed: invalid parameters");
  const double sq = std::sqrt(q);
  const double shrink = std::pow(1.0 - sq, k);
  double r = std::min(4.0 / (double(k + 1) * double(k + 1)),
                      (1.0 + sq) * shrink);
  if (t0 > 0) r = std::min(r, shrink / (t0 * t0));
  double bracket = 0.5 * (1.0 + tau * mu_g) * dist0_sq;
  if (t0 > 0) bracket += t0 * t0 * gap0;
  return r * bracket;
}

double rate_certificate_backtracking(int k, double q_w, double t0, double tau0,
                                     double mu_f, double rho, double l_f,
                                     double gap0, double dist0_sq,
                                     bool literal_l_bt) {
  if (k < 1)
    fail(ErrorCode::invalid_argument,
         "rate_certificate_backtracking: k must be >= 1");
  if (!(q_w >= 0 && q_w < 1))
    fail(ErrorCode::invalid_argument,
         "rate_certificate_backtracking: q_w must lie in [0, 1)");
  if (!(t0 >= 0) || !(tau0 > 0) || !(mu_f >= 0) || !(rho > 0 && rho < 1) ||
      !(l_f > 0) || !(dist0_sq >= 0) || !(gap0 >= 0))
    fail(ErrorCode::invalid_argument,
         "rate_certificate_backtracking: invalid parameters");
  if (mu_f * tau0 >= 1.0)
    fail(ErrorCode::domain_error,
         "rate_certificate_backtracking: tau0 * mu_f must be below 1");
  const double l_bt = literal_l_bt ? rho * l_f : l_f / rho;
  const double sq = std::sqrt(q_w);
  double r = std::min(4.0 / (double(k + 1) * double(k + 1)),
                      std::pow(1.0 - sq, k - 1));
  if (t0 > 0) r = std::min(r, std::pow(1.0 - sq, k) / (t0 * t0));
  double bracket = 0.5 * dist0_sq;
  if (t0 > 0) bracket += tau0 * t0 * t0 / (1.0 - mu_f * tau0) * gap0;
  return r * (l_bt - mu_f) * bracket;
}

double worst_case_q(double l_f, double rho, double l0, double mu,
                    double mu_g) {
  if (!(l_f > 0) || !(rho > 0 && rho < 1) || !(l0 > 0))
    fail(ErrorCode::invalid_argument, "worst_case_q: invalid parameters");
  if (!(mu >= mu_g && mu_g >= 0))
    fail(ErrorCode::invalid_argument, "worst_case_q: need mu >= mu_g >= 0");
  const double l_w = std::max(l_f / rho, rho * l0);
  return mu / (l_w + mu_g);
}

bool verify_descent_inequality(const CompositeProblem& problem, const Vector& x,
                               const Vector& x_bar, double tau) {
  Vector x_hat = forward_backward(problem, x_bar, tau);
  const double f_x = problem.objective(x);
  const double lhs =
      problem.objective(x_hat) +
      (1.0 + tau * problem.mu_g) * (x - x_hat).squaredNorm() / (2.0 * tau);
  const double rhs =
      f_x + (1.0 - tau * problem.mu_f) * (x - x_bar).squaredNorm() /
                (2.0 * tau) +
      1e-10 * (1.0 + std::abs(f_x));
  return lhs <= rhs;
}

namespace {

// Step proposal with the inertial quantities tied to it.
struct StepTrial {
  double tau = 0.0;
  double tau_eff = 0.0;
  double q = 0.0;
  double t_next = 1.0;
  double omega = 1.0;
  double beta = 0.0;
  Vector y;
  Vector x_hat;
};

Trace run_loop(const CompositeProblem& problem, const SolverConfig& config,
               const Vector& x0, const Reference* ref) {
  validate_problem(problem);
  validate_config(config);

  const bool fixed_mode = config.mode == StepMode::fixed;
  const double mu_f = config.force_mu_zero ? 0.0 : problem.mu_f;
  const double mu_g = config.force_mu_zero ? 0.0 : problem.mu_g;
  const double mu = mu_f + mu_g;

  if (fixed_mode && !problem.lipschitz_f)
    fail(ErrorCode::config_error,
         "fixed-step mode needs the problem's gradient Lipschitz constant; "
         "use a backtracking mode when it is unknown");
  if (x0.size() != problem.dim)
    fail(ErrorCode::invalid_argument,
         "x0 dimension does not match the problem");
  if (!x0.allFinite())
    fail(ErrorCode::invalid_argument, "x0 must be finite");

  const double tau_eff0 = effective_step(config.tau0, mu_f);
  const double q0 = inverse_condition(config.tau0, mu, mu_g);
  if (std::sqrt(q0) * config.t0 > 1.0 + 1e-12)
    fail(ErrorCode::config_error,
         "initial inertia violates sqrt(q0) * t0 <= 1");

  const bool have_ref = ref != nullptr;
  const bool have_l = problem.lipschitz_f.has_value();
  const double l_f = have_l ? *problem.lipschitz_f : kNaN;
  double f_star = kNaN;
  double dist0_sq = kNaN;
  double cert_q = kNaN;  // q for fixed mode, worst-case q for backtracking
  if (have_ref) {
    if (ref->x_star.size() != problem.dim)
      fail(ErrorCode::invalid_argument, "reference point dimension mismatch");
    if (!ref->x_star.allFinite() || !std::isfinite(ref->f_star))
      fail(ErrorCode::invalid_argument, "reference must be finite");
    f_star = ref->f_star;
    dist0_sq = (x0 - ref->x_star).squaredNorm();
    if (fixed_mode) {
      cert_q = q0;
    } else if (have_l) {
      if (config.mode == StepMode::full_backtracking) {
        cert_q = worst_case_q(l_f, config.rho, 1.0 / config.tau0, mu, mu_g);
      } else {
        // The classic mode never raises the step, so 1/tau can stay at 1/tau0
        // forever; the growth-aware worst case would be too optimistic here.
        const double l_w = std::max(l_f / config.rho, 1.0 / config.tau0);
        cert_q = mu / (l_w + mu_g);
      }
    }
  }

  IterateState s;
  s.x_curr = x0;
  s.x_prev = x0;
  s.candidate = x0;
  s.t = config.t0;
  s.tau = config.tau0;
  s.tau_eff = tau_eff0;
  s.q = q0;
  s.omega = 1.0;
  s.beta = 0.0;

  double f_curr = problem.objective(x0);  // +inf is fine for infeasible starts
  if (std::isnan(f_curr))
    fail(ErrorCode::numerical_failure, "objective is NaN at the start point");
  // The certificate bracket uses the starting gap; clamp round-off negatives
  // so the asserted bound only ever gets tighter.
  const double gap0_cert = have_ref ? std::max(0.0, f_curr - f_star) : kNaN;

  auto certificate_at = [&](int k) -> double {
    if (!have_ref) return kNaN;
    if (k == 0) return kInf;  // the rate bounds start at the first iterate
    if (fixed_mode)
      return rate_certificate_fixed(k, cert_q, config.t0, config.tau0, mu_g,
                                    gap0_cert, dist0_sq);
    if (!have_l) return kNaN;
    return rate_certificate_backtracking(k, cert_q, config.t0, config.tau0,
                                         mu_f, config.rho, l_f, gap0_cert,
                                         dist0_sq);
  };

  Trace trace;
  trace.records.reserve(static_cast<std::size_t>(config.max_iters) + 1);
  auto push_record = [&](int k, double objective, double tau, double t,
                         double omega, double beta, int n_backtracks) {
    TraceRecord r;
    r.k = k;
    r.objective = objective;
    r.gap = have_ref ? objective - f_star : kNaN;
    r.lipschitz_estimate = 1.0 / tau;
    r.tau = tau;
    r.t = t;
    r.omega = omega;
    r.beta = beta;
    r.n_backtracks = n_backtracks;
    r.certificate_bound = certificate_at(k);
    trace.records.push_back(std::move(r));
  };
  push_record(0, f_curr, s.tau, s.t, 1.0, 0.0, 0);

  for (int k = 0; k < config.max_iters; ++k) {
    // Extrapolated point for a given weight, from the current state.
    auto extrapolate = [&](double beta) -> Vector {
      if (config.monotone)
        return monotone_extrapolate(s.x_curr, s.x_prev, s.candidate, beta,
                                    s.t);
      if (beta == 0.0) return s.x_curr;
      return s.x_curr + beta * (s.x_curr - s.x_prev);
    };

    // Inertial quantities for a step proposal. The constant-step rule and
    // the varying-step rule solve different quadratics for t; both record
    // the decay factor their own analysis uses.
    auto plan_step = [&](double tau_next) -> StepTrial {
      StepTrial tr;
      tr.tau = tau_next;
      tr.tau_eff = effective_step(tau_next, mu_f);
      tr.q = inverse_condition(tau_next, mu, mu_g);
      if (fixed_mode) {
        const double c = 1.0 - tr.q * s.t * s.t;
        tr.t_next = 0.5 * (c + std::sqrt(c * c + 4.0 * s.t * s.t));
        tr.omega = 1.0 - tr.q * tr.t_next;
      } else {
        tr.t_next = update_t(s.t, tr.q, s.tau_eff / tr.tau_eff);
        tr.omega = omega_factor(tr.q, tr.t_next);
      }
      tr.beta =
          beta_factor(omega_factor(tr.q, tr.t_next), s.t, tr.t_next);
      return tr;
    };

    StepTrial acc;
    double beta_used = 0.0;  // weight that actually built y^k
    int reductions = 0;

    if (fixed_mode) {
      acc = plan_step(s.tau);
      beta_used = acc.beta;
      acc.y = extrapolate(acc.beta);
      acc.x_hat = forward_backward(problem, acc.y, acc.tau);
      if (config.check_invariants &&
          !check_cb(problem, acc.x_hat, acc.y, acc.tau))
        fail(ErrorCode::invariant_violation,
             "constant-step acceptance test failed at iteration " +
                 std::to_string(k + 1) + "; the step exceeds 1/L_f");
    } else if (config.recompute_y_on_retry) {
      // Every proposal rebuilds the full tuple (t, omega, beta, y, x_hat) so
      // the accepted step is self-consistent.
      auto attempt = [&](double tau_next) -> StepTrial {
        StepTrial tr = plan_step(tau_next);
        tr.y = extrapolate(tr.beta);
        tr.x_hat = forward_backward(problem, tr.y, tau_next);
        return tr;
      };
      StepTrial cur = attempt(s.tau);
      bool done = false;
      if (config.mode == StepMode::full_backtracking &&
          !check_cb2(problem, cur.x_hat, cur.y, s.tau, config.c_bt)) {
        StepTrial grown = attempt(s.tau / config.rho);
        if (check_cb(problem, grown.x_hat, grown.y, grown.tau)) {
          acc = std::move(grown);
          done = true;
        } else {
          reductions = 1;  // grown step rejected: fall back to the old tau
        }
      }
      if (!done) {
        while (!check_cb(problem, cur.x_hat, cur.y, cur.tau)) {
          ++reductions;
          if (reductions > config.i_max)
            fail(ErrorCode::step_failure,
                 "step reductions exhausted at iteration " +
                     std::to_string(k + 1) +
                     "; last tau = " + std::to_string(cur.tau * config.rho));
          cur = attempt(cur.tau * config.rho);
        }
        acc = std::move(cur);
      }
      beta_used = acc.beta;
    } else {
      // Literal variant: the extrapolation of this iteration is frozen with
      // the carried-over weight; retries only change the proximal step.
      Vector y = extrapolate(s.beta);
      beta_used = s.beta;
      double tau_try = s.tau;
      Vector x_hat = forward_backward(problem, y, tau_try);
      bool done = false;
      if (config.mode == StepMode::full_backtracking &&
          !check_cb2(problem, x_hat, y, s.tau, config.c_bt)) {
        const double tau_grown = s.tau / config.rho;
        Vector x_grown = forward_backward(problem, y, tau_grown);
        if (check_cb(problem, x_grown, y, tau_grown)) {
          tau_try = tau_grown;
          x_hat = std::move(x_grown);
          done = true;
        } else {
          reductions = 1;
        }
      }
      if (!done) {
        while (!check_cb(problem, x_hat, y, tau_try)) {
          ++reductions;
          if (reductions > config.i_max)
            fail(ErrorCode::step_failure,
                 "step reductions exhausted at iteration " +
                     std::to_string(k + 1) +
                     "; last tau = " + std::to_string(tau_try * config.rho));
          tau_try *= config.rho;
          x_hat = forward_backward(problem, y, tau_try);
        }
      }
      acc = plan_step(tau_try);  // bookkeeping for the step that was accepted
      acc.y = std::move(y);
      acc.x_hat = std::move(x_hat);
    }

    if (config.check_invariants) {
      const std::string where = " at iteration " + std::to_string(k + 1);
      if (!(acc.t_next >= 1.0 - 1e-12))
        fail(ErrorCode::invariant_violation, "inertial t fell below 1" + where);
      if (!(acc.omega > 0.0 && acc.omega <= 1.0 + 1e-12))
        fail(ErrorCode::invariant_violation, "omega left (0, 1]" + where);
      // Only the constant-step rule keeps t at or below 1/sqrt(q) (that value
      // is its fixed point, approached from below).  The adaptive rule's
      // t-sequence settles strictly above 1/sqrt(q); it guarantees only
      // q * t < 1, which the omega check above already enforces.
      if (fixed_mode && !(std::sqrt(acc.q) * acc.t_next <= 1.0 + 1e-12))
        fail(ErrorCode::invariant_violation,
             "sqrt(q) * t exceeded 1" + where);
      const double scale = std::max(1.0, s.tau_eff * s.t * s.t);
      const double residual = acc.tau_eff * acc.t_next * (acc.t_next - 1.0) -
                              acc.omega * s.tau_eff * s.t * s.t;
      if (!(std::abs(residual) < 1e-10 * scale))
        fail(ErrorCode::invariant_violation,
             "inertial update residual too large" + where);
      if (!fixed_mode && !check_cb(problem, acc.x_hat, acc.y, acc.tau))
        fail(ErrorCode::invariant_violation,
             "accepted step fails the acceptance test" + where);
    }

    const double f_cand = problem.objective(acc.x_hat);
    if (!std::isfinite(f_cand))
      fail(ErrorCode::numerical_failure,
           "objective is not finite at iteration " + std::to_string(k + 1));

    // Advance; in monotone mode an ascent candidate is rejected and only
    // remembered for the next extrapolation (ties accept the candidate).
    const bool advance = !config.monotone || f_cand <= f_curr;
    s.x_prev = s.x_curr;
    if (advance) {
      s.x_curr = acc.x_hat;
      f_curr = f_cand;
    }
    s.candidate = std::move(acc.x_hat);
    s.t = acc.t_next;
    s.tau = acc.tau;
    s.tau_eff = acc.tau_eff;
    s.q = acc.q;
    s.omega = acc.omega;
    s.beta = acc.beta;

    push_record(k + 1, f_curr, acc.tau, acc.t_next, acc.omega, beta_used,
                reductions);
  }

  trace.solution = s.x_curr;
  return trace;
}

}  // namespace

Trace gfista_fixed(const CompositeProblem& problem, const SolverConfig& config,
                   const Vector& x0, const Reference* ref) {
  SolverConfig c = config;
  c.mode = StepMode::fixed;
  return run_loop(problem, c, x0, ref);
}

Trace gfista_backtracking(const CompositeProblem& problem,
                          const SolverConfig& config, const Vector& x0,
                          const Reference* ref) {
  if (config.mode == StepMode::fixed)
    fail(ErrorCode::config_error,
         "gfista_backtracking requires a backtracking mode");
  return run_loop(problem, config, x0, ref);
}

Trace solve(const CompositeProblem& problem, const SolverConfig& config,
            const Vector& x0, const Reference* ref) {
  if (config.mode == StepMode::fixed)
    return gfista_fixed(problem, config, x0, ref);
  return gfista_backtracking(problem, config, x0, ref);
}

}  // namespace gfista
