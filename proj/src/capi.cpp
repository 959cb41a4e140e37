#include <gfista/gfista.h>

#include <gfista/problems.hpp>
#include <gfista/solver.hpp>
#include <gfista/types.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

namespace {

thread_local std::string g_last_error;

gf_status status_from(gfista::ErrorCode code) {
  switch (code) {
    case gfista::ErrorCode::invalid_argument:
      return GF_ERR_INVALID_ARGUMENT;
    case gfista::ErrorCode::domain_error:
      return GF_ERR_DOMAIN;
    case gfista::ErrorCode::config_error:
      return GF_ERR_CONFIG;
    case gfista::ErrorCode::numerical_failure:
      return GF_ERR_NUMERICAL;
    case gfista::ErrorCode::step_failure:
      return GF_ERR_STEP_FAILURE;
    case gfista::ErrorCode::invariant_violation:
      return GF_ERR_INVARIANT;
    case gfista::ErrorCode::io_error:
      return GF_ERR_IO;
  }
  return GF_ERR_INTERNAL;
}

template <typename Fn>
gf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return GF_OK;
  } catch (const gfista::Error& e) {
    g_last_error = e.what();
    return status_from(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unrecognized failure";
    return GF_ERR_INTERNAL;
  }
}

gf_status fail_invalid(const char* msg) {
  g_last_error = msg;
  return GF_ERR_INVALID_ARGUMENT;
}

gfista::ScalarField field_from(const double* data, int32_t rows,
                               int32_t cols) {
  gfista::ScalarField u(rows, cols);
  std::memcpy(u.data.data(), data, sizeof(double) * std::size_t(rows) * cols);
  return u;
}

enum ProblemKind { kHuberRof = 0, kPoissonTv = 1, kQuadraticToy = 2 };

gf_status config_from(const gf_config* in, gfista::SolverConfig* out) {
  if (in->mode < 0 || in->mode > 2)
    return fail_invalid("gf_config.mode must be one of gf_step_mode");
  out->mode = gfista::StepMode(in->mode);
  out->tau0 = in->tau0;
  out->rho = in->rho;
  out->c_bt = in->c_bt;
  out->t0 = in->t0;
  out->i_max = in->i_max;
  out->max_iters = in->max_iters;
  out->monotone = in->monotone != 0;
  out->recompute_y_on_retry = in->recompute_y_on_retry != 0;
  out->force_mu_zero = in->force_mu_zero != 0;
  out->check_invariants = in->check_invariants != 0;
  return GF_OK;
}

}  // namespace

struct gf_problem {
  gfista::CompositeProblem problem;
  int kind = kQuadraticToy;
  gfista::HuberRofSpec huber;
  gfista::PoissonTvSpec poisson;
  gfista::QuadraticToySpec toy;
  gfista::Vector default_init;
  Eigen::Index store_rows = 0;  // grid shape of the unknown, for the cache
  Eigen::Index store_cols = 0;
};

extern "C" {

const char* gf_last_error_message(void) { return g_last_error.c_str(); }

void gf_config_defaults(gf_config* config) {
  if (!config) return;
  const gfista::SolverConfig d;
  config->mode = int(d.mode);
  config->tau0 = d.tau0;
  config->rho = d.rho;
  config->c_bt = d.c_bt;
  config->t0 = d.t0;
  config->i_max = d.i_max;
  config->max_iters = d.max_iters;
  config->monotone = d.monotone ? 1 : 0;
  config->recompute_y_on_retry = d.recompute_y_on_retry ? 1 : 0;
  config->force_mu_zero = d.force_mu_zero ? 1 : 0;
  config->check_invariants = d.check_invariants ? 1 : 0;
}

gf_status gf_problem_huber_rof(const double* noisy, int32_t rows, int32_t cols,
                               double lambda, double eps, gf_problem** out) {
  if (!noisy || !out) return fail_invalid("gf_problem_huber_rof: NULL pointer");
  if (rows < 1 || cols < 1)
    return fail_invalid("gf_problem_huber_rof: dimensions must be >= 1");
  *out = nullptr;
  return guarded([&] {
    auto p = std::make_unique<gf_problem>();
    p->kind = kHuberRof;
    p->huber.noisy = field_from(noisy, rows, cols);
    p->huber.lambda = lambda;
    p->huber.eps = eps;
    p->problem = gfista::build_huber_rof_dual(p->huber);
    p->default_init = gfista::default_init_huber_rof(p->huber);
    p->store_rows = 2 * Eigen::Index(rows);
    p->store_cols = cols;
    *out = p.release();
  });
}

gf_status gf_problem_poisson_tv(const double* noisy, const double* background,
                                int32_t rows, int32_t cols, double lambda,
                                double eps, int32_t inner_iters,
                                gf_problem** out) {
  if (!noisy || !out) return fail_invalid("gf_problem_poisson_tv: NULL pointer");
  if (rows < 1 || cols < 1)
    return fail_invalid("gf_problem_poisson_tv: dimensions must be >= 1");
  *out = nullptr;
  return guarded([&] {
    auto p = std::make_unique<gf_problem>();
    p->kind = kPoissonTv;
    p->poisson.noisy = field_from(noisy, rows, cols);
    if (background) {
      p->poisson.background = field_from(background, rows, cols);
    } else {
      p->poisson.background = gfista::ScalarField(rows, cols);
      p->poisson.background.data.setOnes();
    }
    p->poisson.lambda = lambda;
    p->poisson.eps = eps;
    p->poisson.inner_iters = inner_iters;
    p->problem = gfista::build_poisson_tv(p->poisson);
    p->default_init = gfista::default_init_poisson_tv(p->poisson);
    p->store_rows = rows;
    p->store_cols = cols;
    *out = p.release();
  });
}

gf_status gf_problem_quadratic_toy(int32_t dim, double l_max, double mu_g,
                                   uint64_t seed, gf_problem** out) {
  if (!out) return fail_invalid("gf_problem_quadratic_toy: NULL pointer");
  *out = nullptr;
  return guarded([&] {
    auto p = std::make_unique<gf_problem>();
    p->kind = kQuadraticToy;
    p->toy = gfista::make_quadratic_toy_spec(dim, l_max, mu_g, seed);
    p->problem = gfista::build_quadratic_toy(p->toy);
    p->default_init = gfista::Vector::Zero(dim);
    p->store_rows = dim;
    p->store_cols = 1;
    *out = p.release();
  });
}

void gf_problem_free(gf_problem* problem) { delete problem; }

int64_t gf_problem_dim(const gf_problem* problem) {
  return problem ? int64_t(problem->problem.dim) : 0;
}

double gf_problem_mu_f(const gf_problem* problem) {
  return problem ? problem->problem.mu_f : 0.0;
}

double gf_problem_mu_g(const gf_problem* problem) {
  return problem ? problem->problem.mu_g : 0.0;
}

gf_status gf_problem_lipschitz(const gf_problem* problem, double* out) {
  if (!problem || !out) return fail_invalid("gf_problem_lipschitz: NULL pointer");
  if (!problem->problem.lipschitz_f) {
    g_last_error = "problem does not know its gradient Lipschitz constant";
    return GF_ERR_DOMAIN;
  }
  *out = *problem->problem.lipschitz_f;
  g_last_error.clear();
  return GF_OK;
}

gf_status gf_problem_objective(const gf_problem* problem, const double* x,
                               double* out) {
  if (!problem || !x || !out)
    return fail_invalid("gf_problem_objective: NULL pointer");
  return guarded([&] {
    const Eigen::Map<const gfista::Vector> xv(x, problem->problem.dim);
    *out = problem->problem.objective(xv);
  });
}

gf_status gf_problem_default_init(const gf_problem* problem, double* x0) {
  if (!problem || !x0)
    return fail_invalid("gf_problem_default_init: NULL pointer");
  std::memcpy(x0, problem->default_init.data(),
              sizeof(double) * std::size_t(problem->default_init.size()));
  g_last_error.clear();
  return GF_OK;
}

gf_status gf_solve(const gf_problem* problem, const gf_config* config,
                   const double* x0, const double* x_ref, double f_ref,
                   gf_trace_record* trace, int32_t trace_capacity,
                   int32_t* n_records, double* x_out) {
  if (!problem || !config) return fail_invalid("gf_solve: NULL pointer");
  gfista::SolverConfig cfg;
  const gf_status cs = config_from(config, &cfg);
  if (cs != GF_OK) return cs;
  if (trace && int64_t(trace_capacity) < int64_t(cfg.max_iters) + 1)
    return fail_invalid(
        "gf_solve: trace_capacity must be at least max_iters + 1");
  return guarded([&] {
    const Eigen::Index dim = problem->problem.dim;
    gfista::Vector start =
        x0 ? gfista::Vector(Eigen::Map<const gfista::Vector>(x0, dim))
           : problem->default_init;
    gfista::Reference ref;
    const gfista::Reference* ref_ptr = nullptr;
    if (x_ref) {
      ref.x_star = Eigen::Map<const gfista::Vector>(x_ref, dim);
      ref.f_star = f_ref;
      ref_ptr = &ref;
    }
    const gfista::Trace result =
        gfista::solve(problem->problem, cfg, start, ref_ptr);
    if (trace) {
      for (std::size_t i = 0; i < result.records.size(); ++i) {
        const gfista::TraceRecord& r = result.records[i];
        gf_trace_record& o = trace[i];
        o.k = r.k;
        o.objective = r.objective;
        o.gap = r.gap;
        o.lipschitz_estimate = r.lipschitz_estimate;
        o.tau = r.tau;
        o.t = r.t;
        o.omega = r.omega;
        o.beta = r.beta;
        o.n_backtracks = r.n_backtracks;
        o.certificate_bound = r.certificate_bound;
      }
    }
    if (n_records) *n_records = int32_t(result.records.size());
    if (x_out)
      std::memcpy(x_out, result.solution.data(),
                  sizeof(double) * std::size_t(dim));
  });
}

gf_status gf_compute_reference(const gf_problem* problem, const double* x_init,
                               int32_t iters, const char* cache_dir,
                               double* x_star, double* f_star) {
  if (!problem || !x_star || !f_star)
    return fail_invalid("gf_compute_reference: NULL pointer");
  return guarded([&] {
    const Eigen::Index dim = problem->problem.dim;
    gfista::Vector start =
        x_init ? gfista::Vector(Eigen::Map<const gfista::Vector>(x_init, dim))
               : problem->default_init;
    gfista::Reference ref;
    if (cache_dir) {
      std::uint64_t key = gfista::fnv1a64("gfista-reference-v1", 19);
      auto mix = [&key](const void* p, std::size_t n) {
        key = gfista::fnv1a64(p, n, key);
      };
      const int32_t kind = problem->kind;
      mix(&kind, sizeof(kind));
      switch (problem->kind) {
        case kHuberRof: {
          const auto& s = problem->huber;
          const int64_t dims[2] = {s.noisy.rows, s.noisy.cols};
          mix(dims, sizeof(dims));
          const double params[2] = {s.lambda, s.eps};
          mix(params, sizeof(params));
          mix(s.noisy.data.data(), sizeof(double) * s.noisy.data.size());
          break;
        }
        case kPoissonTv: {
          const auto& s = problem->poisson;
          const int64_t dims[3] = {s.noisy.rows, s.noisy.cols, s.inner_iters};
          mix(dims, sizeof(dims));
          const double params[2] = {s.lambda, s.eps};
          mix(params, sizeof(params));
          mix(s.noisy.data.data(), sizeof(double) * s.noisy.data.size());
          mix(s.background.data.data(),
              sizeof(double) * s.background.data.size());
          break;
        }
        default: {
          const auto& s = problem->toy;
          const int64_t dim64 = s.dim;
          mix(&dim64, sizeof(dim64));
          const double params[2] = {s.l_max, s.mu_g};
          mix(params, sizeof(params));
          mix(&s.seed, sizeof(s.seed));
          break;
        }
      }
      mix(&iters, sizeof(iters));
      mix(start.data(), sizeof(double) * std::size_t(start.size()));
      ref = gfista::compute_reference_cached(problem->problem, start, iters,
                                             cache_dir, key,
                                             problem->store_rows,
                                             problem->store_cols);
    } else {
      ref = gfista::compute_reference(problem->problem, start, iters);
    }
    std::memcpy(x_star, ref.x_star.data(), sizeof(double) * std::size_t(dim));
    *f_star = ref.f_star;
  });
}

double gf_rate_certificate_fixed(int32_t k, double q, double t0, double tau,
                                 double mu_g, double gap0, double dist0_sq) {
  try {
    return gfista::rate_certificate_fixed(k, q, t0, tau, mu_g, gap0, dist0_sq);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double gf_rate_certificate_backtracking(int32_t k, double q_w, double t0,
                                        double tau0, double mu_f, double rho,
                                        double l_f, double gap0,
                                        double dist0_sq, int literal_l_bt) {
  try {
    return gfista::rate_certificate_backtracking(
        k, q_w, t0, tau0, mu_f, rho, l_f, gap0, dist0_sq, literal_l_bt != 0);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double gf_worst_case_q(double l_f, double rho, double l0, double mu,
                       double mu_g) {
  try {
    return gfista::worst_case_q(l_f, rho, l0, mu, mu_g);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return std::numeric_limits<double>::quiet_NaN();
  }
}

gf_status gf_make_phantom(int32_t rows, int32_t cols, double* out) {
  if (!out) return fail_invalid("gf_make_phantom: NULL pointer");
  return guarded([&] {
    const gfista::ScalarField u = gfista::make_phantom(rows, cols);
    std::memcpy(out, u.data.data(), sizeof(double) * std::size_t(u.data.size()));
  });
}

gf_status gf_add_gaussian_noise(const double* clean, int32_t rows, int32_t cols,
                                double variance, uint64_t seed, double* out) {
  if (!clean || !out) return fail_invalid("gf_add_gaussian_noise: NULL pointer");
  if (rows < 1 || cols < 1)
    return fail_invalid("gf_add_gaussian_noise: dimensions must be >= 1");
  return guarded([&] {
    const gfista::ScalarField noisy =
        gfista::add_gaussian_noise(field_from(clean, rows, cols), variance, seed);
    std::memcpy(out, noisy.data.data(),
                sizeof(double) * std::size_t(noisy.data.size()));
  });
}

gf_status gf_add_poisson_noise(const double* clean, int32_t rows, int32_t cols,
                               double peak, uint64_t seed, double* out) {
  if (!clean || !out) return fail_invalid("gf_add_poisson_noise: NULL pointer");
  if (rows < 1 || cols < 1)
    return fail_invalid("gf_add_poisson_noise: dimensions must be >= 1");
  return guarded([&] {
    const gfista::ScalarField noisy =
        gfista::add_poisson_noise(field_from(clean, rows, cols), peak, seed);
    std::memcpy(out, noisy.data.data(),
                sizeof(double) * std::size_t(noisy.data.size()));
  });
}

gf_status gf_huber_rof_primal_from_dual(const gf_problem* problem,
                                        const double* p, double* u_out) {
  if (!problem || !p || !u_out)
    return fail_invalid("gf_huber_rof_primal_from_dual: NULL pointer");
  if (problem->kind != kHuberRof)
    return fail_invalid(
        "gf_huber_rof_primal_from_dual: not a Huber-ROF problem");
  return guarded([&] {
    const Eigen::Index m = problem->huber.noisy.rows;
    const Eigen::Index n = problem->huber.noisy.cols;
    gfista::VectorField pf(m, n);
    std::memcpy(pf.data.data(), p, sizeof(double) * std::size_t(2 * m * n));
    const gfista::ScalarField u = gfista::primal_from_dual(problem->huber, pf);
    std::memcpy(u_out, u.data.data(),
                sizeof(double) * std::size_t(u.data.size()));
  });
}

}  // extern "C"
