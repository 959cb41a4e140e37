#include "experiment.hpp"

#include "csv.hpp"
#include "pgm.hpp"

#include <gfista/image_ops.hpp>
#include <gfista/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <utility>

namespace gfista_tools {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

gfista::ErrorCode code_from(gf_status status) {
  switch (status) {
    case GF_ERR_INVALID_ARGUMENT:
      return gfista::ErrorCode::invalid_argument;
    case GF_ERR_DOMAIN:
      return gfista::ErrorCode::domain_error;
    case GF_ERR_CONFIG:
      return gfista::ErrorCode::config_error;
    case GF_ERR_NUMERICAL:
      return gfista::ErrorCode::numerical_failure;
    case GF_ERR_STEP_FAILURE:
      return gfista::ErrorCode::step_failure;
    case GF_ERR_INVARIANT:
      return gfista::ErrorCode::invariant_violation;
    case GF_ERR_IO:
      return gfista::ErrorCode::io_error;
    default:
      return gfista::ErrorCode::numerical_failure;
  }
}

void check(gf_status status, const std::string& context) {
  if (status == GF_OK) return;
  throw gfista::Error(code_from(status),
                      context + ": " + gf_last_error_message());
}

struct ProblemDeleter {
  void operator()(gf_problem* p) const { gf_problem_free(p); }
};
using ProblemHandle = std::unique_ptr<gf_problem, ProblemDeleter>;

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// The experiment's input images: the ground truth (when synthesized or
// loaded) and the solver's noisy input, both on the unit intensity scale.
struct ImageInputs {
  gfista::ScalarField clean;
  gfista::ScalarField noisy_unit;  // noisy data scaled to ~[0, 1] for export
};

gfista::ScalarField clean_image(const ExperimentConfig& config) {
  if (!config.image_path.empty()) return gfista::load_pgm(config.image_path);
  if (config.size < 1)
    throw gfista::Error(gfista::ErrorCode::invalid_argument,
                        "experiment: size must be >= 1");
  gfista::ScalarField u(config.size, config.size);
  check(gf_make_phantom(int32_t(config.size), int32_t(config.size),
                        u.data.data()),
        "make_phantom");
  return u;
}

// Build the configured problem; lambda/eps come back with NaN defaults
// resolved. images (when non-null) receives the ground truth and the noisy
// input on the unit intensity scale for export.
ProblemHandle assemble_problem(const ExperimentConfig& config, double& lambda,
                               double& eps, ImageInputs* images) {
  lambda = config.lambda;
  eps = config.eps;
  ProblemHandle problem;
  if (config.problem == "huber-rof") {
    if (std::isnan(lambda)) lambda = 0.1;
    if (std::isnan(eps)) eps = 0.01;
    gfista::ScalarField clean = clean_image(config);
    gfista::ScalarField noisy(clean.rows, clean.cols);
    check(gf_add_gaussian_noise(clean.data.data(), int32_t(clean.rows),
                                int32_t(clean.cols), config.variance,
                                config.seed, noisy.data.data()),
          "add_gaussian_noise");
    gf_problem* raw = nullptr;
    check(gf_problem_huber_rof(noisy.data.data(), int32_t(noisy.rows),
                               int32_t(noisy.cols), lambda, eps, &raw),
          "build huber-rof");
    problem.reset(raw);
    if (images) {
      images->clean = std::move(clean);
      images->noisy_unit = std::move(noisy);
    }
  } else if (config.problem == "poisson-tv") {
    if (std::isnan(lambda)) lambda = 0.1;
    if (std::isnan(eps)) eps = 0.15;
    gfista::ScalarField clean = clean_image(config);
    gfista::ScalarField counts(clean.rows, clean.cols);
    check(gf_add_poisson_noise(clean.data.data(), int32_t(clean.rows),
                               int32_t(clean.cols), config.peak, config.seed,
                               counts.data.data()),
          "add_poisson_noise");
    // The data term needs strictly positive counts; sampled zeros are lifted
    // to a negligible count so dark pixels stay usable.
    for (Eigen::Index i = 0; i < counts.data.size(); ++i)
      if (counts.data[i] == 0.0) counts.data[i] = 1e-6;
    gf_problem* raw = nullptr;
    check(gf_problem_poisson_tv(counts.data.data(), nullptr,
                                int32_t(counts.rows), int32_t(counts.cols),
                                lambda, eps, config.inner_iters, &raw),
          "build poisson-tv");
    problem.reset(raw);
    if (images) {
      images->clean = std::move(clean);
      images->noisy_unit = counts;
      images->noisy_unit.data /= config.peak;
    }
  } else if (config.problem == "quadratic-toy") {
    gf_problem* raw = nullptr;
    check(gf_problem_quadratic_toy(config.toy_dim, config.toy_l_max,
                                   config.toy_mu_g, config.seed, &raw),
          "build quadratic-toy");
    problem.reset(raw);
  } else {
    throw gfista::Error(gfista::ErrorCode::invalid_argument,
                        "unknown problem '" + config.problem +
                            "' (expected huber-rof, poisson-tv or "
                            "quadratic-toy)");
  }
  return problem;
}

}  // namespace

std::shared_ptr<gf_problem> build_problem(const ExperimentConfig& config) {
  double lambda = kNaN;
  double eps = kNaN;
  return std::shared_ptr<gf_problem>(
      assemble_problem(config, lambda, eps, nullptr));
}

gf_config variant_config(const ExperimentConfig& config,
                         const std::string& name, double lipschitz_f) {
  gf_config c;
  gf_config_defaults(&c);
  c.rho = config.rho;
  c.c_bt = config.c_bt;
  c.t0 = config.t0;
  c.i_max = config.i_max;
  c.max_iters = config.max_iters;
  c.monotone = config.monotone ? 1 : 0;
  c.recompute_y_on_retry = config.recompute_y ? 1 : 0;
  c.check_invariants = config.verify ? 1 : 0;
  c.force_mu_zero = 0;

  const bool fixed = name == "fista" || name == "gfista-fixed";
  if (fixed) {
    if (!std::isfinite(lipschitz_f) || lipschitz_f <= 0)
      throw gfista::Error(gfista::ErrorCode::config_error,
                          "variant '" + name +
                              "' needs the problem's Lipschitz constant");
    c.mode = GF_STEP_FIXED;
    c.tau0 = 1.0 / lipschitz_f;
    if (name == "fista") c.force_mu_zero = 1;
    return c;
  }
  if (name == "classic-bt" || name == "full-bt") {
    if (!(config.l0 > 0))
      throw gfista::Error(gfista::ErrorCode::invalid_argument,
                          "experiment: l0 must be positive");
    c.mode = name == "classic-bt" ? GF_STEP_CLASSIC_BACKTRACKING
                                  : GF_STEP_FULL_BACKTRACKING;
    c.tau0 = 1.0 / config.l0;
    return c;
  }
  throw gfista::Error(gfista::ErrorCode::invalid_argument,
                      "unknown variant '" + name +
                          "' (expected fista, gfista-fixed, classic-bt or "
                          "full-bt)");
}

std::string verify_trace(const std::vector<gf_trace_record>& records,
                         double mu_f, double mu_g, const gf_config& config,
                         bool assert_certificates) {
  if (config.force_mu_zero) {
    mu_f = 0.0;
    mu_g = 0.0;
  }
  const double mu = mu_f + mu_g;
  auto tau_eff = [mu_f](double tau) { return tau / (1.0 - tau * mu_f); };
  std::ostringstream msg;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const gf_trace_record& r = records[k];
    const gf_trace_record& prev = records[k - 1];
    if (!(r.t >= 1.0 - 1e-12)) {
      msg << "iteration " << r.k << ": t = " << format_g(r.t) << " < 1";
      return msg.str();
    }
    if (!(r.omega > 0.0 && r.omega <= 1.0 + 1e-12)) {
      msg << "iteration " << r.k << ": omega = " << format_g(r.omega)
          << " outside (0, 1]";
      return msg.str();
    }
    const double q = r.tau * mu / (1.0 + r.tau * mu_g);
    if (!(q * r.t < 1.0)) {
      msg << "iteration " << r.k << ": q t = " << format_g(q * r.t)
          << " reached 1";
      return msg.str();
    }
    // 1/sqrt(q) bounds t only under the constant-step rule (it is that
    // recurrence's fixed point); the adaptive rule settles above it.
    if (config.mode == GF_STEP_FIXED &&
        !(std::sqrt(q) * r.t <= 1.0 + 1e-12)) {
      msg << "iteration " << r.k << ": sqrt(q) t = "
          << format_g(std::sqrt(q) * r.t) << " > 1";
      return msg.str();
    }
    const double lhs = tau_eff(r.tau) * r.t * (r.t - 1.0);
    const double rhs = r.omega * tau_eff(prev.tau) * prev.t * prev.t;
    const double residual_scale =
        std::max(1.0, tau_eff(prev.tau) * prev.t * prev.t);
    if (!(std::abs(lhs - rhs) < 1e-10 * residual_scale)) {
      msg << "iteration " << r.k << ": inertial update residual "
          << format_g(lhs - rhs) << " exceeds tolerance";
      return msg.str();
    }
    if (config.monotone && r.objective > prev.objective) {
      msg << "iteration " << r.k << ": objective rose from "
          << format_g(prev.objective) << " to " << format_g(r.objective)
          << " in monotone mode";
      return msg.str();
    }
    // The measured gap is a difference of two objective values, so it is
    // meaningful only down to a few ulps of their magnitude; once the bound
    // decays below that floor (exact convergence), the comparison would
    // flag pure rounding noise.
    const double gap_noise =
        16.0 * std::numeric_limits<double>::epsilon() *
        std::max(1.0, std::abs(r.objective));
    if (assert_certificates && !std::isnan(r.gap) &&
        !std::isnan(r.certificate_bound) &&
        r.gap > r.certificate_bound + gap_noise) {
      msg << "iteration " << r.k << ": gap " << format_g(r.gap)
          << " exceeds certificate bound " << format_g(r.certificate_bound);
      return msg.str();
    }
  }
  return std::string();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  if (config.variants.empty())
    throw gfista::Error(gfista::ErrorCode::invalid_argument,
                        "experiment: need at least one variant");
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        "experiment: cannot create output directory " +
                            config.out_dir);

  // ---- Problem assembly -----------------------------------------------------
  double lambda = kNaN;
  double eps = kNaN;
  ImageInputs images;
  const bool image_problem =
      config.problem == "huber-rof" || config.problem == "poisson-tv";
  ProblemHandle problem = assemble_problem(config, lambda, eps, &images);

  const int64_t dim = gf_problem_dim(problem.get());
  const double mu_f = gf_problem_mu_f(problem.get());
  const double mu_g = gf_problem_mu_g(problem.get());
  double l_f = kNaN;
  (void)gf_problem_lipschitz(problem.get(), &l_f);

  if (image_problem) {
    gfista::save_pgm(images.clean, (fs::path(config.out_dir) / "clean.pgm").string(),
                     255);
    gfista::save_pgm(images.noisy_unit,
                     (fs::path(config.out_dir) / "noisy.pgm").string(), 255);
  }

  // ---- Reference minimizer ----------------------------------------------------
  if (config.ref_iters < 1)
    throw gfista::Error(gfista::ErrorCode::invalid_argument,
                        "experiment: ref-iters must be >= 1");
  std::vector<double> x_star(static_cast<std::size_t>(dim), 0.0);
  double f_star = kNaN;
  check(gf_compute_reference(problem.get(), nullptr, config.ref_iters,
                             config.out_dir.c_str(), x_star.data(), &f_star),
        "compute reference");

  // ---- Variants -----------------------------------------------------------
  ExperimentResult result;
  for (const std::string& name : config.variants) {
    const gf_config vc = variant_config(config, name, l_f);
    VariantResult vr;
    vr.name = name;
    vr.records.resize(std::size_t(vc.max_iters) + 1);
    vr.solution.resize(std::size_t(dim));
    int32_t n_records = 0;
    check(gf_solve(problem.get(), &vc, nullptr, x_star.data(), f_star,
                   vr.records.data(), int32_t(vr.records.size()), &n_records,
                   vr.solution.data()),
          "solve variant " + name);
    vr.records.resize(std::size_t(n_records));

    vr.csv_path = (fs::path(config.out_dir) / (name + ".csv")).string();
    write_trace_csv(vr.csv_path, vr.records.data(), int32_t(vr.records.size()));

    if (config.problem == "huber-rof") {
      gfista::ScalarField denoised(images.clean.rows, images.clean.cols);
      check(gf_huber_rof_primal_from_dual(problem.get(), vr.solution.data(),
                                          denoised.data.data()),
            "primal recovery for " + name);
      gfista::save_pgm(denoised,
                       (fs::path(config.out_dir) / ("denoised-" + name + ".pgm"))
                           .string(),
                       255);
    } else if (config.problem == "poisson-tv") {
      gfista::ScalarField denoised(images.clean.rows, images.clean.cols);
      for (Eigen::Index i = 0; i < denoised.data.size(); ++i)
        denoised.data[i] = vr.solution[std::size_t(i)] / config.peak;
      gfista::save_pgm(denoised,
                       (fs::path(config.out_dir) / ("denoised-" + name + ".pgm"))
                           .string(),
                       255);
    }

    if (config.verify) {
      // The a-priori rate bounds are asserted where their hypotheses hold:
      // constant steps always; backtracking only when the accepted tuple is
      // recomputed per step (the lagged variant exists for comparison runs
      // and carries no per-iterate guarantee), and for the growing mode only
      // when the growth threshold keeps every visited step above the
      // worst-case bound (c_bt >= rho).
      bool assert_certs = true;
      if (vc.mode != GF_STEP_FIXED) {
        assert_certs = config.recompute_y;
        if (vc.mode == GF_STEP_FULL_BACKTRACKING && config.c_bt < config.rho)
          assert_certs = false;
      }
      vr.failure = verify_trace(vr.records, mu_f, mu_g, vc, assert_certs);
      vr.verified = vr.failure.empty();
      if (!vr.verified) result.ok = false;
    }
    result.variants.push_back(std::move(vr));
  }

  // ---- Summary ----------------------------------------------------------------
  result.summary_path = (fs::path(config.out_dir) / "summary.txt").string();
  std::ofstream summary(result.summary_path, std::ios::trunc);
  if (!summary)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        result.summary_path + ": cannot open for writing");
  summary << "problem: " << config.problem << "\n";
  summary << "dim: " << dim << "\n";
  if (image_problem) {
    summary << "grid: " << images.clean.rows << "x" << images.clean.cols
            << "\n";
    summary << "lambda: " << format_g(lambda) << "\n";
    summary << "eps: " << format_g(eps) << "\n";
  }
  summary << "mu_f: " << format_g(mu_f) << "\n";
  summary << "mu_g: " << format_g(mu_g) << "\n";
  if (std::isfinite(l_f)) summary << "lipschitz_f: " << format_g(l_f) << "\n";
  summary << "seed: " << config.seed << "\n";
  summary << "reference_iters: " << config.ref_iters << "\n";
  summary << "reference_objective: " << format_g(f_star) << "\n";
  for (const VariantResult& vr : result.variants) {
    const gf_trace_record& last = vr.records.back();
    long total_backtracks = 0;
    for (const gf_trace_record& r : vr.records) total_backtracks += r.n_backtracks;
    summary << "variant " << vr.name << ": objective "
            << format_g(last.objective) << ", gap " << format_g(last.gap)
            << ", backtracks " << total_backtracks << ", "
            << (config.verify ? (vr.verified ? "verified" : "FAILED") : "unchecked");
    if (!vr.failure.empty()) summary << " (" << vr.failure << ")";
    summary << "\n";
  }
  summary << "status: " << (result.ok ? "ok" : "failed") << "\n";
  if (!summary)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        result.summary_path + ": write failed");
  return result;
}

namespace {

std::string trim_ws(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// The long option name a command-line token sets, or "" for non-options.
std::string token_key(const std::string& token) {
  if (token.size() < 3 || token.compare(0, 2, "--") != 0) return {};
  const auto eq = token.find('=');
  return token.substr(2, eq == std::string::npos ? eq : eq - 2);
}

}  // namespace

std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw gfista::Error(gfista::ErrorCode::config_error,
                            "--config expects a file path");
      path = args[i + 1];
      break;
    }
    if (args[i].compare(0, std::string("--config=").size(), "--config=") ==
        0) {
      path = args[i].substr(std::string("--config=").size());
      break;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in)
    throw gfista::Error(gfista::ErrorCode::io_error,
                        path + ": cannot open config file");

  // Keys already fixed on the command line win over the file. The two
  // spellings of the verification flag count as one key.
  auto aliases = [](const std::string& key) -> std::vector<std::string> {
    if (key == "verify" || key == "no-verify") return {"verify", "no-verify"};
    return {key};
  };
  std::set<std::string> fixed;
  for (const std::string& token : args) {
    const std::string key = token_key(token);
    for (const std::string& name : aliases(key))
      if (!name.empty()) fixed.insert(name);
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string entry = trim_ws(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    const std::string key = eq == std::string::npos ? std::string()
                                                    : trim_ws(entry.substr(0, eq));
    if (key.empty())
      throw gfista::Error(gfista::ErrorCode::config_error,
                          path + ":" + std::to_string(line_no) +
                              ": expected key=value");
    std::string value = trim_ws(entry.substr(eq + 1));
    if (value.size() >= 2 &&
        ((value.front() == '"' && value.back() == '"') ||
         (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key == "config") continue;  // no nested config files
    bool shadowed = false;
    for (const std::string& name : aliases(key)) shadowed |= fixed.count(name) > 0;
    if (shadowed) continue;
    auto prior = std::find_if(pairs.begin(), pairs.end(),
                              [&](const auto& p) { return p.first == key; });
    if (prior != pairs.end())
      prior->second = value;  // last occurrence in the file wins
    else
      pairs.emplace_back(key, value);
  }

  for (const auto& [key, value] : pairs)
    args.push_back("--" + key + "=" + value);
  return args;
}

}  // namespace gfista_tools
