#include "experiment.hpp"

#include <gfista/gfista.h>
#include <gfista/types.hpp>

#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace {

using gfista_tools::ExperimentConfig;

// Target for the --config option; the file is applied by expand_config_args
// before CLI11 parses, so the stored path is not consulted afterwards.
std::string g_config_path;

void add_experiment_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--config", g_config_path,
                  "Read flags from a key=value file; the command line "
                  "overrides the file");
  sub->add_option("--problem", cfg.problem,
                  "Problem family: huber-rof | poisson-tv | quadratic-toy")
      ->check(CLI::IsMember({"huber-rof", "poisson-tv", "quadratic-toy"}));
  sub->add_option("--image", cfg.image_path,
                  "Input PGM image; omit to use the synthetic phantom");
  sub->add_option("--size", cfg.size, "Phantom side length when no --image")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", cfg.out_dir, "Output directory");
  sub->add_option("--lambda", cfg.lambda,
                  "Regularization weight (default 0.1)");
  sub->add_option("--eps", cfg.eps,
                  "Smoothing weight (default 0.01 huber-rof, 0.15 "
                  "poisson-tv)");
  sub->add_option("--inner-iters", cfg.inner_iters,
                  "Nested prox iterations (poisson-tv)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--variance", cfg.variance,
                  "Gaussian noise variance (huber-rof)");
  sub->add_option("--peak", cfg.peak, "Photon count scale (poisson-tv)");
  sub->add_option("--seed", cfg.seed, "Noise generator seed");
  sub->add_option("--toy-dim", cfg.toy_dim, "quadratic-toy dimension");
  sub->add_option("--toy-l-max", cfg.toy_l_max,
                  "quadratic-toy largest curvature");
  sub->add_option("--toy-mu-g", cfg.toy_mu_g,
                  "quadratic-toy proximal quadratic weight");
  sub->add_option("--rho", cfg.rho, "Backtracking step reduction factor");
  sub->add_option("--c-bt", cfg.c_bt,
                  "Curvature threshold for step growth (full-bt)");
  sub->add_option("--t0", cfg.t0, "Initial inertial parameter");
  sub->add_option("--l0", cfg.l0,
                  "Initial curvature guess; backtracking starts at step "
                  "1/l0");
  sub->add_option("--i-max", cfg.i_max,
                  "Cap on step reductions per iteration");
  sub->add_option("--iters", cfg.max_iters, "Outer iterations per variant");
  sub->add_flag("--monotone", cfg.monotone,
                "Keep the objective nonincreasing");
  sub->add_option("--recompute-y", cfg.recompute_y,
                  "Refresh the extrapolated point on step retries "
                  "(true/false)");
  sub->add_option("--ref-iters", cfg.ref_iters,
                  "Iterations for the reference minimizer")
      ->check(CLI::PositiveNumber);
  sub->add_option("--variants", cfg.variants,
                  "Comma-separated subset of "
                  "fista,gfista-fixed,classic-bt,full-bt")
      ->delimiter(',')
      ->check(CLI::IsMember({"fista", "gfista-fixed", "classic-bt",
                             "full-bt"}));
  sub->add_flag("--verify,!--no-verify", cfg.verify,
                "Assert invariants and rate certificates (default on)");
}

int report_variants(const gfista_tools::ExperimentResult& result,
                    bool checked) {
  for (const gfista_tools::VariantResult& vr : result.variants) {
    if (!vr.failure.empty())
      std::printf("%s: FAILED (%s)\n", vr.name.c_str(), vr.failure.c_str());
    else
      std::printf("%s: %s\n", vr.name.c_str(),
                  checked ? "verified" : "completed");
  }
  return result.ok ? 0 : 1;
}

int do_run(const ExperimentConfig& cfg) {
  gfista_tools::ExperimentResult result = gfista_tools::run_experiment(cfg);
  const int rc = report_variants(result, cfg.verify);
  std::printf("summary: %s\n", result.summary_path.c_str());
  return rc;
}

// Like run, but always asserts the checks; without --out the files go to a
// scratch directory that is removed afterwards.
int do_verify(ExperimentConfig cfg, bool out_given) {
  cfg.verify = true;
  namespace fs = std::filesystem;
  fs::path scratch;
  if (!out_given) {
    scratch = fs::temp_directory_path() /
              ("gfista-verify-" + std::to_string(static_cast<long>(getpid())));
    cfg.out_dir = scratch.string();
  }
  int rc = 1;
  try {
    rc = report_variants(gfista_tools::run_experiment(cfg), true);
  } catch (...) {
    if (!scratch.empty()) {
      std::error_code ec;
      fs::remove_all(scratch, ec);
    }
    throw;
  }
  if (!scratch.empty()) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
  }
  return rc;
}

int do_reference(const ExperimentConfig& cfg) {
  std::shared_ptr<gf_problem> problem = gfista_tools::build_problem(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s\n",
                 cfg.out_dir.c_str());
    return 3;
  }
  const int64_t dim = gf_problem_dim(problem.get());
  std::vector<double> x_star(static_cast<std::size_t>(dim), 0.0);
  double f_star = 0.0;
  const gf_status status =
      gf_compute_reference(problem.get(), nullptr, cfg.ref_iters,
                           cfg.out_dir.c_str(), x_star.data(), &f_star);
  if (status != GF_OK) {
    std::fprintf(stderr, "error: %s\n", gf_last_error_message());
    return 3;
  }
  std::printf("reference objective: %.17g (%d iterations, cached in %s)\n",
              f_star, cfg.ref_iters, cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Accelerated proximal-gradient experiment harness: runs solver "
      "variants side by side on denoising problems and emits plot-ready CSV "
      "traces"};
  app.require_subcommand(1);

  ExperimentConfig cfg;

  CLI::App* run = app.add_subcommand(
      "run", "Run the configured variants; write CSV traces, images and a "
             "summary");
  add_experiment_flags(run, cfg);

  CLI::App* verify = app.add_subcommand(
      "verify", "Run the variants with every check asserted; keep no output "
                "unless --out is given");
  add_experiment_flags(verify, cfg);

  CLI::App* reference = app.add_subcommand(
      "reference", "Compute and cache the reference minimizer only");
  add_experiment_flags(reference, cfg);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = gfista_tools::expand_config_args(std::move(args));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  std::reverse(args.begin(), args.end());  // App::parse consumes back-to-front
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(run)) return do_run(cfg);
    if (app.got_subcommand(verify))
      return do_verify(cfg, verify->count("--out") > 0);
    return do_reference(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
