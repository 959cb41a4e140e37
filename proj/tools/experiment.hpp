#pragma once

#include <gfista/gfista.h>

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace gfista_tools {

/// Everything one `run` invocation needs: problem selection and parameters,
/// solver settings shared by all variants, noise synthesis, and output
/// placement. NaN parameter values mean "use the per-problem default".
struct ExperimentConfig {
  std::string problem = "huber-rof";  // huber-rof | poisson-tv | quadratic-toy
  std::string image_path;             // empty: synthetic phantom
  int size = 64;                      // phantom side length when no image
  std::string out_dir = "out";

  double lambda = std::numeric_limits<double>::quiet_NaN();
  double eps = std::numeric_limits<double>::quiet_NaN();
  int inner_iters = 50;  // nested prox iterations (poisson-tv)

  double variance = 0.005;  // additive Gaussian noise (huber-rof)
  double peak = 45.0;       // photon count scale (poisson-tv)
  std::uint64_t seed = 7;

  int toy_dim = 40;  // quadratic-toy shape
  double toy_l_max = 10.0;
  double toy_mu_g = 0.5;

  double rho = 0.9;
  double c_bt = 0.9;
  double t0 = 1.0;
  double l0 = 5.0;  // initial Lipschitz guess; backtracking starts at 1/l0
  int i_max = 50;
  int max_iters = 100;
  bool monotone = false;
  bool recompute_y = true;

  int ref_iters = 5000;
  bool verify = true;  // assert invariants and certificates after each run

  std::vector<std::string> variants = {"fista", "gfista-fixed", "classic-bt",
                                       "full-bt"};
};

struct VariantResult {
  std::string name;
  std::vector<gf_trace_record> records;
  std::vector<double> solution;
  std::string csv_path;
  bool verified = true;     // all enabled checks passed
  std::string failure;      // first failing check, with its iteration index
};

struct ExperimentResult {
  bool ok = true;  // every variant ran and verified
  std::vector<VariantResult> variants;
  std::string summary_path;
};

/// Build the problem, compute (or load) the reference minimizer, run every
/// configured variant, write one CSV per variant plus summary.txt and image
/// outputs into out_dir. Verification failures set ok = false and the
/// per-variant failure strings; hard errors (bad config, solver failures)
/// throw gfista::Error.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Build only the problem the config describes (noise synthesis included; no
/// solves, no file output). For reference-only workflows and tests.
std::shared_ptr<gf_problem> build_problem(const ExperimentConfig& config);

/// The four solver presets: fista (constant step, strong convexity ignored),
/// gfista-fixed (constant step), classic-bt (step reductions only), full-bt
/// (reductions and growth). Throws on an unknown name.
gf_config variant_config(const ExperimentConfig& config,
                         const std::string& name, double lipschitz_f);

/// Re-derive the per-iteration identities from a recorded trace and check
/// them: t >= 1, omega in (0, 1], q t < 1 (with sqrt(q) t <= 1 for
/// constant-step runs), the inertial update residual, monotone decay when
/// requested, and gap <= certificate bound where the bound is meaningful.
/// Returns an empty string when everything holds, else a description naming
/// the first offending iteration.
std::string verify_trace(const std::vector<gf_trace_record>& records,
                         double mu_f, double mu_g, const gf_config& config,
                         bool assert_certificates);

/// Expand a `--config FILE` (or `--config=FILE`) occurrence in a raw
/// argument list into explicit `--key=value` tokens appended at the end.
/// The file holds one `key=value` pair per line, where keys are the long
/// flag names without leading dashes; blank lines and lines starting with
/// '#' are skipped, and the value may be wrapped in single or double
/// quotes. A key the command line already sets is dropped (explicit flags
/// override the file; `verify` and `no-verify` count as the same key), as
/// is any `config` key inside the file. When the same key repeats in the
/// file the last value wins. Args without `--config` pass through
/// unchanged. Throws gfista::Error on an unreadable file or a line that is
/// not key=value.
std::vector<std::string> expand_config_args(std::vector<std::string> args);

}  // namespace gfista_tools
