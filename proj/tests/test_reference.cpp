#include <doctest.h>

#include <gfista/problems.hpp>
#include <gfista/solver.hpp>
#include <gfista/types.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include <unistd.h>

using namespace gfista;
namespace fs = std::filesystem;

namespace {

std::optional<ErrorCode> thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("long reference run lands on the closed-form minimizer") {
  QuadraticToySpec spec = make_quadratic_toy_spec(10, 8.0, 0.5, 5);
  CompositeProblem problem = build_quadratic_toy(spec);
  Vector x0 = Vector::Zero(10);

  Reference ref = compute_reference(problem, x0, 5000);
  Vector xstar = quadratic_toy_minimizer(spec);
  CHECK((ref.x_star - xstar).lpNorm<Eigen::Infinity>() < 1e-10);
  double fstar = problem.objective(xstar);
  CHECK(std::abs(ref.f_star - fstar) <= 1e-12 * std::max(1.0, std::abs(fstar)));
}

TEST_CASE("a one-iteration reference is exactly one forward-backward step") {
  QuadraticToySpec spec = make_quadratic_toy_spec(10, 8.0, 0.5, 9);
  CompositeProblem problem = build_quadratic_toy(spec);
  Vector x0 = Vector::Constant(10, 0.3);

  Reference ref = compute_reference(problem, x0, 1);
  Vector manual = forward_backward(problem, x0, 1.0 / 8.0);
  CHECK((ref.x_star - manual).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(ref.f_star ==
        doctest::Approx(problem.objective(manual)).epsilon(1e-15));
}

TEST_CASE("reference computation validates its inputs") {
  QuadraticToySpec spec = make_quadratic_toy_spec(6, 4.0, 0.0, 1);
  CompositeProblem problem = build_quadratic_toy(spec);
  Vector x0 = Vector::Zero(6);
  CHECK(thrown_code([&] { compute_reference(problem, x0, 0); }) ==
        ErrorCode::invalid_argument);

  CompositeProblem no_l;
  no_l.dim = 3;
  no_l.mu_f = 0.0;
  no_l.mu_g = 0.0;
  no_l.f_value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  no_l.f_grad = [](const Vector& x) { return x; };
  no_l.g_value = [](const Vector&) { return 0.0; };
  no_l.g_prox = [](const Vector& z, double) { return z; };
  CHECK(thrown_code([&] { compute_reference(no_l, Vector::Zero(3), 5); }) ==
        ErrorCode::config_error);
}

TEST_CASE("cached references: hit, miss on corruption, and overwrite") {
  TempDir dir("gfista-ref-cache");
  const std::uint64_t key = 0xABCDull;
  const fs::path cache_file = dir.path / "000000000000abcd.gfref";

  QuadraticToySpec spec_a = make_quadratic_toy_spec(10, 8.0, 0.5, 5);
  QuadraticToySpec spec_b = make_quadratic_toy_spec(10, 8.0, 0.5, 6);
  CompositeProblem prob_a = build_quadratic_toy(spec_a);
  CompositeProblem prob_b = build_quadratic_toy(spec_b);
  Vector x0 = Vector::Zero(10);

  Reference ref_a =
      compute_reference_cached(prob_a, x0, 400, dir.path.string(), key, 1, 10);
  REQUIRE(fs::exists(cache_file));
  CHECK((ref_a.x_star - quadratic_toy_minimizer(spec_a))
            .lpNorm<Eigen::Infinity>() < 1e-8);

  // Same key, different problem: the stored point must be returned untouched,
  // which proves the cache was consulted rather than recomputed.
  Reference hit =
      compute_reference_cached(prob_b, x0, 400, dir.path.string(), key, 1, 10);
  CHECK((hit.x_star - ref_a.x_star).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(hit.f_star == ref_a.f_star);
  CHECK((hit.x_star - quadratic_toy_minimizer(spec_b))
            .lpNorm<Eigen::Infinity>() > 1e-3);

  // Corrupt the file: the call must fall back to a fresh solve and replace it.
  {
    std::ofstream out(cache_file, std::ios::binary | std::ios::trunc);
    out.write("GF", 2);
  }
  Reference fresh =
      compute_reference_cached(prob_b, x0, 400, dir.path.string(), key, 1, 10);
  CHECK((fresh.x_star - quadratic_toy_minimizer(spec_b))
            .lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(fs::file_size(cache_file) > 2);

  // The overwritten cache now serves the new point.
  Reference reread =
      compute_reference_cached(prob_a, x0, 400, dir.path.string(), key, 1, 10);
  CHECK((reread.x_star - fresh.x_star).lpNorm<Eigen::Infinity>() == 0.0);

  // Grid shape must match the problem dimension.
  CHECK(thrown_code([&] {
          compute_reference_cached(prob_a, x0, 10, dir.path.string(), key, 2,
                                   10);
        }) == ErrorCode::invalid_argument);

  // A stored grid shape that disagrees with the request is treated as a miss.
  Reference reshaped =
      compute_reference_cached(prob_a, x0, 400, dir.path.string(), key, 10, 1);
  CHECK((reshaped.x_star - quadratic_toy_minimizer(spec_a))
            .lpNorm<Eigen::Infinity>() < 1e-8);
}
