#include <doctest.h>

#include <gfista/gfista.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Problem {
  gf_problem* p = nullptr;
  ~Problem() { gf_problem_free(p); }
};

std::vector<double> phantom(int32_t rows, int32_t cols) {
  std::vector<double> img(static_cast<std::size_t>(rows) * cols);
  REQUIRE(gf_make_phantom(rows, cols, img.data()) == GF_OK);
  return img;
}

}  // namespace

TEST_CASE("config defaults match the documented values") {
  gf_config c;
  std::memset(&c, 0xFF, sizeof(c));
  gf_config_defaults(&c);
  CHECK(c.mode == GF_STEP_FULL_BACKTRACKING);
  CHECK(c.tau0 == 1.0);
  CHECK(c.rho == 0.9);
  CHECK(c.c_bt == 0.9);
  CHECK(c.t0 == 1.0);
  CHECK(c.i_max == 50);
  CHECK(c.max_iters == 100);
  CHECK(c.monotone == 0);
  CHECK(c.recompute_y_on_retry == 1);
  CHECK(c.force_mu_zero == 0);
  CHECK(c.check_invariants == 1);
}

TEST_CASE("problem builders round-trip their declared constants") {
  Problem toy;
  REQUIRE(gf_problem_quadratic_toy(12, 10.0, 0.5, 3, &toy.p) == GF_OK);
  CHECK(gf_problem_dim(toy.p) == 12);
  CHECK(gf_problem_mu_f(toy.p) == 1.0);
  CHECK(gf_problem_mu_g(toy.p) == 0.5);
  double l = 0.0;
  REQUIRE(gf_problem_lipschitz(toy.p, &l) == GF_OK);
  CHECK(l == 10.0);

  std::vector<double> img = phantom(8, 8);
  Problem huber;
  REQUIRE(gf_problem_huber_rof(img.data(), 8, 8, 0.1, 0.01, &huber.p) == GF_OK);
  CHECK(gf_problem_dim(huber.p) == 2 * 8 * 8);
  CHECK(gf_problem_mu_f(huber.p) == 0.0);
  CHECK(gf_problem_mu_g(huber.p) == 0.01 / 0.1);
  REQUIRE(gf_problem_lipschitz(huber.p, &l) == GF_OK);
  CHECK(l == 8.0);

  // Strictly positive counts; NULL background means a flat background of 1,
  // so the curvature bound is exactly the largest count.
  std::vector<double> counts(6 * 6);
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] = 1.0 + static_cast<double>(i % 7);
  Problem poisson;
  REQUIRE(gf_problem_poisson_tv(counts.data(), nullptr, 6, 6, 0.05, 0.15, 20,
                                &poisson.p) == GF_OK);
  CHECK(gf_problem_dim(poisson.p) == 36);
  CHECK(gf_problem_mu_f(poisson.p) == 0.0);
  CHECK(gf_problem_mu_g(poisson.p) == 0.15);
  REQUIRE(gf_problem_lipschitz(poisson.p, &l) == GF_OK);
  CHECK(l == 7.0);
}

TEST_CASE("builder failures set the status code and the thread message") {
  gf_problem* p = nullptr;
  CHECK(gf_problem_huber_rof(nullptr, 8, 8, 0.1, 0.01, &p) ==
        GF_ERR_INVALID_ARGUMENT);
  CHECK(p == nullptr);
  CHECK(gf_last_error_message()[0] != '\0');

  std::vector<double> img = phantom(4, 4);
  CHECK(gf_problem_huber_rof(img.data(), 0, 4, 0.1, 0.01, &p) ==
        GF_ERR_INVALID_ARGUMENT);
  CHECK(gf_problem_huber_rof(img.data(), 4, 4, -0.1, 0.01, &p) ==
        GF_ERR_INVALID_ARGUMENT);

  std::vector<double> counts(16, 2.0);
  counts[5] = 0.0;  // zero count is outside the model's domain
  CHECK(gf_problem_poisson_tv(counts.data(), nullptr, 4, 4, 0.05, 0.15, 20,
                              &p) == GF_ERR_DOMAIN);
  CHECK(gf_last_error_message()[0] != '\0');

  CHECK(gf_problem_quadratic_toy(0, 10.0, 0.5, 1, &p) ==
        GF_ERR_INVALID_ARGUMENT);
  CHECK(gf_problem_quadratic_toy(4, 10.0, 0.5, 1, nullptr) ==
        GF_ERR_INVALID_ARGUMENT);

  // NULL-tolerant accessors and free.
  gf_problem_free(nullptr);
  CHECK(gf_problem_dim(nullptr) == 0);
}

TEST_CASE("solve: record count, defaults, capacity validation, determinism") {
  Problem toy;
  REQUIRE(gf_problem_quadratic_toy(12, 10.0, 0.5, 3, &toy.p) == GF_OK);
  const int64_t dim = gf_problem_dim(toy.p);

  gf_config config;
  gf_config_defaults(&config);
  config.max_iters = 30;
  config.tau0 = 0.2;  // the toy has mu_f = 1, so tau * mu_f must stay below 1

  std::vector<gf_trace_record> trace(31);
  int32_t n = 0;
  std::vector<double> x_out(dim);
  REQUIRE(gf_solve(toy.p, &config, nullptr, nullptr, 0.0, trace.data(), 31, &n,
                   x_out.data()) == GF_OK);
  CHECK(n == 31);
  CHECK(trace.front().k == 0);
  CHECK(trace.back().k == 30);
  for (int i = 0; i < n; ++i) {
    CHECK(std::isfinite(trace[i].objective));
    CHECK(std::isnan(trace[i].gap));               // no reference supplied
    CHECK(std::isnan(trace[i].certificate_bound));
  }

  // Undersized trace is rejected before any work happens.
  CHECK(gf_solve(toy.p, &config, nullptr, nullptr, 0.0, trace.data(), 30, &n,
                 nullptr) == GF_ERR_INVALID_ARGUMENT);

  // NULL trace, n_records, and x_out are all allowed.
  CHECK(gf_solve(toy.p, &config, nullptr, nullptr, 0.0, nullptr, 0, nullptr,
                 nullptr) == GF_OK);

  // An explicit zero start must reproduce the default-start run exactly.
  std::vector<double> zeros(dim, 0.0);
  std::vector<double> x_out2(dim);
  std::vector<gf_trace_record> trace2(31);
  REQUIRE(gf_solve(toy.p, &config, zeros.data(), nullptr, 0.0, trace2.data(),
                   31, &n, x_out2.data()) == GF_OK);
  CHECK(std::memcmp(x_out.data(), x_out2.data(),
                    sizeof(double) * static_cast<std::size_t>(dim)) == 0);
  for (int i = 0; i < 31; ++i)
    CHECK(trace[i].objective == trace2[i].objective);
}

TEST_CASE("solve with a reference fills gaps and certified bounds") {
  Problem toy;
  REQUIRE(gf_problem_quadratic_toy(12, 10.0, 0.5, 3, &toy.p) == GF_OK);
  const int64_t dim = gf_problem_dim(toy.p);

  std::vector<double> x_star(dim);
  double f_star = 0.0;
  REQUIRE(gf_compute_reference(toy.p, nullptr, 2000, nullptr, x_star.data(),
                               &f_star) == GF_OK);

  gf_config config;
  gf_config_defaults(&config);
  config.max_iters = 30;
  config.tau0 = 0.2;  // keep tau * mu_f below 1 for the toy's mu_f = 1
  std::vector<gf_trace_record> trace(31);
  int32_t n = 0;
  REQUIRE(gf_solve(toy.p, &config, nullptr, x_star.data(), f_star,
                   trace.data(), 31, &n, nullptr) == GF_OK);
  REQUIRE(n == 31);
  CHECK(std::isfinite(trace[0].gap));
  CHECK(trace[0].gap > 0.0);
  for (int k = 1; k < n; ++k) {
    CHECK(std::isfinite(trace[k].gap));
    CHECK(std::isfinite(trace[k].certificate_bound));
    CHECK(trace[k].gap <= trace[k].certificate_bound);
  }
  CHECK(trace[30].gap < 1e-5 * trace[0].gap);
}

TEST_CASE("reference runs reuse their file cache byte for byte") {
  Problem toy;
  REQUIRE(gf_problem_quadratic_toy(10, 8.0, 0.5, 5, &toy.p) == GF_OK);
  const int64_t dim = gf_problem_dim(toy.p);

  fs::path dir = fs::temp_directory_path() /
                 ("gfista-capi-cache-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::vector<double> x1(dim), x2(dim);
  double f1 = 0.0, f2 = 0.0;
  REQUIRE(gf_compute_reference(toy.p, nullptr, 500, dir.string().c_str(),
                               x1.data(), &f1) == GF_OK);
  bool wrote_file = false;
  for (const auto& entry : fs::directory_iterator(dir))
    wrote_file |= entry.is_regular_file();
  CHECK(wrote_file);

  REQUIRE(gf_compute_reference(toy.p, nullptr, 500, dir.string().c_str(),
                               x2.data(), &f2) == GF_OK);
  CHECK(std::memcmp(x1.data(), x2.data(),
                    sizeof(double) * static_cast<std::size_t>(dim)) == 0);
  CHECK(f1 == f2);

  // The reference objective is consistent with the problem's own evaluation.
  double obj = 0.0;
  REQUIRE(gf_problem_objective(toy.p, x1.data(), &obj) == GF_OK);
  CHECK(std::abs(obj - f1) <= 1e-12 * std::max(1.0, std::abs(f1)));

  fs::remove_all(dir);
}

TEST_CASE("rate helpers match longhand evaluations of their formulas") {
  // Fixed-step bound, k = 1, q = 0.25: the decay factor is
  // min{1, 1.5 * 0.5, 0.5} = 0.5.
  double got = gf_rate_certificate_fixed(1, 0.25, 1.0, 0.1, 2.0, 0.3, 1.4);
  double bracket = 1.0 * 0.3 + 0.5 * (1.0 + 0.1 * 2.0) * 1.4;
  CHECK(got == doctest::Approx(0.5 * bracket).epsilon(1e-14));

  // Backtracking bound, k = 1, q_w = 0.04: decay min{1, 1, 0.8} = 0.8.
  double bt = gf_rate_certificate_backtracking(1, 0.04, 1.0, 0.125, 0.5, 0.9,
                                               8.0, 0.3, 1.4, 0);
  double l_bt = 8.0 / 0.9;
  double inner = 0.5 * 1.4 + 0.125 / (1.0 - 0.5 * 0.125) * 0.3;
  CHECK(bt == doctest::Approx(0.8 * (l_bt - 0.5) * inner).epsilon(1e-14));

  // literal_l_bt switches the estimate to rho * l_f.
  double bt_lit = gf_rate_certificate_backtracking(1, 0.04, 1.0, 0.125, 0.5,
                                                   0.9, 8.0, 0.3, 1.4, 1);
  CHECK(bt_lit ==
        doctest::Approx(0.8 * (0.9 * 8.0 - 0.5) * inner).epsilon(1e-14));

  CHECK(gf_worst_case_q(8.0, 0.9, 5.0, 0.1, 0.1) ==
        doctest::Approx(0.1 / (8.0 / 0.9 + 0.1)).epsilon(1e-14));
}

TEST_CASE("noise and phantom entry points mirror the library behavior") {
  std::vector<double> img = phantom(16, 16);
  for (double v : img) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(gf_make_phantom(0, 4, img.data()) == GF_ERR_INVALID_ARGUMENT);

  std::vector<double> noisy(img.size());
  REQUIRE(gf_add_gaussian_noise(img.data(), 16, 16, 0.005, 7, noisy.data()) ==
          GF_OK);
  // In-place operation is allowed and must agree with the separate-output run.
  std::vector<double> alias = img;
  REQUIRE(gf_add_gaussian_noise(alias.data(), 16, 16, 0.005, 7,
                                alias.data()) == GF_OK);
  CHECK(std::memcmp(alias.data(), noisy.data(),
                    sizeof(double) * noisy.size()) == 0);

  std::vector<double> neg(16, -1.0);
  std::vector<double> out(16);
  CHECK(gf_add_poisson_noise(neg.data(), 4, 4, 10.0, 3, out.data()) ==
        GF_ERR_DOMAIN);
}

TEST_CASE("primal recovery checks the problem kind") {
  std::vector<double> img = phantom(8, 8);
  Problem huber;
  REQUIRE(gf_problem_huber_rof(img.data(), 8, 8, 0.1, 0.01, &huber.p) == GF_OK);

  std::vector<double> p(2 * 8 * 8, 0.0);
  std::vector<double> u(8 * 8, -1.0);
  REQUIRE(gf_huber_rof_primal_from_dual(huber.p, p.data(), u.data()) == GF_OK);
  CHECK(std::memcmp(u.data(), img.data(), sizeof(double) * u.size()) == 0);

  Problem toy;
  REQUIRE(gf_problem_quadratic_toy(4, 5.0, 0.1, 1, &toy.p) == GF_OK);
  CHECK(gf_huber_rof_primal_from_dual(toy.p, p.data(), u.data()) ==
        GF_ERR_INVALID_ARGUMENT);
}
