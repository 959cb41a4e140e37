#include <gfista/problems.hpp>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <utility>

namespace gfista {

namespace {

static_assert(std::endian::native == std::endian::little,
              "reference cache files are little-endian");

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

// Uniform in (0, 1), built from the top 53 bits so the value is a fixed
// function of the engine output (no distribution-object variability).
double uniform01(std::mt19937_64& gen) {
  return (double(gen() >> 11) + 0.5) * 0x1p-53;
}

ScalarField as_scalar_field(const Vector& x, Eigen::Index rows,
                            Eigen::Index cols) {
  ScalarField u(rows, cols);
  u.data = x;
  return u;
}

VectorField as_vector_field(const Vector& x, Eigen::Index rows,
                            Eigen::Index cols) {
  VectorField p(rows, cols);
  p.data = x;
  return p;
}

// Bregman distance of one photon-count term, written to avoid the direct
// phi(x_hat) - phi(x_bar) cancellation: on the smooth branch it reduces to
// u0 (r - log(1 + r)) with r = (x_hat - x_bar) / (x_bar + b), which log1p
// evaluates to near machine precision even for tiny displacements.
double kl_bregman_term(double x_hat, double x_bar, double u0, double b) {
  if (x_hat >= 0 && x_bar >= 0) {
    if (u0 == 0) return 0.0;
    const double r = (x_hat - x_bar) / (x_bar + b);
    return u0 * (r - std::log1p(r));
  }
  if (x_hat < 0 && x_bar < 0) {
    const double d = x_hat - x_bar;
    return 0.5 * (u0 / (b * b)) * d * d;
  }
  return detail::kl_phi(x_hat, u0, b) - detail::kl_phi(x_bar, u0, b) -
         detail::kl_dphi(x_bar, u0, b) * (x_hat - x_bar);
}

}  // namespace

CompositeProblem build_huber_rof_dual(const HuberRofSpec& spec) {
  if (spec.noisy.rows < 1 || spec.noisy.cols < 1 ||
      spec.noisy.data.size() != spec.noisy.rows * spec.noisy.cols)
    fail(ErrorCode::invalid_argument, "huber-rof: malformed noisy image");
  if (!(spec.lambda > 0))
    fail(ErrorCode::invalid_argument, "huber-rof: lambda must be positive");
  if (!(spec.eps > 0))
    fail(ErrorCode::invalid_argument, "huber-rof: eps must be positive");
  const Eigen::Index m = spec.noisy.rows, n = spec.noisy.cols;
  const ScalarField u0 = spec.noisy;
  const double lambda = spec.lambda;
  const double mu_g = spec.eps / spec.lambda;

  CompositeProblem problem;
  problem.dim = 2 * m * n;
  problem.mu_f = 0.0;
  problem.mu_g = mu_g;
  problem.lipschitz_f = 8.0;  // |div_adjoint|^2 <= 8 on any grid

  problem.f_value = [u0, m, n](const Vector& x) {
    Vector r = div_adjoint(as_vector_field(x, m, n)).data - u0.data;
    return 0.5 * r.squaredNorm();
  };
  problem.f_grad = [u0, m, n](const Vector& x) {
    ScalarField r(m, n);
    r.data = div_adjoint(as_vector_field(x, m, n)).data - u0.data;
    return grad_forward(r).data;
  };
  // f is the quadratic |div_adjoint(p) - u0|^2 / 2, so the Bregman distance
  // is exactly |div_adjoint(p_hat - p_bar)|^2 / 2 -- no cancellation.
  problem.f_bregman = [m, n](const Vector& x_hat, const Vector& x_bar) {
    return 0.5 *
           div_adjoint(as_vector_field(x_hat - x_bar, m, n)).data.squaredNorm();
  };
  problem.g_value = [lambda, mu_g, m, n](const Vector& x) {
    const Eigen::Index mn = m * n;
    const double limit = lambda * lambda * (1.0 + 1e-9);
    for (Eigen::Index i = 0; i < mn; ++i) {
      const double a = x[i], b = x[mn + i];
      if (a * a + b * b > limit)
        return std::numeric_limits<double>::infinity();
    }
    return 0.5 * mu_g * x.squaredNorm();
  };
  problem.g_prox = [lambda, mu_g, m, n](const Vector& z, double tau) {
    return prox_dual_huber_g(as_vector_field(z, m, n), tau, lambda, mu_g).data;
  };
  return problem;
}

ScalarField primal_from_dual(const HuberRofSpec& spec, const VectorField& p) {
  if (p.rows != spec.noisy.rows || p.cols != spec.noisy.cols)
    fail(ErrorCode::invalid_argument, "primal_from_dual: grid mismatch");
  ScalarField u(spec.noisy.rows, spec.noisy.cols);
  u.data = spec.noisy.data - div_adjoint(p).data;
  return u;
}

CompositeProblem build_poisson_tv(const PoissonTvSpec& spec) {
  if (spec.noisy.rows < 1 || spec.noisy.cols < 1 ||
      spec.noisy.data.size() != spec.noisy.rows * spec.noisy.cols)
    fail(ErrorCode::invalid_argument, "poisson-tv: malformed noisy image");
  if (spec.background.rows != spec.noisy.rows ||
      spec.background.cols != spec.noisy.cols ||
      spec.background.data.size() != spec.noisy.data.size())
    fail(ErrorCode::invalid_argument, "poisson-tv: background grid mismatch");
  if (!(spec.noisy.data.array() > 0).all())
    fail(ErrorCode::domain_error, "poisson-tv: counts must be > 0");
  if (!(spec.background.data.array() > 0).all())
    fail(ErrorCode::domain_error, "poisson-tv: background must be > 0");
  if (!(spec.lambda >= 0))
    fail(ErrorCode::invalid_argument, "poisson-tv: lambda must be >= 0");
  if (!(spec.eps >= 0))
    fail(ErrorCode::invalid_argument, "poisson-tv: eps must be >= 0");
  if (spec.inner_iters < 1)
    fail(ErrorCode::invalid_argument, "poisson-tv: inner_iters must be >= 1");
  const Eigen::Index m = spec.noisy.rows, n = spec.noisy.cols;
  const ScalarField u0 = spec.noisy;
  const ScalarField b = spec.background;
  const double lambda = spec.lambda;
  const double eps = spec.eps;
  const int inner_iters = spec.inner_iters;

  CompositeProblem problem;
  problem.dim = m * n;
  problem.mu_f = 0.0;
  problem.mu_g = eps;
  problem.lipschitz_f = kl_lipschitz(u0, b);

  problem.f_value = [u0, b, m, n](const Vector& x) {
    return kl_value(as_scalar_field(x, m, n), u0, b);
  };
  problem.f_grad = [u0, b, m, n](const Vector& x) {
    return kl_grad(as_scalar_field(x, m, n), u0, b).data;
  };
  problem.f_bregman = [u0, b](const Vector& x_hat, const Vector& x_bar) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x_hat.size(); ++i)
      total += kl_bregman_term(x_hat[i], x_bar[i], u0.data[i], b.data[i]);
    return total;
  };
  problem.g_value = [lambda, eps, m, n](const Vector& x) {
    const ScalarField u = as_scalar_field(x, m, n);
    const VectorField g = grad_forward(u);
    const Eigen::Index mn = m * n;
    double tv = 0.0;
    for (Eigen::Index i = 0; i < mn; ++i)
      tv += std::sqrt(g.data[i] * g.data[i] +
                      g.data[mn + i] * g.data[mn + i]);
    return lambda * tv + 0.5 * eps * x.squaredNorm();
  };
  auto base_prox = [m, n, inner_iters](const Vector& z, double sigma) {
    return tv_prox(as_scalar_field(z, m, n), sigma, inner_iters).data;
  };
  problem.g_prox = [base_prox, lambda, eps](const Vector& z, double tau) {
    return prox_compose(base_prox, lambda, eps, tau, z);
  };
  return problem;
}

QuadraticToySpec make_quadratic_toy_spec(Eigen::Index dim, double l_max,
                                         double mu_g, std::uint64_t seed) {
  if (dim < 1)
    fail(ErrorCode::invalid_argument, "quadratic-toy: dim must be >= 1");
  if (!(l_max >= 1))
    fail(ErrorCode::invalid_argument, "quadratic-toy: l_max must be >= 1");
  if (!(mu_g >= 0))
    fail(ErrorCode::invalid_argument, "quadratic-toy: mu_g must be >= 0");
  QuadraticToySpec spec;
  spec.dim = dim;
  spec.l_max = l_max;
  spec.mu_g = mu_g;
  spec.seed = seed;
  spec.d.resize(dim);
  spec.c.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    spec.d[i] = dim == 1 ? l_max
                         : 1.0 + (l_max - 1.0) * double(i) / double(dim - 1);
  std::mt19937_64 gen(seed);
  for (Eigen::Index i = 0; i < dim; ++i) spec.c[i] = 2.0 * uniform01(gen) - 1.0;
  return spec;
}

CompositeProblem build_quadratic_toy(const QuadraticToySpec& spec) {
  if (spec.d.size() != spec.dim || spec.c.size() != spec.dim || spec.dim < 1)
    fail(ErrorCode::invalid_argument,
         "quadratic-toy: spec not initialized (use make_quadratic_toy_spec)");
  const Vector d = spec.d;
  const Vector c = spec.c;
  const double mu_g = spec.mu_g;

  CompositeProblem problem;
  problem.dim = spec.dim;
  problem.mu_f = d.minCoeff();
  problem.mu_g = mu_g;
  problem.lipschitz_f = d.maxCoeff();
  problem.f_value = [d, c](const Vector& x) {
    return 0.5 * (d.array() * (x - c).array().square()).sum();
  };
  problem.f_grad = [d, c](const Vector& x) {
    return Vector(d.array() * (x - c).array());
  };
  problem.f_bregman = [d](const Vector& x_hat, const Vector& x_bar) {
    return 0.5 * (d.array() * (x_hat - x_bar).array().square()).sum();
  };
  problem.g_value = [mu_g](const Vector& x) {
    return 0.5 * mu_g * x.squaredNorm();
  };
  problem.g_prox = [mu_g](const Vector& z, double tau) {
    return Vector(z / (1.0 + tau * mu_g));
  };
  return problem;
}

Vector quadratic_toy_minimizer(const QuadraticToySpec& spec) {
  if (spec.d.size() != spec.dim || spec.c.size() != spec.dim || spec.dim < 1)
    fail(ErrorCode::invalid_argument,
         "quadratic-toy: spec not initialized (use make_quadratic_toy_spec)");
  return Vector(spec.d.array() * spec.c.array() /
                (spec.d.array() + spec.mu_g));
}

Vector default_init_huber_rof(const HuberRofSpec& spec) {
  return grad_forward(spec.noisy).data;
}

Vector default_init_poisson_tv(const PoissonTvSpec& spec) {
  return spec.noisy.data;
}

ScalarField add_gaussian_noise(const ScalarField& clean, double variance,
                               std::uint64_t seed) {
  if (clean.rows < 1 || clean.cols < 1 ||
      clean.data.size() != clean.rows * clean.cols)
    fail(ErrorCode::invalid_argument, "add_gaussian_noise: malformed image");
  if (!(variance >= 0))
    fail(ErrorCode::invalid_argument,
         "add_gaussian_noise: variance must be >= 0");
  ScalarField out = clean;
  if (variance == 0) return out;
  const double sigma = std::sqrt(variance);
  std::mt19937_64 gen(seed);
  // Box-Muller, consuming engine outputs in a fixed order for repeatability.
  const Eigen::Index size = out.data.size();
  for (Eigen::Index i = 0; i < size; i += 2) {
    const double u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out.data[i] += sigma * radius * std::cos(angle);
    if (i + 1 < size) out.data[i + 1] += sigma * radius * std::sin(angle);
  }
  return out;
}

namespace {

// Knuth's multiplication method, splitting large means into chunks of at most
// 500 so exp(-chunk) stays a normal double.
double poisson_sample(std::mt19937_64& gen, double mean) {
  double total = 0.0;
  while (mean > 0) {
    const double chunk = std::min(mean, 500.0);
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double product = 1.0;
    long count = -1;
    do {
      product *= uniform01(gen);
      ++count;
    } while (product > limit);
    total += double(count);
  }
  return total;
}

}  // namespace

ScalarField add_poisson_noise(const ScalarField& clean, double peak,
                              std::uint64_t seed) {
  if (clean.rows < 1 || clean.cols < 1 ||
      clean.data.size() != clean.rows * clean.cols)
    fail(ErrorCode::invalid_argument, "add_poisson_noise: malformed image");
  if (!(peak > 0))
    fail(ErrorCode::invalid_argument, "add_poisson_noise: peak must be > 0");
  if ((clean.data.array() < 0).any())
    fail(ErrorCode::domain_error,
         "add_poisson_noise: input pixels must be >= 0");
  ScalarField out(clean.rows, clean.cols);
  std::mt19937_64 gen(seed);
  for (Eigen::Index i = 0; i < clean.data.size(); ++i)
    out.data[i] = poisson_sample(gen, peak * clean.data[i]);
  return out;
}

ScalarField make_phantom(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1)
    fail(ErrorCode::invalid_argument, "make_phantom: dimensions must be >= 1");
  ScalarField u(rows, cols);
  const double m = double(rows), n = double(cols);
  const double scale = std::min(m, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = 0.2;
      const double di = (double(i) - 0.35 * (m - 1.0));
      const double dj = (double(j) - 0.40 * (n - 1.0));
      if (di * di + dj * dj <= 0.0625 * scale * scale) v = 0.85;
      if (double(i) >= 0.60 * m && double(i) < 0.90 * m &&
          double(j) >= 0.10 * n && double(j) < 0.45 * n)
        v = 0.5;
      const double ei = (double(i) - 0.70 * (m - 1.0));
      const double ej = (double(j) - 0.75 * (n - 1.0));
      if (ei * ei + ej * ej <= 0.0225 * scale * scale) v = 0.05;
      u.at(i, j) = v;
    }
  }
  return u;
}

Reference compute_reference(const CompositeProblem& problem,
                            const Vector& x_init, int iters) {
  if (iters < 1)
    fail(ErrorCode::invalid_argument, "compute_reference: iters must be >= 1");
  if (!problem.lipschitz_f)
    fail(ErrorCode::config_error,
         "compute_reference: problem must declare lipschitz_f");
  SolverConfig config;
  config.mode = StepMode::fixed;
  config.tau0 = 1.0 / *problem.lipschitz_f;
  config.t0 = 1.0;
  config.max_iters = iters;
  config.check_invariants = false;  // long utility run; checked paths cover it
  Trace trace = solve(problem, config, x_init);
  Reference ref;
  ref.x_star = trace.solution;
  ref.f_star = trace.records.back().objective;
  return ref;
}

namespace {

constexpr char kCacheMagic[6] = {'G', 'F', 'R', 'E', 'F', '1'};

bool read_cache(const std::filesystem::path& path, Eigen::Index rows,
                Eigen::Index cols, Reference* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kCacheMagic, 6) != 0)
    return false;
  std::uint32_t m = 0, n = 0;
  if (!in.read(reinterpret_cast<char*>(&m), 4) ||
      !in.read(reinterpret_cast<char*>(&n), 4))
    return false;
  if (m != std::uint32_t(rows) || n != std::uint32_t(cols)) return false;
  Vector x(Eigen::Index(m) * Eigen::Index(n));
  if (!in.read(reinterpret_cast<char*>(x.data()),
               std::streamsize(sizeof(double)) * x.size()))
    return false;
  double f_star = 0.0;
  if (!in.read(reinterpret_cast<char*>(&f_star), sizeof(double))) return false;
  in.peek();
  if (!in.eof()) return false;  // trailing bytes: treat as malformed
  out->x_star = std::move(x);
  out->f_star = f_star;
  return true;
}

void write_cache(const std::filesystem::path& path, Eigen::Index rows,
                 Eigen::Index cols, const Reference& ref) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      fail(ErrorCode::io_error,
           "reference cache: cannot open " + tmp.string() + " for writing");
    const std::uint32_t m = std::uint32_t(rows), n = std::uint32_t(cols);
    out.write(kCacheMagic, 6);
    out.write(reinterpret_cast<const char*>(&m), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(ref.x_star.data()),
              std::streamsize(sizeof(double)) * ref.x_star.size());
    out.write(reinterpret_cast<const char*>(&ref.f_star), sizeof(double));
    if (!out)
      fail(ErrorCode::io_error, "reference cache: write to " + tmp.string() +
                                    " failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    fail(ErrorCode::io_error,
         "reference cache: cannot move " + tmp.string() + " into place");
}

}  // namespace

Reference compute_reference_cached(const CompositeProblem& problem,
                                   const Vector& x_init, int iters,
                                   const std::string& cache_dir,
                                   std::uint64_t cache_key, Eigen::Index rows,
                                   Eigen::Index cols) {
  if (rows < 1 || cols < 1 || rows * cols != problem.dim)
    fail(ErrorCode::invalid_argument,
         "compute_reference_cached: rows * cols must equal problem.dim");
  char name[32];
  std::snprintf(name, sizeof(name), "%016llx.gfref",
                static_cast<unsigned long long>(cache_key));
  const std::filesystem::path path = std::filesystem::path(cache_dir) / name;
  Reference ref;
  if (read_cache(path, rows, cols, &ref)) return ref;
  ref = compute_reference(problem, x_init, iters);
  write_cache(path, rows, cols, ref);
  return ref;
}

std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t h) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace gfista
