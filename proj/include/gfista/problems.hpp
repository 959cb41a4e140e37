#pragma once

#include <gfista/image_ops.hpp>
#include <gfista/solver.hpp>
#include <gfista/types.hpp>

#include <cstdint>
#include <string>

namespace gfista {

/// Dual formulation of ROF denoising with a Huber-smoothed total variation:
/// the unknown is a dual field p,
///   f(p) = |div_adjoint(p) - u0|^2 / 2           (mu_f = 0, L_f <= 8),
///   g(p) = (eps / (2 lambda)) |p|^2 + indicator of per-pixel balls of
///          radius lambda                          (mu_g = eps / lambda).
/// The denoised image is u0 - div_adjoint(p).
struct HuberRofSpec {
  ScalarField noisy;   // u0
  double lambda = 0.1;
  double eps = 0.01;
};

CompositeProblem build_huber_rof_dual(const HuberRofSpec& spec);

/// Dual field -> primal image for the Huber-ROF problem.
ScalarField primal_from_dual(const HuberRofSpec& spec, const VectorField& p);

/// Photon-count denoising: Kullback-Leibler data term plus total variation
/// with a small quadratic to make g strongly convex,
///   f(u) = kl_value(u; u0, b)                     (mu_f = 0, L_f = max u0/b^2),
///   g(u) = lambda |grad u|_{2,1} + (eps / 2) |u|^2 (mu_g = eps).
/// g's prox nests a fixed number of dual iterations (inner_iters).
struct PoissonTvSpec {
  ScalarField noisy;       // u0, strictly positive counts
  ScalarField background;  // b, strictly positive
  double lambda = 0.05;
  double eps = 0.001;
  int inner_iters = 50;
};

CompositeProblem build_poisson_tv(const PoissonTvSpec& spec);

/// Separable quadratic with a closed-form minimizer, for exact end-to-end
/// checks: f(x) = sum_i d_i (x_i - c_i)^2 / 2 with spectrum d in [1, l_max],
/// g(x) = (mu_g / 2) |x|^2. Minimizer: x*_i = d_i c_i / (d_i + mu_g).
struct QuadraticToySpec {
  Eigen::Index dim = 40;
  double l_max = 10.0;
  double mu_g = 0.5;
  std::uint64_t seed = 1;
  Vector d;  // filled by make_quadratic_toy_spec
  Vector c;
};

QuadraticToySpec make_quadratic_toy_spec(Eigen::Index dim, double l_max,
                                         double mu_g, std::uint64_t seed);

CompositeProblem build_quadratic_toy(const QuadraticToySpec& spec);

Vector quadratic_toy_minimizer(const QuadraticToySpec& spec);

/// Default starting point for each problem family: grad_forward(u0) for the
/// Huber-ROF dual, u0 for Poisson-TV, zero for the toy.
Vector default_init_huber_rof(const HuberRofSpec& spec);
Vector default_init_poisson_tv(const PoissonTvSpec& spec);

// ---- Synthetic data ---------------------------------------------------------

/// Additive Gaussian noise with the given variance, deterministic in seed.
ScalarField add_gaussian_noise(const ScalarField& clean, double variance,
                               std::uint64_t seed);

/// Poisson counts with mean peak * clean_ij, deterministic in seed. Values
/// are returned unscaled (counts).
ScalarField add_poisson_noise(const ScalarField& clean, double peak,
                              std::uint64_t seed);

/// Piecewise-constant test image with values in [0, 1].
ScalarField make_phantom(Eigen::Index rows, Eigen::Index cols);

// ---- Reference solutions ----------------------------------------------------

/// Minimize the problem by a long plain fixed-step run (tau = 1 / L_f, t0 = 1)
/// and return the final point with its objective value. Requires lipschitz_f.
Reference compute_reference(const CompositeProblem& problem,
                            const Vector& x_init, int iters);

/// compute_reference with a binary file cache. cache_key identifies the
/// problem instance and iteration count; rows/cols describe the grid layout
/// of the stored point (vector fields store their two planes stacked, so
/// rows = 2 * grid rows).
Reference compute_reference_cached(const CompositeProblem& problem,
                                   const Vector& x_init, int iters,
                                   const std::string& cache_dir,
                                   std::uint64_t cache_key,
                                   Eigen::Index rows, Eigen::Index cols);

/// FNV-1a accumulator for building cache keys out of raw bytes.
std::uint64_t fnv1a64(const void* bytes, std::size_t n,
                      std::uint64_t h = 0xcbf29ce484222325ull);

}  // namespace gfista
