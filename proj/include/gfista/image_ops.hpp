#pragma once

#include <gfista/types.hpp>

namespace gfista {

/// Grayscale image stored row-major: value(i, j) = data[i * cols + j].
struct ScalarField {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Vector data;

  ScalarField() = default;
  ScalarField(Eigen::Index r, Eigen::Index c)
      : rows(r), cols(c), data(Vector::Zero(r * c)) {}
  ScalarField(Eigen::Index r, Eigen::Index c, Vector d)
      : rows(r), cols(c), data(std::move(d)) {}

  double& at(Eigen::Index i, Eigen::Index j) { return data[i * cols + j]; }
  double at(Eigen::Index i, Eigen::Index j) const { return data[i * cols + j]; }
};

/// Two-component field on the same grid, stored as two stacked row-major
/// planes: component 1 occupies data[0, rows*cols), component 2 the rest.
struct VectorField {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Vector data;

  VectorField() = default;
  VectorField(Eigen::Index r, Eigen::Index c)
      : rows(r), cols(c), data(Vector::Zero(2 * r * c)) {}
  VectorField(Eigen::Index r, Eigen::Index c, Vector d)
      : rows(r), cols(c), data(std::move(d)) {}

  double& c1(Eigen::Index i, Eigen::Index j) { return data[i * cols + j]; }
  double c1(Eigen::Index i, Eigen::Index j) const { return data[i * cols + j]; }
  double& c2(Eigen::Index i, Eigen::Index j) {
    return data[rows * cols + i * cols + j];
  }
  double c2(Eigen::Index i, Eigen::Index j) const {
    return data[rows * cols + i * cols + j];
  }
};

/// Forward-difference gradient with zero rows/columns at the far boundary:
/// c1(i,j) = u(i+1,j) - u(i,j) for i < rows-1, c2(i,j) = u(i,j+1) - u(i,j)
/// for j < cols-1.
VectorField grad_forward(const ScalarField& u);

/// Exact adjoint of grad_forward: <grad u, p> == <u, div_adjoint(p)> for all
/// u, p. This is the negative divergence under the usual sign convention.
ScalarField div_adjoint(const VectorField& p);

/// Squared operator norm of grad_forward on a rows-by-cols grid, estimated by
/// power iteration from a fixed pseudo-random start. Bounded above by 8.
double operator_norm_sq(Eigen::Index rows, Eigen::Index cols, int iters = 100);

/// Project each per-pixel 2-vector of p onto the Euclidean ball of the given
/// radius.
VectorField project_l2inf_ball(const VectorField& p, double radius);

/// Proximal map of (mu_g / 2) |p|^2 plus the indicator of per-pixel balls of
/// radius lambda: scale by 1 / (1 + tau * mu_g), then project.
VectorField prox_dual_huber_g(const VectorField& p, double tau, double lambda,
                              double mu_g);

/// Proximal map of h(x) + (eps/2)|x|^2 given base_prox = prox of alpha * h:
/// evaluates base_prox(z / (1 + eps tau), alpha tau / (1 + eps tau)).
/// alpha == 0 short-circuits to plain shrinkage z / (1 + eps tau).
Vector prox_compose(const std::function<Vector(const Vector&, double)>& base_prox,
                    double alpha, double eps, double tau, const Vector& z);

/// Huber penalty: t^2 / (2 eps) for |t| <= eps, |t| - eps / 2 beyond.
double huber_scalar(double t, double eps);

/// Sum of the Huber penalty over the per-pixel gradient magnitudes of u.
double huber_tv_value(const ScalarField& u, double eps);

/// Kullback-Leibler data term for counts u0 and background b, extended below
/// u = 0 by a C^1 quadratic so the gradient stays Lipschitz everywhere:
///   sum_i [ u_i + b_i - u0_i + u0_i log(u0_i / (u_i + b_i)) ]  for u_i >= 0,
/// with the second-order Taylor model around u_i = 0 for u_i < 0.
double kl_value(const ScalarField& u, const ScalarField& u0,
                const ScalarField& b);

namespace detail {
/// Per-pixel term of kl_value and its derivative, exposed so problem builders
/// can assemble exact per-pixel Bregman distances.
double kl_phi(double u, double u0, double b);
double kl_dphi(double u, double u0, double b);
}  // namespace detail

ScalarField kl_grad(const ScalarField& u, const ScalarField& u0,
                    const ScalarField& b);

/// Gradient Lipschitz constant of kl_value: max_i u0_i / b_i^2.
double kl_lipschitz(const ScalarField& u0, const ScalarField& b);

/// Proximal map of sigma * |grad u|_{2,1} (isotropic total variation),
/// computed by a fixed number of accelerated iterations on the dual problem.
ScalarField tv_prox(const ScalarField& z, double sigma, int inner_iters);

}  // namespace gfista
