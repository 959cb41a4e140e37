#include <gfista/image_ops.hpp>

#include <cmath>
#include <string>

namespace gfista {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

void validate_grid(Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1)
    fail(ErrorCode::invalid_argument, "grid dimensions must be positive");
}

void validate_scalar(const ScalarField& u) {
  validate_grid(u.rows, u.cols);
  if (u.data.size() != u.rows * u.cols)
    fail(ErrorCode::invalid_argument, "scalar field data size mismatch");
}

void validate_vector(const VectorField& p) {
  validate_grid(p.rows, p.cols);
  if (p.data.size() != 2 * p.rows * p.cols)
    fail(ErrorCode::invalid_argument, "vector field data size mismatch");
}

}  // namespace

VectorField grad_forward(const ScalarField& u) {
  validate_scalar(u);
  const Eigen::Index m = u.rows, n = u.cols;
  VectorField p(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i + 1 < m) p.c1(i, j) = u.at(i + 1, j) - u.at(i, j);
      if (j + 1 < n) p.c2(i, j) = u.at(i, j + 1) - u.at(i, j);
    }
  }
  return p;
}

ScalarField div_adjoint(const VectorField& p) {
  validate_vector(p);
  const Eigen::Index m = p.rows, n = p.cols;
  ScalarField u(m, n);
  // <grad v, p> = <v, div_adjoint p> termwise: entry (i, j) collects the
  // coefficients of v(i, j) in the forward differences. The last row of
  // component 1 and last column of component 2 never enter (the gradient is
  // zero there), so they are ignored.
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 0.0;
      if (i >= 1) v += p.c1(i - 1, j);
      if (i + 1 < m) v -= p.c1(i, j);
      if (j >= 1) v += p.c2(i, j - 1);
      if (j + 1 < n) v -= p.c2(i, j);
      u.at(i, j) = v;
    }
  }
  return u;
}

double operator_norm_sq(Eigen::Index rows, Eigen::Index cols, int iters) {
  validate_grid(rows, cols);
  if (iters < 1)
    fail(ErrorCode::invalid_argument, "operator_norm_sq: iters must be >= 1");
  // Fixed pseudo-random start so results are reproducible; a constant start
  // would sit in the kernel of the gradient.
  ScalarField v(rows, cols);
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  for (Eigen::Index i = 0; i < v.data.size(); ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    v.data[i] = double(state >> 11) * 0x1p-53 - 0.5;
  }
  v.data.normalize();
  for (int it = 0; it < iters; ++it) {
    ScalarField w = div_adjoint(grad_forward(v));
    const double norm = w.data.norm();
    if (norm == 0.0) return 0.0;  // 1x1 grid: the map is identically zero
    v.data = w.data / norm;
  }
  // Rayleigh quotient of the converged direction (|v| = 1).
  return v.data.dot(div_adjoint(grad_forward(v)).data);
}

VectorField project_l2inf_ball(const VectorField& p, double radius) {
  validate_vector(p);
  if (!(radius >= 0))
    fail(ErrorCode::invalid_argument,
         "project_l2inf_ball: radius must be non-negative");
  VectorField out = p;
  const Eigen::Index mn = p.rows * p.cols;
  for (Eigen::Index i = 0; i < mn; ++i) {
    const double a = out.data[i];
    const double b = out.data[mn + i];
    const double norm = std::sqrt(a * a + b * b);
    if (norm > radius) {
      const double scale = radius / norm;
      out.data[i] = a * scale;
      out.data[mn + i] = b * scale;
    }
  }
  return out;
}

VectorField prox_dual_huber_g(const VectorField& p, double tau, double lambda,
                              double mu_g) {
  validate_vector(p);
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "prox_dual_huber_g: tau must be positive");
  if (!(lambda > 0))
    fail(ErrorCode::invalid_argument,
         "prox_dual_huber_g: lambda must be positive");
  if (!(mu_g >= 0))
    fail(ErrorCode::invalid_argument,
         "prox_dual_huber_g: mu_g must be non-negative");
  VectorField shrunk(p.rows, p.cols, p.data / (1.0 + tau * mu_g));
  return project_l2inf_ball(shrunk, lambda);
}

Vector prox_compose(
    const std::function<Vector(const Vector&, double)>& base_prox,
    double alpha, double eps, double tau, const Vector& z) {
  if (!(alpha >= 0))
    fail(ErrorCode::invalid_argument,
         "prox_compose: alpha must be non-negative");
  if (!(eps >= 0))
    fail(ErrorCode::invalid_argument, "prox_compose: eps must be non-negative");
  if (!(tau > 0))
    fail(ErrorCode::invalid_argument, "prox_compose: tau must be positive");
  const double shrink = 1.0 + eps * tau;
  if (alpha == 0.0) return z / shrink;
  if (!base_prox)
    fail(ErrorCode::invalid_argument, "prox_compose: base_prox is empty");
  return base_prox(z / shrink, alpha * tau / shrink);
}

double huber_scalar(double t, double eps) {
  if (!(eps > 0))
    fail(ErrorCode::invalid_argument, "huber_scalar: eps must be positive");
  const double a = std::abs(t);
  return a <= eps ? t * t / (2.0 * eps) : a - 0.5 * eps;
}

double huber_tv_value(const ScalarField& u, double eps) {
  validate_scalar(u);
  const VectorField g = grad_forward(u);
  const Eigen::Index mn = u.rows * u.cols;
  double total = 0.0;
  for (Eigen::Index i = 0; i < mn; ++i) {
    const double a = g.data[i];
    const double b = g.data[mn + i];
    total += huber_scalar(std::sqrt(a * a + b * b), eps);
  }
  return total;
}

namespace detail {

// Photon data term per pixel, extended to a C^1 quadratic for u < 0:
//   phi(u) = u + b - u0 + u0 log(u0 / (u + b))           for u >= 0,
//   phi(u) = phi(0) + phi'(0) u + phi''(0) u^2 / 2       for u < 0,
// with phi'(0) = 1 - u0/b and phi''(0) = u0/b^2. The public entry points
// require u0 > 0; the u0 == 0 branch here is the defensive 0 log 0 limit.
double kl_phi(double u, double u0, double b) {
  if (u >= 0) {
    const double base = u + b - u0;
    return u0 > 0 ? base + u0 * std::log(u0 / (u + b)) : base;
  }
  const double phi0 = u0 > 0 ? b - u0 + u0 * std::log(u0 / b) : b;
  return phi0 + (1.0 - u0 / b) * u + 0.5 * (u0 / (b * b)) * u * u;
}

double kl_dphi(double u, double u0, double b) {
  if (u >= 0) return 1.0 - u0 / (u + b);
  return (1.0 - u0 / b) + (u0 / (b * b)) * u;
}

}  // namespace detail

namespace {

void validate_kl_inputs(const ScalarField& u, const ScalarField& u0,
                        const ScalarField& b) {
  validate_scalar(u);
  validate_scalar(u0);
  validate_scalar(b);
  if (u0.rows != u.rows || u0.cols != u.cols || b.rows != u.rows ||
      b.cols != u.cols)
    fail(ErrorCode::invalid_argument, "photon data term: grid mismatch");
  if (!(u0.data.array() > 0).all())
    fail(ErrorCode::domain_error, "photon data term: counts must be > 0");
  if (!(b.data.array() > 0).all())
    fail(ErrorCode::domain_error, "photon data term: background must be > 0");
}

}  // namespace

double kl_value(const ScalarField& u, const ScalarField& u0,
                const ScalarField& b) {
  validate_kl_inputs(u, u0, b);
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.data.size(); ++i)
    total += detail::kl_phi(u.data[i], u0.data[i], b.data[i]);
  return total;
}

ScalarField kl_grad(const ScalarField& u, const ScalarField& u0,
                    const ScalarField& b) {
  validate_kl_inputs(u, u0, b);
  ScalarField g(u.rows, u.cols);
  for (Eigen::Index i = 0; i < u.data.size(); ++i)
    g.data[i] = detail::kl_dphi(u.data[i], u0.data[i], b.data[i]);
  return g;
}

double kl_lipschitz(const ScalarField& u0, const ScalarField& b) {
  validate_scalar(u0);
  validate_scalar(b);
  if (u0.rows != b.rows || u0.cols != b.cols)
    fail(ErrorCode::invalid_argument, "photon data term: grid mismatch");
  if (!(u0.data.array() > 0).all())
    fail(ErrorCode::domain_error, "photon data term: counts must be > 0");
  if (!(b.data.array() > 0).all())
    fail(ErrorCode::domain_error, "photon data term: background must be > 0");
  return (u0.data.array() / (b.data.array() * b.data.array())).maxCoeff();
}

ScalarField tv_prox(const ScalarField& z, double sigma, int inner_iters) {
  validate_scalar(z);
  if (!(sigma >= 0))
    fail(ErrorCode::invalid_argument, "tv_prox: sigma must be non-negative");
  if (inner_iters < 1)
    fail(ErrorCode::invalid_argument, "tv_prox: inner_iters must be >= 1");
  const Eigen::Index m = z.rows, n = z.cols;
  // Accelerated projected gradient on the dual problem
  //   min_{|p| <= sigma pixelwise} |div_adjoint(p) - z|^2 / 2,
  // step 1/8 (the squared operator norm bound), dual started at zero.
  VectorField p_cur(m, n);
  VectorField y = p_cur;
  double t = 1.0;
  for (int it = 0; it < inner_iters; ++it) {
    ScalarField r = div_adjoint(y);
    r.data -= z.data;
    const VectorField g = grad_forward(r);
    VectorField p_next(m, n, y.data - 0.125 * g.data);
    p_next = project_l2inf_ball(p_next, sigma);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y.data = p_next.data + ((t - 1.0) / t_next) * (p_next.data - p_cur.data);
    p_cur = std::move(p_next);
    t = t_next;
  }
  ScalarField out(m, n);
  out.data = z.data - div_adjoint(p_cur).data;
  return out;
}

}  // namespace gfista
