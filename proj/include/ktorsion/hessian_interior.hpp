#pragma once

// Dirichlet problem S_k(D^2 u) = 1 in Omega, u = 0 on the boundary.
// Sign convention: u <= 0 in Omega (u convex), so on a ball
// u = c_{n,k} (|y|^2 - R^2) with 2 c_{n,k} = binom(n,k)^{-1/k} and the
// boundary gradient points along the outward normal.
//
// Backends:
//   mfs-poisson      k=1, any convex body. u = |y-y0|^2/(2n) + w + const with
//                    w a combination of fundamental solutions centred on a
//                    dilated copy of the boundary (point charges for n=2,
//                    rings of point charges sharing one coefficient for the
//                    axisymmetric n=3 case). Coefficients solve a Tikhonov-
//                    regularized least squares enforcing u = 0 at the nodes.
//   ball-closed-form k >= 2, balls only (the general k >= 2 solver is an
//                    extension point behind this same interface).

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <optional>
#include <vector>

#include "ktorsion/quadrature.hpp"
#include "ktorsion/sphere_geometry.hpp"

namespace ktorsion {

struct MfsConfig {
  double charge_dilation = 1.8;   // charges at y0 + dilation*(X_i - y0)
  int n_charges = 0;              // 0 = auto: n_collocation / oversampling
  double regularization = 1e-12;  // Tikhonov, scaled by (largest singular value)^2
  double oversampling = 2.0;      // collocation-to-charge ratio
  int ring_resolution = 48;       // azimuthal copies per ring (n=3)
  double condition_limit = 1e15;  // post-regularization condition threshold
};

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r *= double(n - k + i) / double(i);
  return r;
}

/// 2 c_{n,k} = binom(n,k)^{-1/k}; S_k(2c I) = binom(n,k) (2c)^k = 1.
inline double ball_gradient_slope(int n, int k) {
  return std::pow(binomial(n, k), -1.0 / k);
}

/// Solution of the interior problem, evaluable anywhere in Omega.
class InteriorSolution {
 public:
  enum class Backend { mfs_poisson, ball_closed_form };

  Backend backend() const { return backend_; }
  int dim() const { return dim_; }
  int order() const { return k_; }
  const char* backend_name() const {
    return backend_ == Backend::mfs_poisson ? "mfs-poisson" : "ball-closed-form";
  }

  double value(const Vec3& y) const {
    if (backend_ == Backend::ball_closed_form)
      return ball_c_ * (y.squaredNorm() - ball_r_ * ball_r_);
    double u = (y - centroid_).squaredNorm() / (2.0 * dim_) + offset_;
    for (std::size_t j = 0; j < charges_.size(); ++j)
      u += charge_coeff_[j] * kernel(y - charges_[j]);
    return u;
  }

  Vec3 gradient(const Vec3& y) const {
    if (backend_ == Backend::ball_closed_form) return 2.0 * ball_c_ * y;
    Vec3 g = (y - centroid_) / double(dim_);
    if (dim_ == 2) g.z() = 0.0;
    for (std::size_t j = 0; j < charges_.size(); ++j)
      g += charge_coeff_[j] * kernel_grad(y - charges_[j]);
    return g;
  }

  Eigen::Matrix3d hessian(const Vec3& y) const {
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    if (backend_ == Backend::ball_closed_form) {
      for (int i = 0; i < dim_; ++i) h(i, i) = 2.0 * ball_c_;
      if (dim_ == 2) h(2, 2) = 0.0;
      return h;
    }
    for (int i = 0; i < dim_; ++i) h(i, i) = 1.0 / dim_;
    for (std::size_t j = 0; j < charges_.size(); ++j)
      h += charge_coeff_[j] * kernel_hess(y - charges_[j]);
    return h;
  }

  /// |Du| trace at the body's boundary nodes. Present after interior_solve
  /// or boundary_gradient(); empty for a bare ball_solution.
  const Array& boundary_gradient() const { return boundary_gradient_; }

  double boundary_residual() const { return boundary_residual_; }
  double condition_estimate() const { return condition_; }
  double residual_report() const { return residual_report_; }
  const Vec3& centroid() const { return centroid_; }
  const std::vector<Vec3>& charges() const { return charges_; }
  const Eigen::VectorXd& charge_coefficients() const { return charge_coeff_; }
  double offset() const { return offset_; }
  double ball_radius() const { return ball_r_; }
  double ball_curvature() const { return ball_c_; }

  static InteriorSolution ball(int n, int k, double radius) {
    if (n < 2 || n > 3 || k < 1 || k > n - 1 || radius <= 0.0)
      throw CapabilityError("ball_solution: need n in {2,3}, 1 <= k <= n-1, R > 0");
    InteriorSolution s;
    s.backend_ = Backend::ball_closed_form;
    s.dim_ = n;
    s.k_ = k;
    s.ball_r_ = radius;
    s.ball_c_ = 0.5 * ball_gradient_slope(n, k);
    return s;
  }

  // used by the solver and by snapshot deserialization
  static InteriorSolution mfs(int n, Vec3 centroid, std::vector<Vec3> charges,
                              Eigen::VectorXd coeff, double offset) {
    InteriorSolution s;
    s.backend_ = Backend::mfs_poisson;
    s.dim_ = n;
    s.k_ = 1;
    s.centroid_ = std::move(centroid);
    s.charges_ = std::move(charges);
    s.charge_coeff_ = std::move(coeff);
    s.offset_ = offset;
    return s;
  }

  void set_diagnostics(double boundary_residual, double condition) {
    boundary_residual_ = boundary_residual;
    condition_ = condition;
  }
  void set_boundary_gradient(Array g) { boundary_gradient_ = std::move(g); }
  void set_residual_report(double r) { residual_report_ = r; }

 private:
  double kernel(const Vec3& d) const {
    if (dim_ == 2) return std::log(d.norm());
    return -1.0 / (4.0 * pi * d.norm());
  }
  Vec3 kernel_grad(const Vec3& d) const {
    if (dim_ == 2) return d / d.squaredNorm();
    const double r = d.norm();
    return d / (4.0 * pi * r * r * r);
  }
  Eigen::Matrix3d kernel_hess(const Vec3& d) const {
    Eigen::Matrix3d h;
    if (dim_ == 2) {
      const double r2 = d.squaredNorm();
      h = Eigen::Matrix3d::Identity() / r2 - 2.0 * (d * d.transpose()) / (r2 * r2);
      h(2, 2) = 0.0;
    } else {
      const double r = d.norm();
      const double r3 = r * r * r, r5 = r3 * r * r;
      h = Eigen::Matrix3d::Identity() / (4.0 * pi * r3) -
          3.0 * (d * d.transpose()) / (4.0 * pi * r5);
    }
    return h;
  }

  Backend backend_ = Backend::ball_closed_form;
  int dim_ = 2, k_ = 1;
  double ball_c_ = 0.0, ball_r_ = 0.0;
  Vec3 centroid_ = Vec3::Zero();
  std::vector<Vec3> charges_;
  Eigen::VectorXd charge_coeff_;
  double offset_ = 0.0;
  double boundary_residual_ = 0.0;
  double condition_ = 1.0;
  double residual_report_ = 0.0;
  Array boundary_gradient_;
};

inline InteriorSolution ball_solution(int n, int k, double radius) {
  return InteriorSolution::ball(n, k, radius);
}

/// S_k(D^2 u) for the ambient dimension encoded in the solution.
inline double hessian_sk(const InteriorSolution& sol, const Vec3& y) {
  const Eigen::Matrix3d h = sol.hessian(y);
  if (sol.dim() == 2) {
    if (sol.order() == 1) return h(0, 0) + h(1, 1);
    return h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
  }
  if (sol.order() == 1) return h.trace();
  if (sol.order() == 2)
    return h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0) + h(0, 0) * h(2, 2) -
           h(0, 2) * h(2, 0) + h(1, 1) * h(2, 2) - h(1, 2) * h(2, 1);
  return h.determinant();
}

namespace detail {

/// Outer support test against the sampled body. Points failing it are
/// certainly outside Omega at grid resolution.
inline bool inside_body(const SupportField& body, const Vec3& y, double slack = 0.0) {
  const auto& g = *body.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double dot;
    if (g.dim == 2)
      dot = y.x() * g.directions[i].x() + y.y() * g.directions[i].y();
    else {
      // axisymmetric support test: rotate y into the meridian plane
      const double r = std::hypot(y.x(), y.y());
      dot = r * g.directions[i].x() + y.z() * g.directions[i].z();
    }
    if (dot > body.values[i] + slack) return false;
  }
  return true;
}

}  // namespace detail

/// max |S_k(D^2 u) - 1| over a sample cloud of strictly interior points.
/// For the harmonic-basis MFS this is a machine-consistency check.
inline double hessian_residual(const InteriorSolution& sol, const SupportField& body,
                               const std::vector<Vec3>& samples) {
  const double scale = body.max();
  double worst = 0.0;
  for (const auto& y : samples) {
    if (!detail::inside_body(body, y, 1e-12 * scale))
      throw Error("hessian_residual: sample point outside the body");
    worst = std::max(worst, std::abs(hessian_sk(sol, y) - 1.0));
  }
  return worst;
}

/// Per-node |Du| at the boundary points of `body`. With the u <= 0 convention
/// the normal derivative Du . x is positive; it must agree with the gradient
/// norm (the tangential component vanishes on the level set).
inline Array boundary_gradient(const InteriorSolution& sol, const SupportField& body,
                               DerivativeScheme scheme = DerivativeScheme::fd4) {
  const auto pts = boundary_embedding(body, scheme);
  Array out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 du = sol.gradient(pts[i]);
    const double normal = du.dot(body.grid->directions[i]);
    if (!(normal > 0.0))
      throw SolverError("boundary_gradient: non-positive normal derivative at node " +
                        std::to_string(i) + " (failed solve)");
    const double norm = du.norm();
    if (std::abs(norm - normal) > 1e-6 * norm)
      throw SolverError(
          "boundary_gradient: tangential component too large at node " +
          std::to_string(i) + " (|Du|=" + std::to_string(norm) +
          ", Du.x=" + std::to_string(normal) + ")");
    out[i] = normal;
  }
  return out;
}

/// Poisson solve (k=1) by the method of fundamental solutions.
inline InteriorSolution solve_poisson_mfs(const SupportField& body, const MfsConfig& cfg,
                                          DerivativeScheme scheme = DerivativeScheme::fd4) {
  const auto& g = *body.grid;
  const int n = g.dim;
  if (cfg.charge_dilation < 1.2)
    throw SolverError("mfs: charge_dilation must be >= 1.2");
  if (cfg.oversampling < 1.0)
    throw SolverError("mfs: oversampling must be >= 1");
  if (!certified_convex(body, scheme))
    throw ConvexityError("mfs: body is not convex-certified", 0,
                         convexity_margin(body, scheme));

  const auto boundary = boundary_embedding(body, scheme);
  const int n_col = static_cast<int>(boundary.size());
  int n_basis = cfg.n_charges > 0
                    ? cfg.n_charges
                    : std::max(4, static_cast<int>(n_col / cfg.oversampling));
  if (n_basis > n_col)
    throw SolverError("mfs: n_charges (" + std::to_string(n_basis) +
                      ") exceeds collocation count (" + std::to_string(n_col) + ")");

  Vec3 y0 = Vec3::Zero();
  for (const auto& p : boundary) y0 += p;
  y0 /= double(n_col);
  if (n == 3) y0.x() = y0.y() = 0.0;  // axisymmetric centroid sits on the axis

  // charge sites: dilated boundary subset; for n=3 each meridian site becomes
  // a ring of ring_resolution point charges sharing one coefficient
  std::vector<Vec3> sites(n_basis);
  for (int j = 0; j < n_basis; ++j) {
    const int idx = static_cast<int>((static_cast<long>(j) * n_col) / n_basis);
    sites[j] = y0 + cfg.charge_dilation * (boundary[idx] - y0);
  }
  const int ring = (n == 3) ? std::max(8, cfg.ring_resolution) : 1;
  std::vector<Vec3> charges;
  charges.reserve(static_cast<std::size_t>(n_basis) * ring);
  for (const auto& s : sites) {
    if (n == 2) {
      charges.push_back(s);
    } else {
      const double rho = std::hypot(s.x(), s.y());
      for (int l = 0; l < ring; ++l) {
        const double phi = 2.0 * pi * l / ring;
        charges.emplace_back(rho * std::cos(phi), rho * std::sin(phi), s.z());
      }
    }
  }

  auto kernel = [&](const Vec3& d) {
    return n == 2 ? std::log(d.norm()) : -1.0 / (4.0 * pi * d.norm());
  };

  // collocation: u(X_i) = 0, with u = |y-y0|^2/(2n) + sum c_j psi_j + c0
  Eigen::MatrixXd A(n_col, n_basis + 1);
  Eigen::VectorXd b(n_col);
  for (int i = 0; i < n_col; ++i) {
    for (int j = 0; j < n_basis; ++j) {
      double v = 0.0;
      for (int l = 0; l < ring; ++l) v += kernel(boundary[i] - charges[j * ring + l]);
      A(i, j) = v;
    }
    A(i, n_basis) = 1.0;
    b(i) = -(boundary[i] - y0).squaredNorm() / (2.0 * n);
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double lambda = cfg.regularization * smax * smax;
  const double smin = sv(sv.size() - 1);
  const double cond_eff =
      std::sqrt((smax * smax + lambda) / (smin * smin + lambda));
  if (cond_eff > cfg.condition_limit)
    throw SolverError(
        "mfs: collocation system too ill-conditioned (effective condition " +
        std::to_string(cond_eff) +
        "); increase regularization or reduce n_charges");
  Eigen::VectorXd ub = svd.matrixU().transpose() * b;
  Eigen::VectorXd filtered(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    filtered(i) = sv(i) * ub(i) / (sv(i) * sv(i) + lambda);
  Eigen::VectorXd coeff = svd.matrixV() * filtered;

  const double offset = coeff(n_basis);
  Eigen::VectorXd per_charge(charges.size());
  for (int j = 0; j < n_basis; ++j)
    for (int l = 0; l < ring; ++l) per_charge(j * ring + l) = coeff(j);

  auto sol = InteriorSolution::mfs(n, y0, std::move(charges), std::move(per_charge),
                                   offset);
  sol.set_diagnostics((A * coeff - b).cwiseAbs().maxCoeff(), cond_eff);
  return sol;
}

/// Empirical comparison bound from touching-ball comparison: the boundary
/// gradient of any solve must lie within the closed-form gradients of the
/// rolling balls, [2c r (1-tol), 2c R (1+tol)] with r = min(lambda_min, min h)
/// and R = max(lambda_max, max rho).
inline void check_gradient_bounds(const Array& grad, const SupportField& body,
                                  const CurvatureData& curv, int k,
                                  DerivativeScheme scheme = DerivativeScheme::fd4,
                                  double tol = 1e-3) {
  const double slope = ball_gradient_slope(body.grid->dim, k);
  const Array rho = radial_from_support(body, scheme);
  const double r_low = std::min(curv.min_eig, body.min());
  const double r_up = std::max(curv.max_eig, rho.maxCoeff());
  const double lo = slope * r_low * (1.0 - tol);
  const double hi = slope * r_up * (1.0 + tol);
  for (Eigen::Index i = 0; i < grad.size(); ++i)
    if (grad[i] < lo || grad[i] > hi)
      throw SolverError("boundary gradient " + std::to_string(grad[i]) +
                        " at node " + std::to_string(i) +
                        " escapes the comparison bound [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
}

/// Backend dispatch. k=1 goes to the MFS solver for any convex body;
/// k >= 2 requires a ball (relative sup deviation of h below 1e-8) and uses
/// the closed form. Populates the boundary trace and the residual report.
inline InteriorSolution interior_solve(const SupportField& body, int k,
                                       const MfsConfig& cfg = {},
                                       DerivativeScheme scheme = DerivativeScheme::fd4) {
  const int n = body.grid->dim;
  if (n != 2 && n != 3)
    throw CapabilityError("interior_solve: dimension must be 2 or 3");
  if (k < 1 || k > n - 1)
    throw CapabilityError("interior_solve: need 1 <= k <= n-1");

  InteriorSolution sol = InteriorSolution::ball(2, 1, 1.0);
  if (k == 1) {
    sol = solve_poisson_mfs(body, cfg, scheme);
  } else {
    const double mean = body.values.mean();
    const double dev = (body.values - mean).abs().maxCoeff() / mean;
    if (dev > 1e-8)
      throw CapabilityError(
          "interior_solve: k >= 2 is only available for balls (relative "
          "deviation " +
          std::to_string(dev) +
          "); a general fully nonlinear backend can be added behind "
          "InteriorSolution without touching callers");
    sol = InteriorSolution::ball(n, k, mean);
  }

  sol.set_boundary_gradient(boundary_gradient(sol, body, scheme));
  const auto curv = curvature_data(body, k, scheme);
  check_gradient_bounds(sol.boundary_gradient(), body, curv, k, scheme);
  const auto cloud = interior_sample_cloud(boundary_embedding(body, scheme));
  sol.set_residual_report(hessian_residual(sol, body, cloud));
  return sol;
}

}  // namespace ktorsion
