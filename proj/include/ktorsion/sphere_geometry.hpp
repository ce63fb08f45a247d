#pragma once

// Support-function calculus on S^{n-1}: grids, derivatives, curvature radii,
// elementary symmetric functions and their cofactors, embeddings, convexity
// certification. n=2 is the full circle; n=3 is restricted to axisymmetric
// fields sampled on an open polar grid.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "ktorsion/errors.hpp"

namespace ktorsion {

using Vec3 = Eigen::Vector3d;
using Array = Eigen::ArrayXd;

inline constexpr double pi = std::numbers::pi;

enum class DerivativeScheme { fd4, spectral };

// ---------------------------------------------------------------------------
// SphereGrid

/// Discretization of S^{n-1}. n=2: uniform periodic angles theta_i = 2*pi*i/N
/// with trapezoid weights. n=3 (axisymmetric): open midpoint grid
/// theta_j = (j+1/2)*pi/M with exact spherical-band ring weights, so the
/// weights telescope to 4*pi exactly (the pole caps are part of the end bands).
struct SphereGrid {
  int dim = 2;                     // ambient dimension n, 2 or 3
  std::vector<double> angles;      // node angles
  std::vector<Vec3> directions;    // unit outward normals x_i
  std::vector<double> weights;     // quadrature weights, sum = area(S^{n-1})

  std::size_t size() const { return angles.size(); }
  double area() const { return dim == 2 ? 2.0 * pi : 4.0 * pi; }

  static std::shared_ptr<const SphereGrid> circle(int n_nodes) {
    if (n_nodes < 4)
      throw SizingError("circle grid needs at least 4 nodes, got " +
                        std::to_string(n_nodes));
    auto g = std::make_shared<SphereGrid>();
    g->dim = 2;
    g->angles.resize(n_nodes);
    g->directions.resize(n_nodes);
    g->weights.assign(n_nodes, 2.0 * pi / n_nodes);
    for (int i = 0; i < n_nodes; ++i) {
      const double th = 2.0 * pi * i / n_nodes;
      g->angles[i] = th;
      g->directions[i] = Vec3(std::cos(th), std::sin(th), 0.0);
    }
    return g;
  }

  static std::shared_ptr<const SphereGrid> polar(int n_interior) {
    if (n_interior < 4)
      throw SizingError("polar grid needs at least 4 interior nodes, got " +
                        std::to_string(n_interior));
    auto g = std::make_shared<SphereGrid>();
    g->dim = 3;
    const int m = n_interior;
    const double dth = pi / m;
    g->angles.resize(m);
    g->directions.resize(m);
    g->weights.resize(m);
    for (int j = 0; j < m; ++j) {
      const double th = (j + 0.5) * dth;
      g->angles[j] = th;
      g->directions[j] = Vec3(std::sin(th), 0.0, std::cos(th));
      // exact area of the band [j*dth, (j+1)*dth]
      g->weights[j] = 2.0 * pi * (std::cos(j * dth) - std::cos((j + 1) * dth));
    }
    return g;
  }
};

inline bool same_grid(const SphereGrid& a, const SphereGrid& b) {
  if (&a == &b) return true;
  return a.dim == b.dim && a.angles == b.angles;
}

inline void require_same_grid(const SphereGrid& a, const SphereGrid& b,
                              const char* what) {
  if (!same_grid(a, b))
    throw GridMismatchError(std::string(what) + ": fields live on different grids");
}

/// Quadrature of a nodal field over the sphere.
inline double sphere_integral(const SphereGrid& g, const Array& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g.weights[i] * v[i];
  return s;
}

// ---------------------------------------------------------------------------
// SupportField

/// Sampled support function h > 0 on a SphereGrid. The flow's state variable.
struct SupportField {
  std::shared_ptr<const SphereGrid> grid;
  Array values;

  SupportField() = default;
  SupportField(std::shared_ptr<const SphereGrid> g, Array v)
      : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<std::size_t>(values.size()) != grid->size())
      throw SizingError("support field size does not match grid");
  }

  static SupportField constant(std::shared_ptr<const SphereGrid> g, double c) {
    Array v = Array::Constant(g->size(), c);
    return SupportField(std::move(g), std::move(v));
  }

  std::size_t size() const { return grid->size(); }
  double min() const { return values.minCoeff(); }
  double max() const { return values.maxCoeff(); }
};

// ---------------------------------------------------------------------------
// Derivatives

struct DerivativeField {
  Array d1;  // dh/dtheta
  Array d2;  // d^2 h/dtheta^2
};

namespace detail {

// 4th-order periodic central differences on the circle.
inline DerivativeField fd4_periodic(const Array& v, double dth) {
  const int n = static_cast<int>(v.size());
  DerivativeField out{Array(n), Array(n)};
  auto at = [&](int i) { return v[((i % n) + n) % n]; };
  for (int i = 0; i < n; ++i) {
    const double m2 = at(i - 2), m1 = at(i - 1), p1 = at(i + 1), p2 = at(i + 2);
    out.d1[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dth);
    out.d2[i] = (-p2 + 16.0 * p1 - 30.0 * v[i] + 16.0 * m1 - m2) / (12.0 * dth * dth);
  }
  return out;
}

// Trigonometric-interpolation differentiation on the uniform periodic grid.
// Standard closed-form Fourier differentiation matrices for even or odd N.
inline DerivativeField spectral_periodic(const Array& v, int n) {
  const long double h = 2.0L * std::numbers::pi_v<long double> / n;
  DerivativeField out{Array::Zero(n), Array::Zero(n)};
  std::vector<long double> c1(n, 0.0L), c2(n, 0.0L);
  const bool even = (n % 2 == 0);
  for (int d = 1; d < n; ++d) {
    const long double sgn = (d % 2 == 0) ? 1.0L : -1.0L;
    const long double s = std::sin(d * h / 2.0L);
    if (even) {
      c1[d] = 0.5L * sgn / std::tan(d * h / 2.0L);
      c2[d] = -sgn / (2.0L * s * s);
    } else {
      c1[d] = 0.5L * sgn / s;
      c2[d] = -sgn * std::cos(d * h / 2.0L) / (2.0L * s * s);
    }
  }
  // difference form: rows of both matrices annihilate constants, so applying
  // them to (v_j - v_i) is algebraically identical and keeps the locally
  // large entries multiplied by locally small differences; extended-precision
  // accumulation holds the result near the operator's rounding floor
  for (int i = 0; i < n; ++i) {
    long double a1 = 0.0L, a2 = 0.0L;
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const int d = ((i - j) % n + n) % n;
      const long double dv =
          static_cast<long double>(v[j]) - static_cast<long double>(v[i]);
      a1 += c1[d] * dv;
      a2 += c2[d] * dv;
    }
    out.d1[i] = static_cast<double>(a1);
    out.d2[i] = static_cast<double>(a2);
  }
  return out;
}

// 4th-order differences on the open polar grid with even-reflection ghosts.
// Smooth axisymmetric fields on S^2 are even in theta about both poles, so
// the reflected ghost values are exact.
inline DerivativeField fd4_reflect(const Array& v, double dth) {
  const int n = static_cast<int>(v.size());
  DerivativeField out{Array(n), Array(n)};
  auto at = [&](int j) {
    if (j < 0) j = -j - 1;
    if (j >= n) j = 2 * n - 1 - j;
    return v[j];
  };
  for (int i = 0; i < n; ++i) {
    const double m2 = at(i - 2), m1 = at(i - 1), p1 = at(i + 1), p2 = at(i + 2);
    out.d1[i] = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dth);
    out.d2[i] = (-p2 + 16.0 * p1 - 30.0 * v[i] + 16.0 * m1 - m2) / (12.0 * dth * dth);
  }
  return out;
}

}  // namespace detail

/// First and second angular derivatives of a nodal field on the grid.
/// For n=3 the scheme switch is ignored (always fd4 with reflection ghosts).
inline DerivativeField field_derivatives(const SphereGrid& g, const Array& v,
                                         DerivativeScheme scheme = DerivativeScheme::fd4) {
  if (g.size() < 4)
    throw SizingError("derivative stencil needs at least 4 nodes");
  if (g.dim == 2) {
    if (scheme == DerivativeScheme::spectral)
      return detail::spectral_periodic(v, static_cast<int>(g.size()));
    return detail::fd4_periodic(v, 2.0 * pi / static_cast<double>(g.size()));
  }
  return detail::fd4_reflect(v, pi / static_cast<double>(g.size()));
}

inline DerivativeField support_derivatives(const SupportField& h,
                                           DerivativeScheme scheme = DerivativeScheme::fd4) {
  return field_derivatives(*h.grid, h.values, scheme);
}

// ---------------------------------------------------------------------------
// Curvature data

/// Per-node principal curvature radii (eigenvalues of W = Hess h + h I),
/// sigma_{n-k}, and the cofactor d = d sigma_{n-k} / d W. In the axisymmetric
/// frame W is diagonal, so the cofactor is stored as its two diagonal entries;
/// for n=2 the cofactor is the scalar 1.
struct CurvatureData {
  int k = 1;
  Array lambda1;          // n=2: h'' + h; n=3: h_tt + h
  Array lambda2;          // n=3 only: cot(t) h_t + h (limit value at pole nodes)
  Array sigma;            // sigma_{n-k}(W)
  Array d1, d2;           // cofactor diagonal; n=2: d1 = 1
  double min_eig = 0.0;
  double max_eig = 0.0;

  double det_w(std::size_t i) const {
    return lambda2.size() ? lambda1[i] * lambda2[i] : lambda1[i];
  }
};

namespace detail {

struct EigenPair {
  Array lambda1, lambda2;  // lambda2 empty for n=2
  double min_eig, max_eig;
  int worst_node;
};

inline EigenPair curvature_eigenvalues(const SupportField& h, DerivativeScheme scheme) {
  const auto& g = *h.grid;
  const auto d = support_derivatives(h, scheme);
  EigenPair out;
  out.lambda1 = d.d2 + h.values;
  if (g.dim == 3) {
    const int m = static_cast<int>(g.size());
    out.lambda2 = Array(m);
    for (int j = 0; j < m; ++j) {
      // L'Hopital limit at the nodes adjacent to the poles removes the 0/0
      // in cot(theta) h_theta.
      if (j == 0 || j == m - 1)
        out.lambda2[j] = d.d2[j] + h.values[j];
      else
        out.lambda2[j] = d.d1[j] / std::tan(g.angles[j]) + h.values[j];
    }
  }
  out.min_eig = out.lambda1.minCoeff();
  out.max_eig = out.lambda1.maxCoeff();
  int worst;
  out.lambda1.minCoeff(&worst);
  out.worst_node = worst;
  if (out.lambda2.size()) {
    int w2;
    const double m2 = out.lambda2.minCoeff(&w2);
    if (m2 < out.min_eig) {
      out.min_eig = m2;
      out.worst_node = w2;
    }
    out.max_eig = std::max(out.max_eig, out.lambda2.maxCoeff());
  }
  return out;
}

}  // namespace detail

/// Smallest curvature-radius eigenvalue over all nodes. Positive iff the
/// sampled body is convex at this resolution. Never throws.
inline double convexity_margin(const SupportField& h,
                               DerivativeScheme scheme = DerivativeScheme::fd4) {
  return detail::curvature_eigenvalues(h, scheme).min_eig;
}

/// Certification threshold is relative: margin > 1e-8 * max h.
inline bool certified_convex(const SupportField& h,
                             DerivativeScheme scheme = DerivativeScheme::fd4) {
  return h.min() > 0.0 &&
         convexity_margin(h, scheme) > 1e-8 * h.max();
}

inline CurvatureData curvature_data(const SupportField& h, int k,
                                    DerivativeScheme scheme = DerivativeScheme::fd4) {
  const int n = h.grid->dim;
  if (k < 1 || k > n - 1)
    throw CapabilityError("curvature_data: k must satisfy 1 <= k <= n-1, got k=" +
                          std::to_string(k) + " with n=" + std::to_string(n));
  if (h.min() <= 0.0)
    throw ConvexityError("curvature_data: support function not strictly positive", 0,
                         h.min());
  auto ev = detail::curvature_eigenvalues(h, scheme);
  if (ev.min_eig <= 0.0)
    throw ConvexityError("curvature_data: convexity lost (min eigenvalue " +
                             std::to_string(ev.min_eig) + " at node " +
                             std::to_string(ev.worst_node) + ")",
                         ev.worst_node, ev.min_eig);
  CurvatureData out;
  out.k = k;
  out.lambda1 = std::move(ev.lambda1);
  out.lambda2 = std::move(ev.lambda2);
  out.min_eig = ev.min_eig;
  out.max_eig = ev.max_eig;
  const std::size_t m = h.size();
  out.sigma = Array(m);
  if (n == 2) {
    out.sigma = out.lambda1;       // sigma_1 = lambda
    out.d1 = Array::Constant(m, 1.0);
  } else if (k == 1) {
    out.sigma = out.lambda1 * out.lambda2;  // sigma_2
    out.d1 = out.lambda2;                   // d sigma_2 / d lambda_1
    out.d2 = out.lambda1;
  } else {
    out.sigma = out.lambda1 + out.lambda2;  // sigma_1
    out.d1 = Array::Constant(m, 1.0);
    out.d2 = Array::Constant(m, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Derived geometry

/// rho_i = sqrt(h_i^2 + |grad h|_i^2), the radial function evaluated in the
/// direction of the boundary point X_i.
inline Array radial_from_support(const SupportField& h,
                                 DerivativeScheme scheme = DerivativeScheme::fd4) {
  if (h.min() <= 0.0)
    throw ConvexityError("radial_from_support: h must be positive", 0, h.min());
  const auto d = support_derivatives(h, scheme);
  Array rho = (h.values.square() + d.d1.square()).sqrt();
  // sanity: min h <= rho <= max h up to discretization slack
  if (rho.maxCoeff() > h.max() * (1.0 + 1e-3))
    throw SolverError("radial_from_support: radial function exceeds max h beyond tolerance");
  return rho;
}

/// Boundary points X_i = grad h + h x on the meridian plane (n=3) or in the
/// xy-plane (n=2). Requires convex certification.
inline std::vector<Vec3> boundary_embedding(const SupportField& h,
                                            DerivativeScheme scheme = DerivativeScheme::fd4) {
  if (!certified_convex(h, scheme))
    throw ConvexityError("boundary_embedding: body is not convex-certified", 0,
                         convexity_margin(h, scheme));
  const auto& g = *h.grid;
  const auto d = support_derivatives(h, scheme);
  std::vector<Vec3> pts(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double th = g.angles[i];
    Vec3 e_t = (g.dim == 2) ? Vec3(-std::sin(th), std::cos(th), 0.0)
                            : Vec3(std::cos(th), 0.0, -std::sin(th));
    pts[i] = d.d1[i] * e_t + h.values[i] * g.directions[i];
  }
  return pts;
}

/// Support function of an axis-aligned ellipse (n=2, semi-axes a, b) or
/// spheroid (n=3, semi-axes (a, a, b) with b along the symmetry axis).
inline SupportField ellipse_support(std::shared_ptr<const SphereGrid> grid, double a,
                                    double b) {
  Array v(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double th = grid->angles[i];
    if (grid->dim == 2)
      v[i] = std::hypot(a * std::cos(th), b * std::sin(th));
    else
      v[i] = std::hypot(a * std::sin(th), b * std::cos(th));
  }
  return SupportField(std::move(grid), std::move(v));
}

/// Pointwise Minkowski combination h + t*g. Both fields on one grid; the
/// result must still be convex-certified for the requested t.
inline SupportField minkowski_combination(const SupportField& h, const SupportField& g,
                                          double t,
                                          DerivativeScheme scheme = DerivativeScheme::fd4) {
  require_same_grid(*h.grid, *g.grid, "minkowski_combination");
  SupportField out(h.grid, h.values + t * g.values);
  if (!certified_convex(out, scheme))
    throw ConvexityError("minkowski_combination: result not convex at t=" +
                             std::to_string(t),
                         0, convexity_margin(out, scheme));
  return out;
}

}  // namespace ktorsion
