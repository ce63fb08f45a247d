#pragma once

// Volume quadrature over a convex body given by its support function: the
// body is the cone over its boundary, y = s * X(x), s in [0,1], with
// dV = s^{n-1} h(x) det W(x) ds dx. Gauss-Legendre in s (16 points) times the
// sphere grid in x.

#include <array>
#include <utility>

#include "ktorsion/sphere_geometry.hpp"

namespace ktorsion {

struct GaussNode {
  double s, w;
};

/// 16-point Gauss-Legendre rule on [0,1].
inline const std::array<GaussNode, 16>& gauss16() {
  static const std::array<GaussNode, 16> nodes = {{
      {0.005299532504175033702, 0.01357622970587704743},
      {0.02771248846338371196, 0.03112676196932394643},
      {0.06718439880608412806, 0.0475792558412463924},
      {0.1222977958224984831, 0.06231448562776693603},
      {0.1910618777986781258, 0.07479799440828836604},
      {0.2709916111713863068, 0.08457825969750126909},
      {0.3591982246103705434, 0.09130170752246179443},
      {0.4524937450811812799, 0.09472530522753424814},
      {0.5475062549188187201, 0.09472530522753424814},
      {0.6408017753896294566, 0.09130170752246179443},
      {0.7290083888286136932, 0.08457825969750126909},
      {0.8089381222013218742, 0.07479799440828836604},
      {0.8777022041775015169, 0.06231448562776693603},
      {0.9328156011939158719, 0.0475792558412463924},
      {0.972287511536616288, 0.03112676196932394643},
      {0.9947004674958249663, 0.01357622970587704743},
  }};
  return nodes;
}

/// Integral of f over the body. `boundary` is the embedding X_i, `det_w` the
/// per-node determinant of W (surface area measure density sigma_{n-1}).
template <class F>
double volume_integral(const SupportField& body, const std::vector<Vec3>& boundary,
                       const Array& det_w, F&& f) {
  const auto& g = *body.grid;
  const int n = g.dim;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double radial = 0.0;
    for (const auto& q : gauss16()) {
      const double jac = (n == 2) ? q.s : q.s * q.s;
      radial += q.w * jac * f(Vec3(q.s * boundary[i]));
    }
    total += g.weights[i] * body.values[i] * det_w[i] * radial;
  }
  return total;
}

/// Interior sample cloud from the cone map (all points strictly inside).
inline std::vector<Vec3> interior_sample_cloud(const std::vector<Vec3>& boundary,
                                               int per_ray = 4) {
  std::vector<Vec3> pts;
  pts.reserve(boundary.size() * per_ray);
  for (const auto& X : boundary)
    for (int q = 0; q < per_ray; ++q) {
      const double s = (q + 0.5) / per_ray * 0.98;
      pts.push_back(s * X);
    }
  return pts;
}

}  // namespace ktorsion
