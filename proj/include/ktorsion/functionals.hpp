#pragma once

// Scalar functionals of a solved body: the torsional rigidity in its volume
// form T_k = (-int u)^k and boundary form
// T~_k = (1/(k(n+2))) int h |Du|^{k+1} sigma_{n-k} dx, the torsional measure
// density, Phi = int h f dx, and the flow normalization eta. Agreement of the
// two T forms is the Pohozaev consistency check.

#include <cstdio>
#include <string>

#include "ktorsion/hessian_interior.hpp"
#include "ktorsion/quadrature.hpp"
#include "ktorsion/sphere_geometry.hpp"

namespace ktorsion {

/// Prescribed positive data f on the grid.
struct DensityField {
  std::shared_ptr<const SphereGrid> grid;
  Array values;

  DensityField() = default;
  DensityField(std::shared_ptr<const SphereGrid> g, Array v)
      : grid(std::move(g)), values(std::move(v)) {
    if (static_cast<std::size_t>(values.size()) != grid->size())
      throw SizingError("density field size does not match grid");
    if (values.minCoeff() <= 0.0)
      throw Error("density field must be strictly positive");
  }

  static DensityField constant(std::shared_ptr<const SphereGrid> g, double c) {
    Array v = Array::Constant(g->size(), c);
    return DensityField(std::move(g), std::move(v));
  }
};

/// Density of the torsional measure against dx: |Du|^{k+1} sigma_{n-k}.
inline Array torsional_measure_density(const Array& grad, const CurvatureData& curv,
                                       int k) {
  return grad.pow(k + 1) * curv.sigma;
}

/// Boundary form of the rigidity (the canonical scalar T~_k).
inline double torsional_rigidity_boundary(const SupportField& body, const Array& grad,
                                          const CurvatureData& curv, int k) {
  if (static_cast<std::size_t>(grad.size()) != body.size())
    throw GridMismatchError("torsional_rigidity_boundary: trace/grid mismatch");
  const int n = body.grid->dim;
  const Array integrand = body.values * torsional_measure_density(grad, curv, k);
  return sphere_integral(*body.grid, integrand) / (k * (n + 2));
}

/// Volume form T_k = (-int u)^k via the cone quadrature.
inline double torsional_rigidity_volume(const InteriorSolution& sol,
                                        const SupportField& body,
                                        const CurvatureData& curv, int k,
                                        DerivativeScheme scheme = DerivativeScheme::fd4) {
  const auto boundary = boundary_embedding(body, scheme);
  Array det_w(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) det_w[i] = curv.det_w(i);
  const double integral =
      volume_integral(body, boundary, det_w, [&](const Vec3& y) { return sol.value(y); });
  if (integral >= 0.0)
    throw SolverError("torsional_rigidity_volume: int u >= 0 violates the u <= 0 "
                      "sign convention (solver sign bug)");
  return std::pow(-integral, k);
}

/// Phi = int h f dx, the flow invariant.
inline double phi_functional(const SupportField& body, const DensityField& f) {
  require_same_grid(*body.grid, *f.grid, "phi_functional");
  return sphere_integral(*body.grid, body.values * f.values);
}

/// eta = int h sigma_{n-k} |Du|^{k+1} dx / int h f dx. Also expressible as
/// k(n+2) T~_k / Phi; the two routes are the same quadrature and must agree
/// to roundoff.
inline double eta_normalization(const SupportField& body, const DensityField& f,
                                const Array& density) {
  const double phi = phi_functional(body, f);
  if (phi == 0.0) throw Error("eta_normalization: Phi vanishes");
  const double num = sphere_integral(*body.grid, body.values * density);
  const double eta = num / phi;
  return eta;
}

/// |T_volume^{1/k} - T_boundary| / T_boundary.
inline double pohozaev_consistency(double t_volume, double t_boundary, int k) {
  return std::abs(std::pow(t_volume, 1.0 / k) - t_boundary) / t_boundary;
}

/// One row of the diagnostic time series.
struct FunctionalReport {
  double t = 0.0;
  double t_volume = 0.0;    // T_k, volume form
  double t_boundary = 0.0;  // T~_k, boundary form
  double phi = 0.0;
  double eta = 0.0;
  double pohozaev_relerr = 0.0;
  double min_h = 0.0, max_h = 0.0;
  double min_lambda = 0.0, max_lambda = 0.0;
  double residual = 0.0;  // stationarity residual max |density/eta - f| / f

  static const char* csv_header() {
    return "t,phi,T_tilde,eta,pohozaev_relerr,min_h,max_h,min_lambda,max_lambda,"
           "residual";
  }

  std::string csv_row() const {
    char buf[512];
    auto fmt = [&](double v) {
      char tmp[40];
      std::snprintf(tmp, sizeof(tmp), "%.17g", v);
      return std::string(tmp);
    };
    std::string row = fmt(t) + "," + fmt(phi) + "," + fmt(t_boundary) + "," +
                      fmt(eta) + "," + fmt(pohozaev_relerr) + "," + fmt(min_h) + "," +
                      fmt(max_h) + "," + fmt(min_lambda) + "," + fmt(max_lambda) +
                      "," + fmt(residual);
    (void)buf;
    return row;
  }
};

}  // namespace ktorsion
