#pragma once

// Independent verification of the variational structure: the Hadamard
// derivative of T~_k against the torsional measure, the boundary
// Hessian-curvature identities, and trajectory audits (monotonicity of T~_k,
// invariance of Phi). Discrepancies are reported, never rescaled away.
//
// The Hessian-curvature identities are evaluated in the u <= 0 sign
// convention, where they read
//   (i)   (D^2u e_i) . e_j = |Du| d_ij / sigma_{n-k}
//   (ii)  (D^2u e_i) . x   = d_ij |Du|_j / sigma_{n-k}
//   (iii) (D^2u x) . x     = (n-k) |Du| / sigma_{n-k}
// (i) and (ii) are exact for k=1; (iii) additionally requires the tangential
// cofactor contraction to close, which happens on n=2 bodies' balls only --
// on balls the lhs/rhs ratio is binom(n-1,n-k)/(n-k), observed and logged.

#include <string>
#include <vector>

#include "ktorsion/flow_engine.hpp"

namespace ktorsion {

struct IdentityReport {
  std::string name;
  std::string formula;   // exact variant evaluated, including sign convention
  std::string params;
  double lhs = 0.0;      // scalar identity value, or worst-node lhs
  double rhs = 0.0;
  double relerr = 0.0;
  bool pass = false;

  IdentityReport& check(double tol) {
    pass = std::isfinite(relerr) && relerr <= tol;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Hadamard formula (central-difference check)

/// lhs = [T~_k(h+eps*dir) - T~_k(h-eps*dir)] / (2 eps),
/// rhs = (1/k) int dir * |Du|^{k+1} sigma_{n-k} dx on the unperturbed body.
inline IdentityReport hadamard_fd_check(const SupportField& body,
                                        const SupportField& direction, double eps,
                                        int k, const PipelineConfig& pipe = {}) {
  require_same_grid(*body.grid, *direction.grid, "hadamard_fd_check");
  auto t_tilde = [&](double s) {
    SupportField hs(body.grid, body.values + s * direction.values);
    if (!certified_convex(hs, pipe.scheme))
      throw ConvexityError("hadamard_fd_check: perturbed body lost convexity", 0,
                           convexity_margin(hs, pipe.scheme));
    const auto sol = interior_solve(hs, k, pipe.mfs, pipe.scheme);
    const auto curv = curvature_data(hs, k, pipe.scheme);
    return torsional_rigidity_boundary(hs, sol.boundary_gradient(), curv, k);
  };
  const double lhs = (t_tilde(eps) - t_tilde(-eps)) / (2.0 * eps);

  const auto sol = interior_solve(body, k, pipe.mfs, pipe.scheme);
  const auto curv = curvature_data(body, k, pipe.scheme);
  const Array density = torsional_measure_density(sol.boundary_gradient(), curv, k);
  const double rhs =
      sphere_integral(*body.grid, direction.values * density) / double(k);

  IdentityReport rep;
  rep.name = "hadamard";
  rep.formula = "dT~_k/dt|_0 = (1/k) int theta dmu_k, central difference";
  rep.params = "n=" + std::to_string(body.grid->dim) + " k=" + std::to_string(k) +
               " N=" + std::to_string(body.size()) + " eps=" + std::to_string(eps);
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.relerr = std::abs(lhs - rhs) / std::abs(rhs);
  return rep;
}

// ---------------------------------------------------------------------------
// Boundary Hessian identities

struct Lemma45Report {
  IdentityReport tangential;  // (i)
  IdentityReport mixed;       // (ii)
  IdentityReport normal;      // (iii)
};

inline Lemma45Report lemma45_identities(const SupportField& body,
                                        const InteriorSolution& sol, int k,
                                        const PipelineConfig& pipe = {}) {
  const auto& g = *body.grid;
  const int n = g.dim;
  const auto curv = curvature_data(body, k, pipe.scheme);
  const auto pts = boundary_embedding(body, pipe.scheme);
  const Array grad = boundary_gradient(sol, body, pipe.scheme);
  const Array grad_d1 = field_derivatives(g, grad, pipe.scheme).d1;

  double scale_tan = 0.0, scale_nrm = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double dmax = (n == 2) ? 1.0 : std::max(curv.d1[i], curv.d2[i]);
    scale_tan = std::max(scale_tan, grad[i] * dmax / curv.sigma[i]);
    scale_nrm = std::max(scale_nrm, (n - k) * grad[i] / curv.sigma[i]);
  }

  double worst_i = 0.0, worst_ii = 0.0, worst_iii = 0.0;
  double li = 0, ri = 0, lii = 0, rii = 0, liii = 0, riii = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double th = g.angles[i];
    const Vec3 x = g.directions[i];
    const Vec3 e1 = (n == 2) ? Vec3(-std::sin(th), std::cos(th), 0.0)
                             : Vec3(std::cos(th), 0.0, -std::sin(th));
    const Vec3 e2(0.0, 1.0, 0.0);
    const Eigen::Matrix3d H = sol.hessian(pts[i]);

    auto track = [](double lhs, double rhs, double& worst, double& wl, double& wr) {
      const double r = std::abs(lhs - rhs);
      if (r > worst) {
        worst = r;
        wl = lhs;
        wr = rhs;
      }
    };

    // (i)
    track(e1.dot(H * e1), grad[i] * curv.d1[i] / curv.sigma[i], worst_i, li, ri);
    if (n == 3) {
      track(e2.dot(H * e2), grad[i] * curv.d2[i] / curv.sigma[i], worst_i, li, ri);
      track(e1.dot(H * e2), 0.0, worst_i, li, ri);
    }
    // (ii)
    track(e1.dot(H * x), curv.d1[i] * grad_d1[i] / curv.sigma[i], worst_ii, lii, rii);
    if (n == 3) track(e2.dot(H * x), 0.0, worst_ii, lii, rii);
    // (iii)
    track(x.dot(H * x), (n - k) * grad[i] / curv.sigma[i], worst_iii, liii, riii);
  }

  const std::string params = "n=" + std::to_string(n) + " k=" + std::to_string(k) +
                             " N=" + std::to_string(g.size()) + " backend=" +
                             sol.backend_name();
  Lemma45Report rep;
  rep.tangential = {"lemma45.i", "(D2u e_i).e_j = |Du| d_ij / sigma (u<=0 sign)",
                    params, li, ri, worst_i / scale_tan, false};
  rep.mixed = {"lemma45.ii", "(D2u e_i).x = d_ij |Du|_j / sigma (u<=0 sign)",
               params, lii, rii, worst_ii / scale_tan, false};
  rep.normal = {"lemma45.iii", "(D2u x).x = (n-k) |Du| / sigma (u<=0 sign)",
                params, liii, riii, worst_iii / scale_nrm, false};
  return rep;
}

// ---------------------------------------------------------------------------
// Trajectory audits (pure functions of recorded rows)

/// min over accepted steps of Delta T~_k; pass iff >= -1e-9 * T~_k.
inline IdentityReport monotonicity_audit(const std::vector<FunctionalReport>& rows) {
  IdentityReport rep;
  rep.name = "monotonicity";
  rep.formula = "T~_k(t_{j+1}) >= T~_k(t_j) - 1e-9 T~_k(t_j)";
  rep.params = "steps=" + std::to_string(rows.size() ? rows.size() - 1 : 0);
  rep.pass = true;
  double worst = 0.0;  // most negative relative decrement
  for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
    const double rel = (rows[j + 1].t_boundary - rows[j].t_boundary) /
                       rows[j].t_boundary;
    if (rel < worst) {
      worst = rel;
      rep.lhs = rows[j + 1].t_boundary;
      rep.rhs = rows[j].t_boundary;
    }
    if (rel < -1e-9) rep.pass = false;
  }
  rep.relerr = -worst;
  return rep;
}

/// max |Phi - Phi_0| / Phi_0 over the trajectory; pass iff <= 1e-5.
inline IdentityReport phi_invariance_audit(const std::vector<FunctionalReport>& rows) {
  IdentityReport rep;
  rep.name = "phi_invariance";
  rep.formula = "max |Phi(t) - Phi(0)| / Phi(0) <= 1e-5";
  rep.params = "steps=" + std::to_string(rows.size() ? rows.size() - 1 : 0);
  if (rows.empty()) {
    rep.pass = false;
    return rep;
  }
  const double phi0 = rows.front().phi;
  double drift = 0.0;
  for (const auto& r : rows) drift = std::max(drift, std::abs(r.phi - phi0) / phi0);
  rep.lhs = phi0;
  rep.rhs = rows.back().phi;
  rep.relerr = drift;
  rep.pass = drift <= 1e-5;
  return rep;
}

// ---------------------------------------------------------------------------
// Identity battery for the `verify` subcommand

/// Closed-form T~_k of the ball: -int u = 2 c_{n,k} R^{n+2} omega_n /(n+2).
inline double ball_t_tilde(int n, int k, double radius) {
  const double slope = ball_gradient_slope(n, k);
  const double vol = (n == 2) ? pi : 4.0 * pi / 3.0;
  return slope * vol * std::pow(radius, n + 2) / (n + 2);
}

/// Full identity battery. Entries that encode a known printed-formula
/// discrepancy pass when the observed ratio matches the closed-form
/// prediction; everything else passes at its stated tolerance.
inline std::vector<IdentityReport> verify_battery(const PipelineConfig& pipe = {}) {
  std::vector<IdentityReport> out;

  // ball functional values, both routes
  for (auto [n, k] : {std::pair{2, 1}, {3, 1}, {3, 2}}) {
    auto grid = (n == 2) ? SphereGrid::circle(128) : SphereGrid::polar(64);
    auto body = SupportField::constant(grid, 1.0);
    const auto ev = evaluate_state(body, DensityField::constant(grid, 1.0), k, pipe);
    const double expected = ball_t_tilde(n, k, 1.0);
    IdentityReport rb{"ball_t_boundary", "T~_k(B_1) vs closed form",
                      "n=" + std::to_string(n) + " k=" + std::to_string(k),
                      ev.report.t_boundary, expected,
                      std::abs(ev.report.t_boundary - expected) / expected, false};
    out.push_back(rb.check(1e-6));
    const double tv = std::pow(ev.report.t_volume, 1.0 / k);
    IdentityReport rv{"ball_t_volume", "T_k(B_1)^{1/k} vs closed form",
                      "n=" + std::to_string(n) + " k=" + std::to_string(k), tv,
                      expected, std::abs(tv - expected) / expected, false};
    out.push_back(rv.check(1e-6));
  }

  // Pohozaev consistency and centre value on the ellipse
  {
    auto grid = SphereGrid::circle(256);
    auto body = ellipse_support(grid, 2.0, 1.0);
    const auto ev = evaluate_state(body, DensityField::constant(grid, 1.0), 1, pipe);
    IdentityReport rp{"pohozaev_ellipse", "|T_vol^{1/k} - T~_b|/T~_b", "a=2 b=1 N=256",
                      std::pow(ev.report.t_volume, 1.0), ev.report.t_boundary,
                      ev.report.pohozaev_relerr, false};
    out.push_back(rp.check(1e-4));
    const double u0 = ev.sol.value(Vec3::Zero());
    IdentityReport ru{"ellipse_center_value", "u(0) = -a^2 b^2 / (2(a^2+b^2))",
                      "a=2 b=1 N=256", u0, -0.4, std::abs(u0 + 0.4) / 0.4, false};
    out.push_back(ru.check(1e-6));
  }

  // Hadamard checks
  {
    auto grid = SphereGrid::circle(96);
    auto ball = SupportField::constant(grid, 1.0);
    auto unit = SupportField::constant(grid, 1.0);
    auto rep = hadamard_fd_check(ball, unit, 1e-4, 1, pipe);
    out.push_back(rep.check(1e-5));
    auto ellipse = ellipse_support(grid, 1.5, 1.0);
    SupportField dir(grid, Array(grid->size()));
    for (std::size_t i = 0; i < grid->size(); ++i)
      dir.values[i] = 1.0 + 0.2 * std::cos(grid->angles[i]);
    auto rep2 = hadamard_fd_check(ellipse, dir, 1e-4, 1, pipe);
    rep2.name = "hadamard_ellipse";
    out.push_back(rep2.check(1e-3));
  }
  {
    auto grid = SphereGrid::polar(64);
    auto ball = SupportField::constant(grid, 1.0);
    auto unit = SupportField::constant(grid, 1.0);
    auto rep = hadamard_fd_check(ball, unit, 1e-4, 2, pipe);
    rep.name = "hadamard_ball_n3k2";
    out.push_back(rep.check(1e-4));
  }

  // boundary Hessian identities
  {
    auto grid = SphereGrid::circle(256);
    auto ball = SupportField::constant(grid, 1.0);
    const auto sol = interior_solve(ball, 1, pipe.mfs, pipe.scheme);
    auto rep = lemma45_identities(ball, sol, 1, pipe);
    out.push_back(rep.tangential.check(1e-4));
    out.push_back(rep.mixed.check(1e-4));
    out.push_back(rep.normal.check(1e-4));

    auto ellipse = ellipse_support(grid, 2.0, 1.0);
    const auto sole = interior_solve(ellipse, 1, pipe.mfs, pipe.scheme);
    auto repe = lemma45_identities(ellipse, sole, 1, pipe);
    repe.tangential.name += "_ellipse";
    repe.mixed.name += "_ellipse";
    out.push_back(repe.tangential.check(1e-4));
    out.push_back(repe.mixed.check(1e-4));
    // (iii) on a non-ball body: the printed identity does not close; report
    // the observed residual as an expected discrepancy, do not hide it.
    repe.normal.name += "_ellipse_discrepancy";
    repe.normal.formula += " [printed identity does not hold off balls; reported]";
    repe.normal.pass = repe.normal.relerr > 1e-2;  // pass = discrepancy observed
    out.push_back(repe.normal);
  }
  // ball closed-form cases: (3,1) and (3,2) normal-identity ratios are
  // binom(n-1,n-k)/(n-k) = 1/2 and 2; verify the logged discrepancy exactly.
  for (auto [n, k, ratio] : {std::tuple{3, 1, 0.5}, {3, 2, 2.0}}) {
    auto grid = SphereGrid::polar(64);
    auto ball = SupportField::constant(grid, 1.0);
    const auto sol = interior_solve(ball, k, pipe.mfs, pipe.scheme);
    auto rep = lemma45_identities(ball, sol, k, pipe);
    const double expected_relerr = std::abs(ratio - 1.0);
    rep.normal.name = "lemma45.iii_ball_discrepancy";
    rep.normal.formula += " [verbatim lhs/rhs = binom(n-1,n-k)/(n-k) = " +
                          std::to_string(ratio) + " on balls; logged]";
    rep.normal.pass = std::abs(rep.normal.relerr - expected_relerr) < 1e-4;
    out.push_back(rep.normal);
  }

  // eta route consistency: eta * Phi = k(n+2) T~_k by definition
  {
    auto grid = SphereGrid::circle(128);
    auto body = ellipse_support(grid, 1.5, 1.0);
    DensityField f(grid, Array::Constant(grid->size(), 0.7));
    const auto ev = evaluate_state(body, f, 1, pipe);
    const double lhs = ev.eta * phi_functional(body, f);
    const double rhs = 1.0 * (2 + 2) * ev.report.t_boundary;
    IdentityReport rep{"eta_consistency", "eta Phi = k(n+2) T~_k", "a=1.5 b=1 f=0.7",
                       lhs, rhs, std::abs(lhs - rhs) / rhs, false};
    out.push_back(rep.check(1e-12));
  }

  // support-plane identity x.X = h
  {
    auto grid = SphereGrid::circle(128);
    auto body = ellipse_support(grid, 2.0, 1.0);
    const auto pts = boundary_embedding(body, pipe.scheme);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
      worst = std::max(worst,
                       std::abs(pts[i].dot(grid->directions[i]) - body.values[i]));
    IdentityReport rep{"support_plane", "x.X(x) = h(x)", "a=2 b=1 N=128", worst, 0.0,
                       worst / body.max(), false};
    out.push_back(rep.check(1e-12));
  }

  return out;
}

}  // namespace ktorsion
