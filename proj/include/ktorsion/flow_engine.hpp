#pragma once

// Normalized curvature flow dh/dt = (h/f) |Du|^{k+1} sigma_{n-k} - eta(t) h.
// eta is chosen so the f-weighted mean of the right-hand side vanishes, which
// keeps Phi = int h f dx constant and makes T~_k non-decreasing. Stationary
// states satisfy f = tau |Du|^{k+1} sigma_{n-k} with tau = 1/eta.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "ktorsion/functionals.hpp"

namespace ktorsion {

enum class Integrator { euler, rk2 };

struct FlowConfig {
  double dt_init = 0.0;      // 0 = auto: 1e-3 * min_i |h_i / rhs_i|
  double dt_min = 1e-12;
  double dt_max = 1e-3;
  double safety = 1e-2;      // max relative change of h per step
  double residual_tol = 1e-6;
  long max_steps = 200000;
  Integrator integrator = Integrator::rk2;
};

struct PipelineConfig {
  MfsConfig mfs{};
  DerivativeScheme scheme = DerivativeScheme::fd4;
};

/// Everything produced by one interior solve at a state: the solution, the
/// curvature pipeline, the measure density, eta, the right-hand side, the
/// stationarity residual, and the report row.
struct StageEval {
  InteriorSolution sol = InteriorSolution::ball(2, 1, 1.0);
  CurvatureData curv;
  Array density;
  double eta = 0.0;
  Array rhs;
  double residual = 0.0;
  FunctionalReport report;
};

/// Full pipeline at a state. This is flow_rhs plus diagnostics.
inline StageEval evaluate_state(const SupportField& h, const DensityField& f, int k,
                                const PipelineConfig& pipe = {}) {
  require_same_grid(*h.grid, *f.grid, "evaluate_state");
  StageEval ev;
  ev.sol = interior_solve(h, k, pipe.mfs, pipe.scheme);
  ev.curv = curvature_data(h, k, pipe.scheme);
  ev.density = torsional_measure_density(ev.sol.boundary_gradient(), ev.curv, k);
  ev.eta = eta_normalization(h, f, ev.density);
  ev.rhs = h.values / f.values * ev.density - ev.eta * h.values;
  ev.residual = ((ev.density / ev.eta - f.values) / f.values).abs().maxCoeff();

  FunctionalReport& r = ev.report;
  r.t_boundary = torsional_rigidity_boundary(h, ev.sol.boundary_gradient(), ev.curv, k);
  r.t_volume = torsional_rigidity_volume(ev.sol, h, ev.curv, k, pipe.scheme);
  r.phi = phi_functional(h, f);
  r.eta = ev.eta;
  r.pohozaev_relerr = pohozaev_consistency(r.t_volume, r.t_boundary, k);
  r.min_h = h.min();
  r.max_h = h.max();
  r.min_lambda = ev.curv.min_eig;
  r.max_lambda = ev.curv.max_eig;
  r.residual = ev.residual;
  return ev;
}

/// Right-hand side of the flow at a state.
inline Array flow_rhs(const SupportField& h, const DensityField& f, int k,
                      const PipelineConfig& pipe = {}) {
  return evaluate_state(h, f, k, pipe).rhs;
}

struct FlowState {
  double t = 0.0;
  SupportField h;
  StageEval eval;
  long step_index = 0;
};

inline FlowState initial_state(SupportField h0, const DensityField& f, int k,
                               const PipelineConfig& pipe = {}) {
  FlowState s;
  s.h = std::move(h0);
  s.eval = evaluate_state(s.h, f, k, pipe);
  s.eval.report.t = 0.0;
  return s;
}

namespace detail {

inline double target_dt(const FlowState& s, const FlowConfig& cfg) {
  const double vel = (s.eval.rhs / s.h.values).abs().maxCoeff();
  double dt = (vel > 0.0) ? cfg.safety / vel : cfg.dt_max;
  return std::clamp(dt, cfg.dt_min, cfg.dt_max);
}

inline bool admissible(const SupportField& h, DerivativeScheme scheme) {
  return h.min() > 0.0 && certified_convex(h, scheme);
}

}  // namespace detail

/// Advance one accepted step. dt adapts to the safety cap; a trial state that
/// loses convexity or positivity halves dt and retries down to dt_min. The
/// accepted state is re-solved, so its diagnostics are fresh.
inline FlowState step(const FlowState& state, const DensityField& f, int k,
                      const FlowConfig& cfg, const PipelineConfig& pipe = {}) {
  double dt = detail::target_dt(state, cfg);
  while (true) {
    SupportField trial;
    bool ok = true;
    if (cfg.integrator == Integrator::euler) {
      trial = SupportField(state.h.grid, state.h.values + dt * state.eval.rhs);
      ok = detail::admissible(trial, pipe.scheme);
    } else {
      SupportField predictor(state.h.grid, state.h.values + dt * state.eval.rhs);
      if (detail::admissible(predictor, pipe.scheme)) {
        StageEval stage2 = evaluate_state(predictor, f, k, pipe);
        trial = SupportField(state.h.grid,
                             state.h.values + 0.5 * dt * (state.eval.rhs + stage2.rhs));
        ok = detail::admissible(trial, pipe.scheme);
      } else {
        ok = false;
      }
    }
    if (ok) {
      FlowState next;
      next.t = state.t + dt;
      next.h = std::move(trial);
      next.eval = evaluate_state(next.h, f, k, pipe);
      next.step_index = state.step_index + 1;
      next.eval.report.t = next.t;
      return next;
    }
    dt *= 0.5;
    if (dt < cfg.dt_min)
      throw StiffnessError(
          "flow step: dt underflowed dt_min while restoring admissibility "
          "(t=" + std::to_string(state.t) + ", last margin " +
              std::to_string(convexity_margin(state.h, pipe.scheme)) + ")",
          dt, state.t);
  }
}

struct Trajectory {
  std::vector<FunctionalReport> rows;    // one per accepted state, t=0 first
  std::vector<std::pair<double, SupportField>> snapshots;
  SupportField terminal;
  double tau = 0.0;   // 1/eta at termination
  double eta = 0.0;
  double residual = 0.0;
  bool converged = false;
  long steps = 0;
  std::vector<std::string> alerts;  // empirical C0/C2 bound monitor
};

/// Diagnostics row for a state plus bound-monitor alerts relative to the
/// initial scale.
inline void monitor_bounds(const FunctionalReport& row, double initial_scale,
                           std::vector<std::string>& alerts) {
  const double lo = 1e-3 * initial_scale;
  const double hi = 1e3 * initial_scale;
  auto flag = [&](const char* what, double v) {
    alerts.push_back(std::string(what) + " = " + std::to_string(v) +
                     " escaped [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     "] at t=" + std::to_string(row.t));
  };
  if (row.min_h < lo) flag("min h", row.min_h);
  if (row.max_h > hi) flag("max h", row.max_h);
  if (row.min_lambda < lo) flag("min lambda", row.min_lambda);
  if (row.max_lambda > hi) flag("max lambda", row.max_lambda);
}

/// Integrate until the stationarity residual max |density/eta - f| / f drops
/// below residual_tol or max_steps is exhausted (partial result flagged via
/// converged = false).
inline Trajectory run(SupportField h0, const DensityField& f, int k,
                      const FlowConfig& cfg, const PipelineConfig& pipe = {},
                      int snapshot_stride = 0) {
  if (!(cfg.dt_min > 0.0) || cfg.dt_min > cfg.dt_max)
    throw Error("flow config: need 0 < dt_min <= dt_max");
  if (cfg.dt_init > 0.0 && (cfg.dt_init < cfg.dt_min || cfg.dt_init > cfg.dt_max))
    throw Error("flow config: need dt_min <= dt_init <= dt_max");
  if (!detail::admissible(h0, pipe.scheme))
    throw ConvexityError("flow run: initial body not convex-certified", 0,
                         convexity_margin(h0, pipe.scheme));

  FlowConfig cfg_run = cfg;
  Trajectory traj;
  FlowState state = initial_state(std::move(h0), f, k, pipe);
  if (cfg.dt_init == 0.0) {
    // dimensionally consistent start: 1e-3 of the shortest h/|rhs| time scale
    const double vel = (state.eval.rhs / state.h.values).abs().maxCoeff();
    cfg_run.dt_init = (vel > 0.0) ? std::clamp(1e-3 / vel, cfg.dt_min, cfg.dt_max)
                                  : cfg.dt_max;
  }
  const double initial_scale = state.h.max();

  traj.rows.push_back(state.eval.report);
  monitor_bounds(state.eval.report, initial_scale, traj.alerts);
  if (snapshot_stride > 0) traj.snapshots.emplace_back(0.0, state.h);

  // first step honours dt_init rather than the safety target
  bool first = true;
  while (state.step_index < cfg_run.max_steps) {
    if (state.eval.residual <= cfg_run.residual_tol) {
      traj.converged = true;
      break;
    }
    FlowConfig step_cfg = cfg_run;
    if (first) {
      step_cfg.dt_max = std::min(cfg_run.dt_max, cfg_run.dt_init);
      first = false;
    }
    state = step(state, f, k, step_cfg, pipe);
    traj.rows.push_back(state.eval.report);
    monitor_bounds(state.eval.report, initial_scale, traj.alerts);
    if (snapshot_stride > 0 && state.step_index % snapshot_stride == 0)
      traj.snapshots.emplace_back(state.t, state.h);
  }
  if (!traj.converged && state.eval.residual <= cfg_run.residual_tol)
    traj.converged = true;  // max_steps landed exactly on the tolerance

  traj.terminal = state.h;
  traj.eta = state.eval.eta;
  traj.tau = 1.0 / state.eval.eta;
  traj.residual = state.eval.residual;
  traj.steps = state.step_index;
  return traj;
}

}  // namespace ktorsion
