#pragma once

// Subcommand drivers shared by the CLI and the tests. Artifacts are written
// atomically into the configured output directory. Module errors map to
// distinct exit codes:
//   0 success          5 solver failure
//   2 configuration    6 stiffness / non-convergence (partial results kept)
//   3 capability       7 verification failure
//   4 convexity        8 i/o
//   9 unexpected

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "ktorsion/config.hpp"
#include "ktorsion/variational_lab.hpp"

namespace ktorsion {

enum class Subcommand { solve_interior, flow, check_hadamard, verify, functionals };

inline Subcommand parse_subcommand(const std::string& s) {
  if (s == "solve-interior") return Subcommand::solve_interior;
  if (s == "flow") return Subcommand::flow;
  if (s == "check-hadamard") return Subcommand::check_hadamard;
  if (s == "verify") return Subcommand::verify;
  if (s == "functionals") return Subcommand::functionals;
  throw ConfigError("unknown subcommand '" + s +
                    "' (expected solve-interior|flow|check-hadamard|verify|functionals)");
}

namespace detail {

inline json identity_to_json(const IdentityReport& r) {
  return json{{"identity", r.name},   {"formula", r.formula}, {"params", r.params},
              {"lhs", r.lhs},         {"rhs", r.rhs},         {"relerr", r.relerr},
              {"pass", r.pass}};
}

inline std::string snapshot_name(long index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%06ld.json", index);
  return buf;
}

inline std::string curve_name(long index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "curve_%06ld.csv", index);
  return buf;
}

}  // namespace detail

/// Execute one subcommand; returns the process exit code.
inline int run_subcommand(const RunConfig& cfg, Subcommand sub, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  const auto pipe = cfg.pipeline();

  if (sub == Subcommand::verify) {
    const auto battery = verify_battery(pipe);
    json j = json::array();
    bool all_pass = true;
    for (const auto& r : battery) {
      j.push_back(detail::identity_to_json(r));
      all_pass = all_pass && r.pass;
      if (!cfg.quiet)
        log << (r.pass ? "[pass] " : "[FAIL] ") << r.name << "  relerr=" << r.relerr
            << "\n";
    }
    write_atomic(out / "verify_report.json", j.dump(2) + "\n");
    return all_pass ? 0 : 7;
  }

  BuiltProblem built = build_problem(cfg);

  switch (sub) {
    case Subcommand::solve_interior:
    case Subcommand::functionals: {
      auto ev = evaluate_state(built.h0, built.f, cfg.order, pipe);
      emit_timeseries(out / "report.csv", {ev.report});
      if (sub == Subcommand::solve_interior)
        write_atomic(out / "solution.json", solution_to_json(ev.sol).dump(2) + "\n");
      if (!cfg.quiet)
        log << "T_tilde = " << format17(ev.report.t_boundary)
            << "  pohozaev_relerr = " << ev.report.pohozaev_relerr
            << "  boundary_residual = " << ev.sol.boundary_residual() << "\n";
      return 0;
    }

    case Subcommand::flow: {
      Trajectory traj;
      bool stiff = false;
      std::string stiff_msg;
      try {
        traj = run(built.h0, built.f, cfg.order, cfg.flow, pipe, cfg.snapshot_stride);
      } catch (const StiffnessError& e) {
        stiff = true;
        stiff_msg = e.what();
      }
      if (stiff) {
        log << "stiffness failure: " << stiff_msg << "\n";
        return 6;
      }
      emit_timeseries(out / "timeseries.csv", traj.rows);
      long idx = 0;
      for (const auto& [t, snap] : traj.snapshots) {
        json j = support_to_json(snap);
        j["t"] = t;
        write_atomic(out / detail::snapshot_name(idx), j.dump(2) + "\n");
        emit_curve(out / detail::curve_name(idx), snap, cfg.scheme);
        ++idx;
      }
      json final_j = support_to_json(traj.terminal);
      final_j["t"] = traj.rows.back().t;
      final_j["tau"] = traj.tau;
      final_j["eta"] = traj.eta;
      final_j["residual"] = traj.residual;
      final_j["converged"] = traj.converged;
      write_atomic(out / "final.json", final_j.dump(2) + "\n");
      emit_curve(out / "curve_final.csv", traj.terminal, cfg.scheme);
      for (const auto& a : traj.alerts) std::cerr << "bound monitor: " << a << "\n";
      if (!cfg.quiet)
        log << (traj.converged ? "converged" : "NOT converged") << " after "
            << traj.steps << " steps, residual = " << traj.residual
            << ", tau = " << format17(traj.tau) << "\n";
      return traj.converged ? 0 : 6;
    }

    case Subcommand::check_hadamard: {
      SupportField dir(built.grid,
                       detail::fourier_field(*built.grid, cfg.hadamard_direction));
      json j = json::array();
      bool all_pass = true;
      for (const double scale : {100.0, 10.0, 1.0}) {
        const double eps = cfg.hadamard_eps * scale;
        auto rep = hadamard_fd_check(built.h0, dir, eps, cfg.order, pipe);
        rep.check(scale == 1.0 ? 1e-3 : 1e-1);
        all_pass = all_pass && rep.pass;
        j.push_back(detail::identity_to_json(rep));
        if (!cfg.quiet)
          log << "eps=" << eps << "  lhs=" << rep.lhs << "  rhs=" << rep.rhs
              << "  relerr=" << rep.relerr << "\n";
      }
      write_atomic(out / "hadamard.json", j.dump(2) + "\n");
      return all_pass ? 0 : 7;
    }

    default:
      return 9;
  }
}

/// Top-level wrapper: map typed errors onto exit codes.
inline int orchestrate(const RunConfig& cfg, Subcommand sub,
                       std::ostream& log = std::cout) {
  try {
    return run_subcommand(cfg, sub, log);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "capability error: " << e.what() << "\n";
    return 3;
  } catch (const ConvexityError& e) {
    std::cerr << "convexity error: " << e.what() << "\n";
    return 4;
  } catch (const StiffnessError& e) {
    std::cerr << "stiffness error: " << e.what() << "\n";
    return 6;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 5;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 8;
  } catch (const SizingError& e) {
    std::cerr << "sizing error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 9;
  }
}

}  // namespace ktorsion
