#pragma once

#include <stdexcept>
#include <string>

namespace ktorsion {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grid too small for the requested stencil.
struct SizingError : Error {
  using Error::Error;
};

/// A curvature-radius eigenvalue is non-positive (or below the certification
/// threshold). Carries the worst node and its margin.
struct ConvexityError : Error {
  int node;
  double margin;
  ConvexityError(const std::string& what, int node_, double margin_)
      : Error(what), node(node_), margin(margin_) {}
};

/// Two fields that must live on the same grid do not.
struct GridMismatchError : Error {
  using Error::Error;
};

/// Requested (k, geometry) combination is outside what the backends cover.
struct CapabilityError : Error {
  using Error::Error;
};

/// Numerical solve failed (ill-conditioning, sign violation, bound breach).
struct SolverError : Error {
  using Error::Error;
};

/// Time step underflowed dt_min while trying to keep the state admissible.
struct StiffnessError : Error {
  double dt;
  double time;
  StiffnessError(const std::string& what, double dt_, double time_)
      : Error(what), dt(dt_), time(time_) {}
};

/// Configuration file problem. line < 0 means "not tied to a line".
struct ConfigError : Error {
  int line;
  explicit ConfigError(const std::string& what, int line_ = -1)
      : Error(line_ >= 0 ? what + " (line " + std::to_string(line_) + ")" : what),
        line(line_) {}
};

/// Filesystem / serialization problem.
struct IoError : Error {
  using Error::Error;
};

}  // namespace ktorsion
