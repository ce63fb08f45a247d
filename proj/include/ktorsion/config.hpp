#pragma once

// Experiment configuration: a plain key-value document with one level of
// [section] grouping, hand-editable. Unknown keys are rejected by name;
// syntax errors carry line numbers.

#include <charconv>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ktorsion/flow_engine.hpp"
#include "ktorsion/io.hpp"

namespace ktorsion {

enum class BodyKind { ball, ellipse, fourier, snapshot };
enum class DensityKind { constant, fourier, file };

struct BodySpec {
  BodyKind kind = BodyKind::ball;
  std::vector<double> params{1.0};
  std::string path;
};

struct DensitySpec {
  DensityKind kind = DensityKind::constant;
  std::vector<double> params{1.0};
  std::string path;
};

struct RunConfig {
  int dimension = 2;
  int order = 1;   // k
  int grid = 128;  // N (n=2) or interior polar nodes (n=3)
  BodySpec body;
  DensitySpec density;
  std::uint64_t seed = 0;
  double perturb = 0.0;  // amplitude of the seeded smooth perturbation of h0
  DerivativeScheme scheme = DerivativeScheme::fd4;

  FlowConfig flow;
  MfsConfig mfs;

  double hadamard_eps = 1e-4;
  std::vector<double> hadamard_direction{1.0};  // Fourier coefficients

  std::string out_dir = "out";
  int snapshot_stride = 100;
  bool quiet = false;

  PipelineConfig pipeline() const { return PipelineConfig{mfs, scheme}; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

inline double parse_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'", line);
  }
}

inline long parse_long(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + s + "'", line);
  }
}

inline BodySpec parse_body(const std::string& value, int line) {
  auto tok = tokens(value);
  if (tok.empty()) throw ConfigError("empty body spec", line);
  BodySpec spec;
  spec.params.clear();
  if (tok[0] == "ball") {
    spec.kind = BodyKind::ball;
    if (tok.size() != 2) throw ConfigError("body ball needs one radius", line);
    spec.params.push_back(parse_double(tok[1], line));
  } else if (tok[0] == "ellipse") {
    spec.kind = BodyKind::ellipse;
    if (tok.size() != 3) throw ConfigError("body ellipse needs two semi-axes", line);
    spec.params.push_back(parse_double(tok[1], line));
    spec.params.push_back(parse_double(tok[2], line));
  } else if (tok[0] == "fourier") {
    spec.kind = BodyKind::fourier;
    if (tok.size() < 2) throw ConfigError("body fourier needs coefficients", line);
    for (std::size_t i = 1; i < tok.size(); ++i)
      spec.params.push_back(parse_double(tok[i], line));
  } else if (tok[0] == "snapshot") {
    spec.kind = BodyKind::snapshot;
    if (tok.size() != 2) throw ConfigError("body snapshot needs a path", line);
    spec.path = tok[1];
  } else {
    throw ConfigError("unknown body kind '" + tok[0] + "'", line);
  }
  return spec;
}

inline DensitySpec parse_density(const std::string& value, int line) {
  auto tok = tokens(value);
  if (tok.empty()) throw ConfigError("empty density spec", line);
  DensitySpec spec;
  spec.params.clear();
  if (tok[0] == "constant") {
    spec.kind = DensityKind::constant;
    if (tok.size() != 2) throw ConfigError("density constant needs one value", line);
    spec.params.push_back(parse_double(tok[1], line));
  } else if (tok[0] == "fourier") {
    spec.kind = DensityKind::fourier;
    if (tok.size() < 2) throw ConfigError("density fourier needs coefficients", line);
    for (std::size_t i = 1; i < tok.size(); ++i)
      spec.params.push_back(parse_double(tok[i], line));
  } else if (tok[0] == "file") {
    spec.kind = DensityKind::file;
    if (tok.size() != 2) throw ConfigError("density file needs a path", line);
    spec.path = tok[1];
  } else {
    throw ConfigError("unknown density kind '" + tok[0] + "'", line);
  }
  return spec;
}

}  // namespace detail

/// Parse and validate a configuration document. Unknown keys are rejected
/// with the offending key named; syntax errors carry the line number.
inline RunConfig parse_config(const std::string& text) {
  using detail::parse_double;
  using detail::parse_long;
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section header", line);
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "problem" && section != "flow" && section != "mfs" &&
          section != "hadamard" && section != "output")
        throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + s + "'", line);
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("expected 'key = value', got '" + s + "'", line);

    auto unknown = [&]() -> ConfigError {
      return ConfigError("unknown key '" + key + "' in section [" + section + "]",
                         line);
    };

    if (section == "problem") {
      if (key == "dimension") cfg.dimension = static_cast<int>(parse_long(value, line));
      else if (key == "order") cfg.order = static_cast<int>(parse_long(value, line));
      else if (key == "grid") cfg.grid = static_cast<int>(parse_long(value, line));
      else if (key == "body") cfg.body = detail::parse_body(value, line);
      else if (key == "density") cfg.density = detail::parse_density(value, line);
      else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, line));
      else if (key == "perturb") cfg.perturb = parse_double(value, line);
      else if (key == "derivative_scheme") {
        if (value == "fd4") cfg.scheme = DerivativeScheme::fd4;
        else if (value == "spectral") cfg.scheme = DerivativeScheme::spectral;
        else throw ConfigError("derivative_scheme must be fd4 or spectral", line);
      } else throw unknown();
    } else if (section == "flow") {
      if (key == "dt_init") cfg.flow.dt_init = parse_double(value, line);
      else if (key == "dt_min") cfg.flow.dt_min = parse_double(value, line);
      else if (key == "dt_max") cfg.flow.dt_max = parse_double(value, line);
      else if (key == "safety") cfg.flow.safety = parse_double(value, line);
      else if (key == "residual_tol") cfg.flow.residual_tol = parse_double(value, line);
      else if (key == "max_steps") cfg.flow.max_steps = parse_long(value, line);
      else if (key == "integrator") {
        if (value == "euler") cfg.flow.integrator = Integrator::euler;
        else if (value == "rk2") cfg.flow.integrator = Integrator::rk2;
        else throw ConfigError("integrator must be euler or rk2", line);
      } else throw unknown();
    } else if (section == "mfs") {
      if (key == "charge_dilation") cfg.mfs.charge_dilation = parse_double(value, line);
      else if (key == "n_charges") cfg.mfs.n_charges = static_cast<int>(parse_long(value, line));
      else if (key == "regularization") cfg.mfs.regularization = parse_double(value, line);
      else if (key == "oversampling") cfg.mfs.oversampling = parse_double(value, line);
      else if (key == "ring_resolution") cfg.mfs.ring_resolution = static_cast<int>(parse_long(value, line));
      else if (key == "condition_limit") cfg.mfs.condition_limit = parse_double(value, line);
      else throw unknown();
    } else if (section == "hadamard") {
      if (key == "eps") cfg.hadamard_eps = parse_double(value, line);
      else if (key == "direction") {
        cfg.hadamard_direction.clear();
        for (const auto& t : detail::tokens(value))
          cfg.hadamard_direction.push_back(parse_double(t, line));
      } else throw unknown();
    } else if (section == "output") {
      if (key == "dir") cfg.out_dir = value;
      else if (key == "snapshot_stride") cfg.snapshot_stride = static_cast<int>(parse_long(value, line));
      else if (key == "quiet") {
        if (value == "true" || value == "1") cfg.quiet = true;
        else if (value == "false" || value == "0") cfg.quiet = false;
        else throw ConfigError("quiet must be true or false", line);
      } else throw unknown();
    } else {
      throw ConfigError("key '" + key + "' appears before any [section]", line);
    }
  }

  // semantic validation
  if (cfg.dimension != 2 && cfg.dimension != 3)
    throw ConfigError("dimension must be 2 or 3");
  if (cfg.order < 1 || cfg.order > cfg.dimension - 1)
    throw ConfigError("order must satisfy 1 <= k <= n-1");
  if (cfg.grid < 4) throw ConfigError("grid must be at least 4");
  if (cfg.flow.dt_init < 0.0 || cfg.flow.dt_min <= 0.0 || cfg.flow.dt_max <= 0.0)
    throw ConfigError("time steps must be positive (dt_init may be 0 for auto)");
  if (cfg.flow.dt_min > cfg.flow.dt_max)
    throw ConfigError("need dt_min <= dt_max");
  if (cfg.flow.safety <= 0.0 || cfg.flow.safety >= 1.0)
    throw ConfigError("safety must lie in (0,1)");
  if (cfg.flow.residual_tol <= 0.0) throw ConfigError("residual_tol must be positive");
  if (cfg.flow.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (cfg.mfs.charge_dilation < 1.2)
    throw ConfigError("charge_dilation must be >= 1.2");
  if (cfg.mfs.oversampling < 1.0) throw ConfigError("oversampling must be >= 1");
  if (cfg.mfs.n_charges < 0) throw ConfigError("n_charges must be >= 0");
  if (cfg.snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
  if (cfg.perturb < 0.0) throw ConfigError("perturb must be >= 0");
  if (cfg.hadamard_eps <= 0.0) throw ConfigError("hadamard eps must be positive");
  if (cfg.order >= 2 && cfg.body.kind != BodyKind::ball &&
      cfg.body.kind != BodyKind::snapshot)
    throw CapabilityError(
        "k >= 2 interior solves are only available for balls; use body = ball R");
  for (std::size_t i = 0; i < cfg.body.params.size(); ++i)
    if ((cfg.body.kind == BodyKind::ball || cfg.body.kind == BodyKind::ellipse) &&
        cfg.body.params[i] <= 0.0)
      throw ConfigError("body dimensions must be positive");
  if (cfg.density.kind == DensityKind::constant && cfg.density.params[0] <= 0.0)
    throw ConfigError("constant density must be positive");
  return cfg;
}

// ---------------------------------------------------------------------------
// building the problem data

struct BuiltProblem {
  std::shared_ptr<const SphereGrid> grid;
  SupportField h0;
  DensityField f;
};

namespace detail {

inline Array fourier_field(const SphereGrid& g, const std::vector<double>& coeff) {
  Array v = Array::Constant(g.size(), coeff.empty() ? 0.0 : coeff[0]);
  if (g.dim == 2) {
    // c0 a1 b1 a2 b2 ...
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double th = g.angles[i];
      int m = 1;
      for (std::size_t j = 1; j < coeff.size(); j += 2, ++m) {
        v[i] += coeff[j] * std::cos(m * th);
        if (j + 1 < coeff.size()) v[i] += coeff[j + 1] * std::sin(m * th);
      }
    }
  } else {
    // cosine series c0 c1 c2 ... (even about both poles)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double th = g.angles[i];
      for (std::size_t m = 1; m < coeff.size(); ++m)
        v[i] += coeff[m] * std::cos(m * th);
    }
  }
  return v;
}

inline Array seeded_perturbation(const SphereGrid& g, double amplitude,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Array v = Array::Zero(g.size());
  for (int m = 2; m <= 5; ++m) {
    const double a = uni(rng) / (m * m);
    const double b = (g.dim == 2) ? uni(rng) / (m * m) : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] += a * std::cos(m * g.angles[i]);
      if (g.dim == 2) v[i] += b * std::sin(m * g.angles[i]);
    }
  }
  return amplitude * v;
}

}  // namespace detail

inline BuiltProblem build_problem(const RunConfig& cfg) {
  BuiltProblem built;
  SupportField h0;
  if (cfg.body.kind == BodyKind::snapshot) {
    h0 = support_from_json(json::parse(read_file(cfg.body.path)));
    if (h0.grid->dim != cfg.dimension)
      throw ConfigError("snapshot dimension does not match the configured dimension");
    built.grid = h0.grid;
  } else {
    built.grid = (cfg.dimension == 2) ? SphereGrid::circle(cfg.grid)
                                      : SphereGrid::polar(cfg.grid);
    Array v;
    switch (cfg.body.kind) {
      case BodyKind::ball:
        v = Array::Constant(built.grid->size(), cfg.body.params[0]);
        break;
      case BodyKind::ellipse: {
        SupportField e = ellipse_support(built.grid, cfg.body.params[0],
                                         cfg.body.params[1]);
        v = e.values;
        break;
      }
      case BodyKind::fourier:
        v = detail::fourier_field(*built.grid, cfg.body.params);
        break;
      default:
        break;
    }
    h0 = SupportField(built.grid, std::move(v));
  }
  if (cfg.perturb > 0.0)
    h0.values += detail::seeded_perturbation(*built.grid, cfg.perturb, cfg.seed);

  if (h0.min() <= 0.0)
    throw ConfigError("initial body is not strictly positive");
  if (!certified_convex(h0, cfg.scheme))
    throw ConfigError("initial body fails convexity certification (margin " +
                      std::to_string(convexity_margin(h0, cfg.scheme)) + ")");
  if (cfg.order >= 2) {
    const double mean = h0.values.mean();
    if ((h0.values - mean).abs().maxCoeff() / mean > 1e-8)
      throw CapabilityError("k >= 2 requires a ball initial body");
  }

  switch (cfg.density.kind) {
    case DensityKind::constant:
      built.f = DensityField::constant(built.grid, cfg.density.params[0]);
      break;
    case DensityKind::fourier: {
      Array fv = detail::fourier_field(*built.grid, cfg.density.params);
      if (fv.minCoeff() <= 0.0)
        throw ConfigError("density must stay strictly positive");
      built.f = DensityField(built.grid, std::move(fv));
      break;
    }
    case DensityKind::file: {
      SupportField ff = support_from_json(json::parse(read_file(cfg.density.path)));
      if (!same_grid(*ff.grid, *built.grid))
        throw ConfigError("density file grid does not match the problem grid");
      if (ff.values.minCoeff() <= 0.0)
        throw ConfigError("density file must be strictly positive");
      built.f = DensityField(built.grid, ff.values);
      break;
    }
  }
  built.h0 = std::move(h0);
  return built;
}

}  // namespace ktorsion
