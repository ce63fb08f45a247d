#pragma once

// Persistence: JSON snapshots for support fields and interior solutions,
// plot-ready CSV emitters, atomic file writes. Doubles are serialized with
// shortest-round-trip formatting (JSON) or 17 significant digits (CSV), so
// snapshot round-trips are bit-exact.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktorsion/functionals.hpp"
#include "ktorsion/sphere_geometry.hpp"

namespace ktorsion {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// atomic writes

/// Write content to path via a temp file and rename, so an interrupted run
/// never leaves a partially written file at the final path.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " -> " + path.string() + ": " +
                  ec.message());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// support field snapshots: {dim, n_nodes, angles[], h[]}

inline json support_to_json(const SupportField& h) {
  json j;
  j["dim"] = h.grid->dim;
  j["n_nodes"] = h.grid->size();
  j["angles"] = h.grid->angles;
  j["h"] = std::vector<double>(h.values.data(), h.values.data() + h.values.size());
  return j;
}

inline SupportField support_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  const int n = j.at("n_nodes").get<int>();
  auto grid = (dim == 2) ? SphereGrid::circle(n)
              : (dim == 3) ? SphereGrid::polar(n)
                           : throw IoError("support snapshot: dim must be 2 or 3");
  const auto angles = j.at("angles").get<std::vector<double>>();
  if (angles != grid->angles)
    throw IoError("support snapshot: angles do not match the canonical grid");
  const auto hv = j.at("h").get<std::vector<double>>();
  if (static_cast<int>(hv.size()) != n)
    throw IoError("support snapshot: h[] length mismatch");
  Array v(n);
  for (int i = 0; i < n; ++i) v[i] = hv[i];
  return SupportField(std::move(grid), std::move(v));
}

// ---------------------------------------------------------------------------
// interior solution snapshots:
// {backend, dim, k, centroid, charges[], coefficients[], boundary_gradient[]}
// plus {radius} for the closed-form ball backend. coefficients[] carries one
// entry per charge followed by the constant offset.

inline json solution_to_json(const InteriorSolution& s) {
  json j;
  j["backend"] = s.backend_name();
  j["dim"] = s.dim();
  j["k"] = s.order();
  j["centroid"] = {s.centroid().x(), s.centroid().y(), s.centroid().z()};
  json charges = json::array();
  for (const auto& q : s.charges()) charges.push_back({q.x(), q.y(), q.z()});
  j["charges"] = std::move(charges);
  std::vector<double> coeff(s.charge_coefficients().data(),
                            s.charge_coefficients().data() +
                                s.charge_coefficients().size());
  coeff.push_back(s.offset());
  j["coefficients"] = std::move(coeff);
  j["boundary_gradient"] =
      std::vector<double>(s.boundary_gradient().data(),
                          s.boundary_gradient().data() + s.boundary_gradient().size());
  if (s.backend() == InteriorSolution::Backend::ball_closed_form)
    j["radius"] = s.ball_radius();
  return j;
}

inline InteriorSolution solution_from_json(const json& j) {
  const std::string backend = j.at("backend").get<std::string>();
  const int dim = j.at("dim").get<int>();
  const int k = j.at("k").get<int>();
  InteriorSolution s = InteriorSolution::ball(2, 1, 1.0);
  if (backend == "ball-closed-form") {
    s = InteriorSolution::ball(dim, k, j.at("radius").get<double>());
  } else if (backend == "mfs-poisson") {
    const auto c = j.at("centroid").get<std::vector<double>>();
    std::vector<Vec3> charges;
    for (const auto& q : j.at("charges"))
      charges.emplace_back(q.at(0).get<double>(), q.at(1).get<double>(),
                           q.at(2).get<double>());
    const auto coeff = j.at("coefficients").get<std::vector<double>>();
    if (coeff.size() != charges.size() + 1)
      throw IoError("solution snapshot: coefficients[] must be charges[] plus offset");
    Eigen::VectorXd cv(charges.size());
    for (std::size_t i = 0; i < charges.size(); ++i) cv[i] = coeff[i];
    s = InteriorSolution::mfs(dim, Vec3(c.at(0), c.at(1), c.at(2)),
                              std::move(charges), std::move(cv), coeff.back());
  } else {
    throw IoError("solution snapshot: unknown backend '" + backend + "'");
  }
  if (j.contains("boundary_gradient")) {
    const auto bg = j.at("boundary_gradient").get<std::vector<double>>();
    Array g(bg.size());
    for (std::size_t i = 0; i < bg.size(); ++i) g[i] = bg[i];
    s.set_boundary_gradient(std::move(g));
  }
  return s;
}

// ---------------------------------------------------------------------------
// CSV emitters (deterministic: fixed column order, 17 significant digits)

inline std::string format17(double v) {
  char tmp[40];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  return std::string(tmp);
}

inline std::string timeseries_csv(const std::vector<FunctionalReport>& rows) {
  std::string out = FunctionalReport::csv_header();
  out += '\n';
  for (const auto& r : rows) {
    out += r.csv_row();
    out += '\n';
  }
  return out;
}

/// Boundary curve as an (X1,X2[,X3]) point list.
inline std::string curve_csv(const std::vector<Vec3>& points, int dim) {
  std::string out = (dim == 2) ? "x1,x2\n" : "x1,x2,x3\n";
  for (const auto& p : points) {
    out += format17(p.x());
    out += ',';
    out += format17(dim == 2 ? p.y() : p.y());
    if (dim == 3) {
      out += ',';
      out += format17(p.z());
    }
    out += '\n';
  }
  return out;
}

inline void emit_timeseries(const std::filesystem::path& path,
                            const std::vector<FunctionalReport>& rows) {
  write_atomic(path, timeseries_csv(rows));
}

inline void emit_curve(const std::filesystem::path& path, const SupportField& body,
                       DerivativeScheme scheme = DerivativeScheme::fd4) {
  write_atomic(path, curve_csv(boundary_embedding(body, scheme), body.grid->dim));
}

}  // namespace ktorsion
