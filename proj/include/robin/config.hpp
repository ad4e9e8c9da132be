#pragma once

// Experiment configuration: a JSON document naming the domain, the
// coefficient catalog entries, the two Robin coefficients and the mesh and
// solver settings. parse_config validates it and fills every default; the
// resolved document is what reports embed.
//
// Complex numbers are written either as a number or as [re, im].

#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "robin/coeffs.hpp"
#include "robin/error.hpp"
#include "robin/geometry.hpp"
#include "robin/mesh_io.hpp"

namespace robin {

using json = nlohmann::ordered_json;

struct ExperimentConfig {
  json domain;        // {"preset": ...} or {"vertices": ..., "labels": ...}
  json coefficients;  // {"a2": ..., "a1": ..., "a0": ..., "claimed_E": ...}
  json theta1;        // Robin spec, normalized to {"default": ..., "arcs": {...}}
  json theta2;
  std::optional<std::string> mesh_file;
  double h_target = 0.25;
  int refinements = 0;
  int k_max = 10;
  double cluster_tol = 1e-6;
  double strict_tol = 1e-8;
  std::optional<std::set<std::string>> omega;  // labels; default: where theta1 < theta2
  std::vector<double> t_grid;
  int mu_count = 50;
  int levels = 3;
  json resolved;  // fully-resolved document
};

namespace config_detail {

[[noreturn]] inline void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::ValidationError, field + ": " + why);
}

inline void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) invalid(where + "." + key, "unknown field");
  }
}

inline double number(const json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) invalid(where + "." + key, "expected a number");
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) invalid(where + "." + key, "not finite");
  return v;
}

inline Complex complex_value(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  invalid(where, "expected a number or [re, im]");
}

inline json complex_json(Complex z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

inline std::string type_of(const json& spec, const std::string& where) {
  if (!spec.is_object() || !spec.contains("type") || !spec["type"].is_string()) invalid(where, "missing \"type\"");
  return spec["type"].get<std::string>();
}

// Catalog entries resolve to a normalized json spec (all parameters present).

inline json resolve_a2(const json& in, const std::string& where) {
  const std::string t = type_of(in, where);
  json out = {{"type", t}};
  if (t == "identity") {
    check_keys(in, where, {"type", "scale"});
    out["scale"] = number(in, "scale", 1.0, where);
  } else if (t == "constant") {
    check_keys(in, where, {"type", "matrix"});
    if (!in.contains("matrix") || !in["matrix"].is_array() || in["matrix"].size() != 2) invalid(where, "matrix must be 2x2");
    json m = json::array();
    for (int r = 0; r < 2; ++r) {
      const json& row = in["matrix"][r];
      if (!row.is_array() || row.size() != 2) invalid(where, "matrix must be 2x2");
      m.push_back(json::array({complex_json(complex_value(row[0], where)), complex_json(complex_value(row[1], where))}));
    }
    out["matrix"] = m;
  } else if (t == "polynomial") {
    // a11 = base + xx x^2, a22 = base + yy y^2, a12 = xy x y + i imag (x - y), a21 = conj(a12)
    check_keys(in, where, {"type", "base", "xx", "yy", "xy", "imag"});
    out["base"] = number(in, "base", 1.0, where);
    out["xx"] = number(in, "xx", 0.0, where);
    out["yy"] = number(in, "yy", 0.0, where);
    out["xy"] = number(in, "xy", 0.0, where);
    out["imag"] = number(in, "imag", 0.0, where);
  } else if (t == "trigonometric") {
    // a11 = base + amp sin(pi f x) sin(pi f y), a22 = base + amp cos(pi f x) cos(pi f y),
    // a12 = a21 = (amp / 2) sin(pi f (x + y))
    check_keys(in, where, {"type", "base", "amplitude", "freq"});
    out["base"] = number(in, "base", 2.0, where);
    out["amplitude"] = number(in, "amplitude", 0.5, where);
    out["freq"] = number(in, "freq", 1.0, where);
  } else {
    invalid(where + ".type", "unknown a2 catalog entry '" + t + "'");
  }
  return out;
}

inline json resolve_a1(const json& in, const std::string& where) {
  const std::string t = type_of(in, where);
  json out = {{"type", t}};
  if (t == "zero") {
    check_keys(in, where, {"type"});
  } else if (t == "constant") {
    check_keys(in, where, {"type", "value"});
    if (!in.contains("value") || !in["value"].is_array() || in["value"].size() != 2) invalid(where, "value must have 2 entries");
    out["value"] = json::array({complex_json(complex_value(in["value"][0], where)),
                                complex_json(complex_value(in["value"][1], where))});
  } else if (t == "trigonometric") {
    // a1 = amp (cos(pi f y), sin(pi f x))
    check_keys(in, where, {"type", "amplitude", "freq"});
    out["amplitude"] = complex_json(in.contains("amplitude") ? complex_value(in["amplitude"], where) : Complex(0, 1));
    out["freq"] = number(in, "freq", 1.0, where);
  } else {
    invalid(where + ".type", "unknown a1 catalog entry '" + t + "'");
  }
  return out;
}

inline json resolve_a0(const json& in, const std::string& where) {
  if (in.is_number()) return {{"type", "constant"}, {"value", in.get<double>()}};
  const std::string t = type_of(in, where);
  json out = {{"type", t}};
  if (t == "constant") {
    check_keys(in, where, {"type", "value"});
    out["value"] = number(in, "value", 0.0, where);
  } else if (t == "polynomial") {
    // c0 + cx x + cy y + cxy x y
    check_keys(in, where, {"type", "c0", "cx", "cy", "cxy"});
    out["c0"] = number(in, "c0", 0.0, where);
    out["cx"] = number(in, "cx", 0.0, where);
    out["cy"] = number(in, "cy", 0.0, where);
    out["cxy"] = number(in, "cxy", 0.0, where);
  } else if (t == "trigonometric") {
    // base + amp cos(pi f x) cos(pi f y)
    check_keys(in, where, {"type", "base", "amplitude", "freq"});
    out["base"] = number(in, "base", 0.0, where);
    out["amplitude"] = number(in, "amplitude", 1.0, where);
    out["freq"] = number(in, "freq", 1.0, where);
  } else {
    invalid(where + ".type", "unknown a0 catalog entry '" + t + "'");
  }
  return out;
}

inline json resolve_arc_function(const json& in, const std::string& where) {
  if (in.is_number()) return {{"type", "constant"}, {"value", in.get<double>()}};
  const std::string t = type_of(in, where);
  json out = {{"type", t}};
  if (t == "constant") {
    check_keys(in, where, {"type", "value"});
    out["value"] = number(in, "value", 0.0, where);
  } else if (t == "linear") {
    // a + b t
    check_keys(in, where, {"type", "a", "b"});
    out["a"] = number(in, "a", 0.0, where);
    out["b"] = number(in, "b", 0.0, where);
  } else if (t == "cosine") {
    // base + amp cos(2 pi f t)
    check_keys(in, where, {"type", "base", "amplitude", "freq"});
    out["base"] = number(in, "base", 0.0, where);
    out["amplitude"] = number(in, "amplitude", 1.0, where);
    out["freq"] = number(in, "freq", 1.0, where);
  } else {
    invalid(where + ".type", "unknown Robin catalog entry '" + t + "'");
  }
  return out;
}

inline json resolve_robin(const json& in, const std::string& where, const std::set<std::string>& labels) {
  if (in.is_number() || (in.is_object() && in.contains("type")))
    return {{"default", resolve_arc_function(in, where)}, {"arcs", json::object()}};
  check_keys(in, where, {"default", "arcs"});
  json out = {{"arcs", json::object()}};
  if (in.contains("default")) out["default"] = resolve_arc_function(in["default"], where + ".default");
  if (in.contains("arcs")) {
    if (!in["arcs"].is_object()) invalid(where + ".arcs", "expected an object");
    for (const auto& [label, spec] : in["arcs"].items()) {
      if (!labels.count(label)) invalid(where + ".arcs." + label, "unknown arc label '" + label + "'");
      out["arcs"][label] = resolve_arc_function(spec, where + ".arcs." + label);
    }
  }
  for (const auto& l : labels)
    if (!out.contains("default") && !out["arcs"].contains(l))
      invalid(where, "no value for arc label '" + l + "' and no default");
  return out;
}

inline json resolve_domain(const json& in) {
  if (in.is_string()) return resolve_domain(json{{"preset", in}});
  if (in.contains("preset")) {
    check_keys(in, "domain", {"preset"});
    if (!in["preset"].is_string()) invalid("domain.preset", "expected a string");
    const std::string p = in["preset"].get<std::string>();
    if (p != "unit_square" && p != "lshape") invalid("domain.preset", "unknown preset '" + p + "'");
    return {{"preset", p}};
  }
  check_keys(in, "domain", {"vertices", "labels"});
  if (!in.contains("vertices") || !in["vertices"].is_array()) invalid("domain.vertices", "expected an array");
  if (!in.contains("labels") || !in["labels"].is_array()) invalid("domain.labels", "expected an array");
  for (const auto& v : in["vertices"])
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      invalid("domain.vertices", "each vertex must be [x, y]");
  for (const auto& l : in["labels"])
    if (!l.is_string() || l.get<std::string>().empty() ||
        l.get<std::string>().find_first_of(" \t\n") != std::string::npos)
      invalid("domain.labels", "labels must be nonempty strings without whitespace");
  return {{"vertices", in["vertices"]}, {"labels", in["labels"]}};
}

}  // namespace config_detail

inline PolygonalDomain make_domain(const json& spec) {
  if (spec.contains("preset")) return spec["preset"] == "lshape" ? lshape() : unit_square();
  std::vector<Point> v;
  for (const auto& p : spec["vertices"]) v.push_back({p[0].get<double>(), p[1].get<double>()});
  return build_polygon(std::move(v), spec["labels"].get<std::vector<std::string>>());
}

inline EllipticCoefficients make_coefficients(const json& spec) {
  using config_detail::complex_value;
  using std::numbers::pi;
  EllipticCoefficients c;
  const json& a2 = spec["a2"];
  const std::string t2 = a2["type"];
  if (t2 == "identity") {
    const double s = a2["scale"];
    c.a2 = [s](Point) -> Eigen::Matrix2cd { return s * Eigen::Matrix2cd::Identity(); };
  } else if (t2 == "constant") {
    Eigen::Matrix2cd m;
    for (int r = 0; r < 2; ++r)
      for (int q = 0; q < 2; ++q) m(r, q) = complex_value(a2["matrix"][r][q], "a2");
    c.a2 = [m](Point) { return m; };
  } else if (t2 == "polynomial") {
    const double b = a2["base"], xx = a2["xx"], yy = a2["yy"], xy = a2["xy"], im = a2["imag"];
    c.a2 = [=](Point p) {
      Eigen::Matrix2cd m;
      const Complex off(xy * p.x * p.y, im * (p.x - p.y));
      m << b + xx * p.x * p.x, off, std::conj(off), b + yy * p.y * p.y;
      return m;
    };
  } else {
    const double b = a2["base"], amp = a2["amplitude"], f = a2["freq"];
    c.a2 = [=](Point p) {
      Eigen::Matrix2cd m;
      const double off = 0.5 * amp * std::sin(pi * f * (p.x + p.y));
      m << b + amp * std::sin(pi * f * p.x) * std::sin(pi * f * p.y), off, off,
          b + amp * std::cos(pi * f * p.x) * std::cos(pi * f * p.y);
      return m;
    };
  }
  const json& a1 = spec["a1"];
  const std::string t1 = a1["type"];
  if (t1 == "zero") {
    c.a1 = [](Point) -> Eigen::Vector2cd { return Eigen::Vector2cd::Zero(); };
  } else if (t1 == "constant") {
    const Eigen::Vector2cd v(complex_value(a1["value"][0], "a1"), complex_value(a1["value"][1], "a1"));
    c.a1 = [v](Point) { return v; };
  } else {
    const Complex amp = complex_value(a1["amplitude"], "a1");
    const double f = a1["freq"];
    c.a1 = [=](Point p) {
      return Eigen::Vector2cd(amp * std::cos(pi * f * p.y), amp * std::sin(pi * f * p.x));
    };
  }
  const json& a0 = spec["a0"];
  const std::string t0 = a0["type"];
  if (t0 == "constant") {
    const double v = a0["value"];
    c.a0 = [v](Point) { return v; };
  } else if (t0 == "polynomial") {
    const double c0 = a0["c0"], cx = a0["cx"], cy = a0["cy"], cxy = a0["cxy"];
    c.a0 = [=](Point p) { return c0 + cx * p.x + cy * p.y + cxy * p.x * p.y; };
  } else {
    const double b = a0["base"], amp = a0["amplitude"], f = a0["freq"];
    c.a0 = [=](Point p) { return b + amp * std::cos(pi * f * p.x) * std::cos(pi * f * p.y); };
  }
  c.claimed_E = spec["claimed_E"];
  return c;
}

inline RobinCoefficient::ArcFunction make_arc_function(const json& spec, double& bound) {
  using std::numbers::pi;
  const std::string t = spec["type"];
  if (t == "constant") {
    const double v = spec["value"];
    bound = std::abs(v);
    return [v](double, Point) { return v; };
  }
  if (t == "linear") {
    const double a = spec["a"], b = spec["b"];
    bound = std::max(std::abs(a), std::abs(a + b));
    return [a, b](double s, Point) { return a + b * s; };
  }
  const double base = spec["base"], amp = spec["amplitude"], f = spec["freq"];
  bound = std::abs(base) + std::abs(amp);
  return [=](double s, Point) { return base + amp * std::cos(2.0 * pi * f * s); };
}

inline RobinCoefficient make_robin(const json& spec) {
  RobinCoefficient r;
  double bound = 0.0;
  if (spec.contains("default")) {
    auto f = make_arc_function(spec["default"], bound);
    r.set_default(std::move(f), bound);
  }
  for (const auto& [label, s] : spec["arcs"].items()) {
    auto f = make_arc_function(s, bound);
    r.set(label, std::move(f), bound);
  }
  return r;
}

/// Parses and validates a configuration document. Throws ParseError (with
/// line and column) for malformed JSON and ValidationError naming the
/// offending field otherwise.
inline ExperimentConfig parse_config(const std::string& text) {
  using namespace config_detail;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
  }
  check_keys(doc, "config",
             {"domain", "coefficients", "theta", "theta1", "theta2", "mesh", "solve", "omega", "sweep", "nid",
              "converge"});

  ExperimentConfig cfg;
  cfg.domain = resolve_domain(doc.value("domain", json{{"preset", "unit_square"}}));
  // Build once so polygon errors surface during parsing, and to know the labels.
  const PolygonalDomain domain = make_domain(cfg.domain);
  const std::set<std::string> labels = domain.label_set();

  const json coeff = doc.value("coefficients", json::object());
  check_keys(coeff, "coefficients", {"a2", "a1", "a0", "claimed_E"});
  cfg.coefficients = {
      {"a2", resolve_a2(coeff.value("a2", json{{"type", "identity"}}), "coefficients.a2")},
      {"a1", resolve_a1(coeff.value("a1", json{{"type", "zero"}}), "coefficients.a1")},
      {"a0", resolve_a0(coeff.value("a0", json{{"type", "constant"}, {"value", 0.0}}), "coefficients.a0")},
      {"claimed_E", number(coeff, "claimed_E", 1e-6, "coefficients")}};
  if (!(cfg.coefficients["claimed_E"].get<double>() > 0.0)) invalid("coefficients.claimed_E", "must be positive");

  // "theta" is an alias of theta1 (single-coefficient commands).
  if (doc.contains("theta") && doc.contains("theta1")) invalid("theta", "give either theta or theta1, not both");
  const json t1 = doc.contains("theta") ? doc["theta"] : doc.value("theta1", json(0.0));
  cfg.theta1 = resolve_robin(t1, doc.contains("theta") ? "theta" : "theta1", labels);
  cfg.theta2 = resolve_robin(doc.value("theta2", t1), "theta2", labels);

  const json mesh = doc.value("mesh", json::object());
  check_keys(mesh, "mesh", {"h_target", "refinements", "file"});
  cfg.h_target = number(mesh, "h_target", 0.25, "mesh");
  if (!(cfg.h_target > 0.0)) invalid("mesh.h_target", "must be positive");
  if (mesh.contains("refinements")) {
    if (!mesh["refinements"].is_number_integer() || mesh["refinements"].get<int>() < 0)
      invalid("mesh.refinements", "must be a nonnegative integer");
    cfg.refinements = mesh["refinements"].get<int>();
  }
  if (mesh.contains("file")) {
    if (!mesh["file"].is_string()) invalid("mesh.file", "expected a path");
    cfg.mesh_file = mesh["file"].get<std::string>();
  }

  const json solve = doc.value("solve", json::object());
  check_keys(solve, "solve", {"k_max", "cluster_tol", "strict_tol"});
  if (solve.contains("k_max")) {
    if (!solve["k_max"].is_number_integer()) invalid("solve.k_max", "must be an integer");
    cfg.k_max = solve["k_max"].get<int>();
  }
  if (cfg.k_max < 1) invalid("solve.k_max", "must be at least 1");
  cfg.cluster_tol = number(solve, "cluster_tol", 1e-6, "solve");
  cfg.strict_tol = number(solve, "strict_tol", 1e-8, "solve");
  if (!(cfg.cluster_tol >= 0.0)) invalid("solve.cluster_tol", "must be nonnegative");
  if (!(cfg.strict_tol > 0.0)) invalid("solve.strict_tol", "must be positive");

  if (doc.contains("omega")) {
    if (!doc["omega"].is_array() || doc["omega"].empty()) invalid("omega", "expected a nonempty array of labels");
    std::set<std::string> om;
    for (const auto& l : doc["omega"]) {
      if (!l.is_string() || !labels.count(l.get<std::string>()))
        invalid("omega", "unknown arc label " + l.dump());
      om.insert(l.get<std::string>());
    }
    cfg.omega = om;
  }

  const json sweep = doc.value("sweep", json::object());
  check_keys(sweep, "sweep", {"t_grid"});
  if (sweep.contains("t_grid")) {
    if (!sweep["t_grid"].is_array() || sweep["t_grid"].empty()) invalid("sweep.t_grid", "expected a nonempty array");
    for (const auto& t : sweep["t_grid"]) {
      if (!t.is_number()) invalid("sweep.t_grid", "expected numbers");
      cfg.t_grid.push_back(t.get<double>());
    }
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i)
      if (cfg.t_grid[i] < 0.0 || cfg.t_grid[i] > 1.0 || (i > 0 && cfg.t_grid[i] <= cfg.t_grid[i - 1]))
        invalid("sweep.t_grid", "must be ascending within [0, 1]");
  } else {
    for (int i = 0; i <= 10; ++i) cfg.t_grid.push_back(i / 10.0);
  }

  const json nid = doc.value("nid", json::object());
  check_keys(nid, "nid", {"mu_count"});
  if (nid.contains("mu_count")) {
    if (!nid["mu_count"].is_number_integer() || nid["mu_count"].get<int>() < 1) invalid("nid.mu_count", "must be >= 1");
    cfg.mu_count = nid["mu_count"].get<int>();
  }

  const json conv = doc.value("converge", json::object());
  check_keys(conv, "converge", {"levels"});
  if (conv.contains("levels")) {
    if (!conv["levels"].is_number_integer() || conv["levels"].get<int>() < 3) invalid("converge.levels", "must be >= 3");
    cfg.levels = conv["levels"].get<int>();
  }

  json mesh_out = {{"h_target", cfg.h_target}, {"refinements", cfg.refinements}};
  if (cfg.mesh_file) mesh_out["file"] = *cfg.mesh_file;
  cfg.resolved = {{"domain", cfg.domain},
                  {"coefficients", cfg.coefficients},
                  {"theta1", cfg.theta1},
                  {"theta2", cfg.theta2},
                  {"mesh", mesh_out},
                  {"solve", {{"k_max", cfg.k_max}, {"cluster_tol", cfg.cluster_tol}, {"strict_tol", cfg.strict_tol}}},
                  {"omega", cfg.omega ? json(*cfg.omega) : json(nullptr)},
                  {"sweep", {{"t_grid", cfg.t_grid}}},
                  {"nid", {{"mu_count", cfg.mu_count}}},
                  {"converge", {{"levels", cfg.levels}}}};
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  ROBIN_THROW_IF(!is, ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

/// The configured mesh: from file when given, otherwise the uniform mesh at
/// h_target; then `refinements` red refinements either way.
inline TriangleMesh make_mesh(const ExperimentConfig& cfg) {
  TriangleMesh base = cfg.mesh_file ? load_mesh(*cfg.mesh_file) : mesh_uniform(make_domain(cfg.domain), cfg.h_target);
  return refine(base, cfg.refinements);
}

}  // namespace robin
