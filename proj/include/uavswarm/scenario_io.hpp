#pragma once

// Scenario documents: JSON with // and /* */ comments permitted. Unknown
// keys are rejected; every error names the offending field as a JSON
// pointer. The format is described in README.md.

#include "uavswarm/shapes.hpp"
#include "uavswarm/sim_engine.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace uavswarm {

using json = nlohmann::json;

namespace detail {

class FieldReader {
 public:
  FieldReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  T required(const char* key) {
    if (!j_.contains(key)) fail(key, "missing required field");
    return get<T>(key);
  }

  template <class T>
  std::optional<T> optional(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    return get<T>(key);
  }

  template <class T>
  T value(const char* key, T fallback) {
    return optional<T>(key).value_or(fallback);
  }

  const json& raw(const char* key) {
    if (!j_.contains(key)) fail(key, "missing required field");
    seen_.insert(key);
    return j_.at(key);
  }

  std::string child_path(const char* key) const { return path_ + "/" + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ValidationError((key.empty() ? (path_.empty() ? "/" : path_) : path_ + "/" + key) +
                          ": " + what);
  }

 private:
  template <class T>
  T get(const char* key) {
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) fail(key, "expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) fail(key, "expected an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) fail(key, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      fail(key, e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Vector read_vector(const json& v, const std::string& path, Eigen::Index expected) {
  if (!v.is_array()) throw ValidationError(path + ": expected an array of numbers");
  if (static_cast<Eigen::Index>(v.size()) != expected)
    throw ValidationError(path + ": expected " + std::to_string(expected) + " entries, got " +
                          std::to_string(v.size()));
  Vector out(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    const auto& x = v[static_cast<std::size_t>(i)];
    if (!x.is_number()) throw ValidationError(path + "/" + std::to_string(i) + ": expected a number");
    out(i) = x.get<double>();
  }
  return out;
}

inline PointSet read_shape(const json& j, const std::string& path, int n, int m) {
  FieldReader r(j, path);
  const auto kind = r.required<std::string>("kind");
  PointSet p;
  if (kind == "points") {
    const json& pts = r.raw("points");
    if (!pts.is_array()) r.fail("points", "expected an array of coordinates");
    p.resize(static_cast<Eigen::Index>(pts.size()), m);
    for (std::size_t i = 0; i < pts.size(); ++i)
      p.row(static_cast<Eigen::Index>(i)) =
          read_vector(pts[i], path + "/points/" + std::to_string(i), m).transpose();
  } else if (kind == "circle") {
    const double radius = r.required<double>("radius");
    if (!(radius > 0.0)) r.fail("radius", "must be > 0");
    p = shapes::circle(n, radius, m);
  } else if (kind == "cross") {
    const double spacing = r.required<double>("spacing");
    if (!(spacing > 0.0)) r.fail("spacing", "must be > 0");
    p = shapes::cross(n, spacing, m);
  } else if (kind == "grid") {
    const double spacing = r.required<double>("spacing");
    const int columns = r.required<int>("columns");
    if (!(spacing > 0.0)) r.fail("spacing", "must be > 0");
    if (columns < 1) r.fail("columns", "must be >= 1");
    p = shapes::grid(n, spacing, columns, m);
  } else {
    r.fail("kind", "unknown shape '" + kind + "' (points, circle, cross, grid)");
  }
  if (r.has("center")) {
    const Vector c = read_vector(r.raw("center"), r.child_path("center"), m);
    p = p.rowwise() + c.transpose();
  }
  r.finish();
  return p;
}

inline Topology read_topology(const json& j, const std::string& path, int n) {
  FieldReader r(j, path);
  const auto kind = r.required<std::string>("kind");
  std::optional<Topology> topo;
  try {
    if (kind == "circulant") {
      const int size = r.required<int>("n");
      const int halfwidth = r.required<int>("halfwidth");
      if (size != n) r.fail("n", "circulant size " + std::to_string(size) + " != agents " + std::to_string(n));
      topo.emplace(circulant_topology(size, halfwidth));
    } else if (kind == "explicit") {
      const json& adj = r.raw("adjacency");
      const json& pin = r.raw("pinning");
      if (!adj.is_array() || static_cast<int>(adj.size()) != n)
        r.fail("adjacency", "expected " + std::to_string(n) + " rows");
      IntMatrix w(n, n);
      for (int i = 0; i < n; ++i) {
        const auto& row = adj[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
          r.fail("adjacency", "row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
        for (int c = 0; c < n; ++c) {
          if (!row[static_cast<std::size_t>(c)].is_number_integer())
            r.fail("adjacency", "entry (" + std::to_string(i) + "," + std::to_string(c) + ") is not an integer");
          w(i, c) = row[static_cast<std::size_t>(c)].get<int>();
        }
      }
      if (!pin.is_array() || static_cast<int>(pin.size()) != n)
        r.fail("pinning", "expected " + std::to_string(n) + " entries");
      Eigen::VectorXi b(n);
      for (int i = 0; i < n; ++i) {
        if (!pin[static_cast<std::size_t>(i)].is_number_integer())
          r.fail("pinning", "entry " + std::to_string(i) + " is not an integer");
        b(i) = pin[static_cast<std::size_t>(i)].get<int>();
      }
      topo.emplace(build_topology(std::move(w), std::move(b)));
    } else {
      r.fail("kind", "unknown topology '" + kind + "' (circulant, explicit)");
    }
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ValidationError(path + ": " + what);
  }
  r.finish();
  return *topo;
}

}  // namespace detail

inline Scenario scenario_from_json(const json& doc) {
  using detail::FieldReader;
  FieldReader r(doc, "");
  Scenario s;
  s.name = r.value<std::string>("name", "scenario");
  const int n = r.required<int>("agents");
  if (n < 1) r.fail("agents", "must be >= 1");
  s.dimension = r.value<int>("dimension", 2);
  if (s.dimension != 2 && s.dimension != 3) r.fail("dimension", "must be 2 or 3");
  const int m = s.dimension;
  s.radius = r.required<double>("radius");
  s.v_max = r.required<double>("v_max");
  s.T = r.value<double>("T", 0.01);
  s.seed = r.value<std::uint64_t>("seed", 1);
  s.steps = r.optional<std::int64_t>("steps");
  if (s.steps && *s.steps < 1) r.fail("steps", "must be >= 1");
  s.hold_factor = r.value<double>("hold_factor", 1.5);
  s.workspace_guard = r.value<double>("workspace_guard", 1e4);

  s.topology = detail::read_topology(r.raw("topology"), "/topology", n);

  {
    FieldReader w(r.raw("workspace"), "/workspace");
    s.workspace.lo = detail::read_vector(w.raw("lo"), "/workspace/lo", m);
    s.workspace.hi = detail::read_vector(w.raw("hi"), "/workspace/hi", m);
    w.finish();
  }

  if (r.has("scale")) {
    FieldReader sc(r.raw("scale"), "/scale");
    s.scale.rho_max = sc.value<double>("rho_max", s.scale.rho_max);
    s.scale.rho_min = sc.value<double>("rho_min", s.scale.rho_min);
    s.scale.rho = sc.optional<double>("rho");
    if (sc.has("translation")) {
      if (!s.scale.rho) sc.fail("translation", "requires a fixed rho");
      s.scale.translation = detail::read_vector(sc.raw("translation"), "/scale/translation", m);
    }
    if (!(s.scale.rho_max > 0.0)) sc.fail("rho_max", "must be > 0");
    sc.finish();
  }

  s.initial = detail::read_shape(r.raw("initial"), "/initial", n, m);

  const json& forms = r.raw("formations");
  if (!forms.is_array() || forms.empty()) r.fail("formations", "expected a non-empty array");
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const std::string path = "/formations/" + std::to_string(i);
    FieldReader f(forms[i], path);
    FormationStage stage;
    stage.name = f.value<std::string>("name", "formation" + std::to_string(i));
    stage.shape = detail::read_shape(f.raw("shape"), path + "/shape", n, m);
    stage.hold = f.optional<double>("hold");
    f.finish();
    s.formations.push_back(std::move(stage));
  }

  if (r.has("controller")) {
    FieldReader c(r.raw("controller"), "/controller");
    auto& p = s.controller;
    if (c.has("alpha")) {
      const Vector a = detail::read_vector(c.raw("alpha"), "/controller/alpha", 2);
      p.alpha_p = a(0);
      p.alpha_v = a(1);
    }
    p.mu_actor = c.value<double>("mu_actor", p.mu_actor);
    p.mu_critic = c.value<double>("mu_critic", p.mu_critic);
    p.kappa = c.value<double>("kappa", p.kappa);
    p.beta = c.value<double>("beta", p.beta);
    p.actor_init = c.value<double>("actor_init", p.actor_init);
    p.critic_init = c.value<double>("critic_init", p.critic_init);
    c.finish();
    try {
      p.validate();
    } catch (const ValidationError& e) {
      c.fail("", e.what());
    }
  }

  if (r.has("rbf")) {
    FieldReader b(r.raw("rbf"), "/rbf");
    auto& spec = s.rbf;
    const auto layout = b.value<std::string>("layout", "lattice");
    if (layout == "lattice") spec.layout = RbfSpec::Layout::lattice;
    else if (layout == "grid") spec.layout = RbfSpec::Layout::grid;
    else b.fail("layout", "expected 'lattice' or 'grid'");
    spec.nodes = b.value<std::int64_t>("nodes", spec.nodes);
    if (b.has("range")) {
      const Vector range = detail::read_vector(b.raw("range"), "/rbf/range", 2);
      spec.lo = range(0);
      spec.hi = range(1);
    }
    spec.levels = b.value<int>("levels", spec.levels);
    spec.per_axis = b.value<std::vector<int>>("per_axis", spec.per_axis);
    spec.width = b.value<double>("width", spec.width);
    spec.seed = b.optional<std::uint64_t>("seed");
    b.finish();
  }

  if (r.has("disturbance")) {
    FieldReader d(r.raw("disturbance"), "/disturbance");
    auto& p = s.disturbance;
    p.amplitude = d.value<double>("amplitude", p.amplitude);
    p.frequency = d.value<double>("frequency", p.frequency);
    if (d.has("phase")) p.phase = detail::read_vector(d.raw("phase"), "/disturbance/phase", m);
    if (!(p.amplitude >= 0.0)) d.fail("amplitude", "must be >= 0");
    d.finish();
  }

  r.finish();
  return s;
}

inline json parse_scenario_text(const std::string& text) {
  try {
    return json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("parse error: ") + e.what());
  }
}

inline Scenario parse_scenario(const std::string& text) {
  return scenario_from_json(parse_scenario_text(text));
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario(const std::string& path) {
  try {
    return parse_scenario(read_text_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace uavswarm
