#include "tomoscope/config.hpp"

#include "tomoscope/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>

namespace tomo {

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.is_null() ? 0 : m.line + 1;
}

[[noreturn]] void fail(const YAML::Node& at, const std::string& msg) { throw ConfigError(msg, line_of(at)); }

void require_map(const YAML::Node& n, const std::string& what) {
  if (!n.IsMap()) fail(n, what + " must be a mapping");
}

void reject_unknown(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, "unknown field '" + key + "' in " + where);
  }
}

YAML::Node required(const YAML::Node& map, const std::string& key, const std::string& where) {
  const YAML::Node n = map[key];
  if (!n) fail(map, "missing field '" + key + "' in " + where);
  return n;
}

double as_double(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be a number");
  const std::string s = n.Scalar();
  if (s == "inf" || s == ".inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(n, "'" + key + "' must be a number (got '" + s + "')");
  }
}

long long as_integer(const YAML::Node& n, const std::string& key) {
  const double v = as_double(n, key);
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 9.0e15) fail(n, "'" + key + "' must be an integer");
  return static_cast<long long>(v);
}

int as_count(const YAML::Node& n, const std::string& key, int lo = 1) {
  const long long v = as_integer(n, key);
  if (v < lo || v > 100000000) fail(n, "'" + key + "' must be an integer >= " + std::to_string(lo));
  return static_cast<int>(v);
}

std::string as_string(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be a string");
  return n.Scalar();
}

Vec as_vec(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() == 0) fail(n, "'" + key + "' must be a non-empty list of numbers");
  Vec v(static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < n.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_double(n[i], key);
  if (!v.allFinite()) fail(n, "'" + key + "' has non-finite entries");
  return v;
}

Mat as_mat(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() == 0) fail(n, "'" + key + "' must be a list of rows");
  const std::size_t rows = n.size();
  Mat m(rows, rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const Vec r = as_vec(n[i], key);
    if (static_cast<std::size_t>(r.size()) != rows) fail(n[i], "'" + key + "' must be square");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

std::vector<HarmonicMode> as_modes(const YAML::Node& n, int dim, const std::string& key) {
  if (!n.IsSequence()) fail(n, "'" + key + "' must be a list");
  std::vector<HarmonicMode> out;
  for (const YAML::Node& m : n) {
    require_map(m, "a mode");
    if (dim == 2)
      reject_unknown(m, {"m", "coef"}, "a planar mode");
    else
      reject_unknown(m, {"l", "m", "coef"}, "a mode");
    HarmonicMode h;
    if (dim != 2) h.l = static_cast<int>(as_integer(required(m, "l", "a mode"), "l"));
    h.m = static_cast<int>(as_integer(required(m, "m", "a mode"), "m"));
    h.coef = m["coef"] ? as_double(m["coef"], "coef") : 1.0;
    out.push_back(h);
  }
  return out;
}

void check_dim(const YAML::Node& at, int n) {
  if (n < 2 || n > kMaxDim) fail(at, "dimension must be between 2 and " + std::to_string(kMaxDim));
}

BodyPtr parse_body(const YAML::Node& n, const std::string& name) {
  require_map(n, "body " + name);
  const std::string kind = as_string(required(n, "kind", "body " + name), "kind");
  const std::string where = "body " + name + " (" + kind + ")";
  try {
    if (kind == "ball") {
      reject_unknown(n, {"kind", "center", "radius"}, where);
      const Vec c = as_vec(required(n, "center", where), "center");
      check_dim(n["center"], static_cast<int>(c.size()));
      const double r = as_double(required(n, "radius", where), "radius");
      if (!(r > 0.0) || !std::isfinite(r)) fail(n["radius"], "radius must be positive");
      return std::make_shared<Ball>(c, r);
    }
    if (kind == "ellipsoid") {
      reject_unknown(n, {"kind", "center", "shape"}, where);
      const Vec c = as_vec(required(n, "center", where), "center");
      check_dim(n["center"], static_cast<int>(c.size()));
      const Mat a = as_mat(required(n, "shape", where), "shape");
      if (a.rows() != c.size()) fail(n["shape"], "shape must be " + std::to_string(c.size()) + "x" + std::to_string(c.size()));
      return std::make_shared<Ellipsoid>(c, a);
    }
    if (kind == "polytope") {
      reject_unknown(n, {"kind", "vertices"}, where);
      const YAML::Node vs = required(n, "vertices", where);
      if (!vs.IsSequence() || vs.size() == 0) fail(vs, "vertices must be a list of points");
      std::vector<Vec> pts;
      for (const YAML::Node& v : vs) pts.push_back(as_vec(v, "vertices"));
      check_dim(vs, static_cast<int>(pts.front().size()));
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i].size() != pts.front().size()) fail(vs[i], "vertices have mixed dimensions");
      return std::make_shared<PolytopeV>(pts);
    }
    if (kind == "perturbed-ball") {
      reject_unknown(n, {"kind", "center", "radius", "amplitude", "modes"}, where);
      const Vec c = as_vec(required(n, "center", where), "center");
      if (c.size() != 2 && c.size() != 3) fail(n["center"], "perturbed-ball needs dimension 2 or 3");
      const double r = as_double(required(n, "radius", where), "radius");
      if (!(r > 0.0) || !std::isfinite(r)) fail(n["radius"], "radius must be positive");
      const double amp = n["amplitude"] ? as_double(n["amplitude"], "amplitude") : 0.0;
      const std::vector<HarmonicMode> modes =
          n["modes"] ? as_modes(n["modes"], static_cast<int>(c.size()), "modes") : std::vector<HarmonicMode>{};
      return std::make_shared<PerturbedBall>(c, r, amp, modes);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(n, where + ": " + e.what());
  }
  fail(n["kind"], "unknown body kind '" + kind + "' (expected ball, ellipsoid, polytope, perturbed-ball)");
}

CycleFunction parse_cycle(const YAML::Node& mode, int dim) {
  const std::string fn = as_string(required(mode, "function", "cycle mode"), "function");
  try {
    if (fn == "zero") {
      reject_unknown(mode, {"kind", "function"}, "cycle mode");
      return CycleFunction::zero(dim);
    }
    if (fn == "linear") {
      reject_unknown(mode, {"kind", "function", "a"}, "cycle mode");
      const Vec a = as_vec(required(mode, "a", "linear cycle"), "a");
      if (a.size() != dim) fail(mode["a"], "'a' must have dimension " + std::to_string(dim));
      return CycleFunction::linear(a);
    }
    if (fn == "odd-harmonic-sum") {
      reject_unknown(mode, {"kind", "function", "terms"}, "cycle mode");
      return CycleFunction::odd_harmonic_sum(dim, as_modes(required(mode, "terms", "harmonic cycle"), dim, "terms"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(mode, std::string("cycle function: ") + e.what());
  }
  fail(mode["function"], "unknown cycle function '" + fn + "' (expected zero, linear, odd-harmonic-sum)");
}

Thm1Mode parse_mode(const YAML::Node& mode, int dim) {
  require_map(mode, "mode");
  const std::string kind = as_string(required(mode, "kind", "mode"), "kind");
  if (kind == "sphere") {
    reject_unknown(mode, {"kind", "center", "radius"}, "sphere mode");
    SphereSpec s;
    s.center = as_vec(required(mode, "center", "sphere mode"), "center");
    if (s.center.size() != dim) fail(mode["center"], "sphere center must have dimension " + std::to_string(dim));
    s.radius = as_double(required(mode, "radius", "sphere mode"), "radius");
    if (!(s.radius > 0.0)) fail(mode["radius"], "radius must be positive");
    return s;
  }
  if (kind == "cycle") return parse_cycle(mode, dim);
  fail(mode["kind"], "unknown mode '" + kind + "' (expected sphere or cycle)");
}

struct CheckerInfo {
  std::string id;
  bool needs_L;
  std::set<std::string> params;
};

const std::vector<CheckerInfo>& checker_table() {
  static const std::vector<CheckerInfo> t = {
      {"thmO", true, {"count"}},          {"thm1", true, {"count", "mode"}},  {"conj2", true, {"count"}},
      {"conj3", false, {"count", "q"}},   {"thm2", false, {"apexes", "planes"}}, {"thm3", false, {"count"}},
      {"thm4", false, {"count"}},         {"thm6", true, {"apexes", "points"}}, {"thm7", true, {"apexes"}},
      {"orbit", false, {"x0", "steps", "variant"}}, {"floating", false, {"delta", "delta_fraction", "count"}},
  };
  return t;
}

void default_params(const std::string& id, CheckerParams& p) {
  if (id == "thmO" || id == "thm1" || id == "conj2") p.count = 32;
  if (id == "thm3") p.count = 360;
  if (id == "floating") p.count = 128;
  if (id == "thm6" || id == "thm7") p.apexes = 32;
}

void parse_params(const YAML::Node& params, const CheckerInfo& info, RunConfig& cfg, const YAML::Node& root) {
  CheckerParams& p = cfg.params;
  default_params(info.id, p);
  const int n = cfg.K->dim();
  if (params) {
    require_map(params, "params");
    reject_unknown(params, info.params, "params of checker " + info.id);
    if (params["count"]) p.count = as_count(params["count"], "count");
    if (params["apexes"]) p.apexes = as_count(params["apexes"], "apexes");
    if (params["planes"]) p.planes = as_count(params["planes"], "planes");
    if (params["points"]) p.points = as_count(params["points"], "points", 6);
    if (params["steps"]) p.steps = as_count(params["steps"], "steps");
    if (params["q"]) {
      p.q = as_vec(params["q"], "q");
      if (p.q->size() != n) fail(params["q"], "'q' must have dimension " + std::to_string(n));
    }
    if (params["x0"]) {
      p.x0 = as_vec(params["x0"], "x0");
      if (p.x0->size() != 2) fail(params["x0"], "'x0' must be a planar point");
      if (std::abs(p.x0->norm() - 1.0) > 1e-9) fail(params["x0"], "'x0' must be a unit vector");
    }
    if (params["variant"]) {
      const std::string v = as_string(params["variant"], "variant");
      if (v == "thm2")
        p.variant = OrbitVariant::thm2;
      else if (v == "thm3")
        p.variant = OrbitVariant::thm3;
      else
        fail(params["variant"], "variant must be thm2 or thm3");
    }
    if (params["mode"]) p.mode = parse_mode(params["mode"], n);
  }
  if (info.id == "thm1" && !p.mode) fail(params ? params : root, "checker thm1 needs params.mode (sphere or cycle)");
  if (info.id == "conj3" && !p.q) fail(params ? params : root, "checker conj3 needs params.q");
  if (info.id == "orbit") {
    if (n != 2) fail(root["bodies"], "orbit runs need a planar body");
    if (!p.x0) p.x0 = make_vec({1.0, 0.0});
  }
  if (info.id == "floating") {
    if (n != 2) fail(root["bodies"], "floating runs need a planar body");
    const bool abs = params && params["delta"];
    const bool frac = params && params["delta_fraction"];
    if (abs == frac) fail(params ? params : root, "floating needs exactly one of params.delta, params.delta_fraction");
    const YAML::Node at = abs ? params["delta"] : params["delta_fraction"];
    const double v = as_double(at, abs ? "delta" : "delta_fraction");
    try {
      p.delta = abs ? v : v * body_volume(*cfg.K).value;
      FloatingSpec check(cfg.K, p.delta);
    } catch (const Error& e) {
      fail(at, e.what());
    }
  }
}

// Resolve "K.radius", "L.center[0]", "K.shape[1][1]" inside a clone of the
// bodies node and assign v.
void assign_path(YAML::Node bodies, const std::string& path, double v, const YAML::Node& at) {
  static const std::regex re(R"(^(K|L)\.([A-Za-z_]+)((\[[0-9]+\])*)$)");
  std::smatch m;
  if (!std::regex_match(path, m, re)) fail(at, "vary must look like K.radius or L.center[0] (got '" + path + "')");
  const std::string body = m[1], field = m[2], idx = m[3];
  if (!bodies[body]) fail(at, "vary names body " + body + ", which is not defined");
  YAML::Node cur = bodies[body][field];
  if (!cur) fail(at, "vary names field '" + field + "', which body " + body + " does not set");
  static const std::regex ire(R"(\[([0-9]+)\])");
  for (auto it = std::sregex_iterator(idx.begin(), idx.end(), ire); it != std::sregex_iterator(); ++it) {
    const std::size_t i = std::stoul((*it)[1]);
    if (!cur.IsSequence() || i >= cur.size()) fail(at, "index out of range in '" + path + "'");
    cur.reset(cur[i]);
  }
  if (!cur.IsScalar()) fail(at, "'" + path + "' does not name a number");
  cur = v;
}

SweepSpec parse_sweep(const YAML::Node& sw, const YAML::Node& root) {
  require_map(sw, "sweep");
  reject_unknown(sw, {"conjecture", "budget", "vary", "values", "name"}, "sweep");
  SweepSpec s;
  const YAML::Node cj = required(sw, "conjecture", "sweep");
  try {
    s.conjecture = conjecture_from_string(as_string(cj, "conjecture"));
  } catch (const InputError& e) {
    fail(cj, e.what());
  }
  if (sw["budget"]) s.budget = as_count(sw["budget"], "budget", 4);
  const YAML::Node vary = required(sw, "vary", "sweep");
  const std::string path = as_string(vary, "vary");
  const YAML::Node vals = required(sw, "values", "sweep");
  if (!vals.IsSequence() || vals.size() == 0) fail(vals, "values must be a non-empty list of numbers");
  for (const YAML::Node& v : vals) s.family.values.push_back(as_double(v, "values"));
  s.family.name = sw["name"] ? as_string(sw["name"], "name") : path;

  const YAML::Node bodies = required(root, "bodies", "config");
  require_map(bodies, "bodies");
  reject_unknown(bodies, {"K", "L"}, "bodies");
  const bool needs_L = s.conjecture == ConjectureId::C1 || s.conjecture == ConjectureId::C2;
  if (needs_L && !bodies["L"]) fail(bodies, "conjecture " + to_string(s.conjecture) + " needs bodies K and L");
  if (!bodies["K"]) fail(bodies, "missing body K");
  if (!needs_L && bodies["L"]) fail(bodies["L"], "conjecture " + to_string(s.conjecture) + " uses body K only");

  const YAML::Node tmpl = YAML::Clone(bodies);
  s.family.make = [tmpl, path, vary](double v) {
    YAML::Node b = YAML::Clone(tmpl);
    assign_path(b, path, v, vary);
    BodyPair pair;
    pair.K = parse_body(b["K"], "K");
    if (b["L"]) pair.L = parse_body(b["L"], "L");
    if (pair.L && pair.L->dim() != pair.K->dim()) fail(b["L"], "bodies K and L have different dimensions");
    return pair;
  };
  // Every member is built once here so that bad values fail before any run.
  for (std::size_t i = 0; i < s.family.values.size(); ++i) {
    try {
      s.family.make(s.family.values[i]);
    } catch (const ConfigError& e) {
      fail(vals[i], "family member " + path + " = " + vals[i].Scalar() + ": " + e.what());
    }
  }
  return s;
}

}  // namespace

const std::vector<std::string>& checker_ids() {
  static const std::vector<std::string> ids = [] {
    std::vector<std::string> out;
    for (const CheckerInfo& c : checker_table()) out.push_back(c.id);
    return out;
  }();
  return ids;
}

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed document: " + e.msg, e.mark.is_null() ? 0 : e.mark.line + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping", line_of(root));
  reject_unknown(root, {"checker", "sweep", "bodies", "params", "seed", "samples", "tolerance", "directions", "output"},
                 "config");

  RunConfig cfg;
  if (root["seed"]) {
    const long long s = as_integer(root["seed"], "seed");
    if (s < 0) fail(root["seed"], "seed must be non-negative");
    cfg.options.seed = static_cast<std::uint64_t>(s);
  }
  if (root["samples"]) cfg.options.samples = as_count(root["samples"], "samples", 100);
  if (root["tolerance"]) {
    cfg.options.tolerance = as_double(root["tolerance"], "tolerance");
    if (!(cfg.options.tolerance > 0.0) || !std::isfinite(cfg.options.tolerance))
      fail(root["tolerance"], "tolerance must be positive");
  }
  if (root["directions"]) cfg.options.directions = as_count(root["directions"], "directions", 8);
  if (root["output"]) cfg.output = as_string(root["output"], "output");

  const bool has_checker = static_cast<bool>(root["checker"]);
  const bool has_sweep = static_cast<bool>(root["sweep"]);
  if (has_checker == has_sweep) fail(root, "config needs exactly one of 'checker' or 'sweep'");

  if (has_sweep) {
    cfg.kind = RunKind::sweep;
    if (root["params"]) fail(root["params"], "'params' applies to checker runs only");
    cfg.sweep = parse_sweep(root["sweep"], root);
    return cfg;
  }

  cfg.kind = RunKind::verify;
  cfg.checker = as_string(root["checker"], "checker");
  const auto& table = checker_table();
  const auto it = std::find_if(table.begin(), table.end(), [&](const CheckerInfo& c) { return c.id == cfg.checker; });
  if (it == table.end()) {
    std::string list;
    for (const CheckerInfo& c : table) list += (list.empty() ? "" : ", ") + c.id;
    fail(root["checker"], "unknown checker '" + cfg.checker + "' (expected one of " + list + ")");
  }

  const YAML::Node bodies = required(root, "bodies", "config");
  require_map(bodies, "bodies");
  reject_unknown(bodies, {"K", "L"}, "bodies");
  cfg.K = parse_body(required(bodies, "K", "bodies"), "K");
  if (it->needs_L) {
    cfg.L = parse_body(required(bodies, "L", "bodies (checker " + cfg.checker + ")"), "L");
    if (cfg.L->dim() != cfg.K->dim()) fail(bodies["L"], "bodies K and L have different dimensions");
  } else if (bodies["L"]) {
    fail(bodies["L"], "checker " + cfg.checker + " uses body K only");
  }
  parse_params(root["params"], *it, cfg, root);
  return cfg;
}

BodyPtr body_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("body descriptor must be an object with a kind");
  const std::string kind = j.at("kind").get<std::string>();
  auto vec = [](const json& a) {
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
  };
  auto mat = [&](const json& a) {
    Mat m(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vec(a[i]).transpose();
    return m;
  };
  if (kind == "ball") return std::make_shared<Ball>(vec(j.at("center")), j.at("radius").get<double>());
  if (kind == "ellipsoid") return std::make_shared<Ellipsoid>(vec(j.at("center")), mat(j.at("shape")));
  if (kind == "polytope") {
    std::vector<Vec> pts;
    for (const json& v : j.at("vertices")) pts.push_back(vec(v));
    return std::make_shared<PolytopeV>(pts);
  }
  if (kind == "perturbed-ball") {
    std::vector<HarmonicMode> modes;
    for (const json& m : j.at("modes")) {
      HarmonicMode h;
      h.l = m.value("l", 0);
      h.m = m.at("m").get<int>();
      h.coef = m.at("coef").get<double>();
      modes.push_back(h);
    }
    return std::make_shared<PerturbedBall>(vec(j.at("center")), j.at("radius").get<double>(),
                                           j.at("amplitude").get<double>(), modes);
  }
  if (kind == "affine") return std::make_shared<AffineBody>(body_from_json(j.at("parent")), mat(j.at("linear")), vec(j.at("shift")));
  throw InputError("cannot rebuild a body of kind '" + kind + "'");
}

}  // namespace tomo
