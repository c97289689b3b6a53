#include "bgs/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "bgs/errors.hpp"
#include "bgs/oracles.hpp"

namespace bgs::config {

using nlohmann::json;

namespace {

class Checker {
 public:
  void error(const std::string& path, const std::string& what) { errors_.push_back(path + ": " + what); }

  // Rejects keys outside `allowed`; returns false when `node` is not an object.
  bool object(const json& node, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!node.is_object()) {
      error(path, "expected an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : node.items()) {
      if (!ok.count(key)) error(path + "." + key, "unknown key");
    }
    return true;
  }

  void number(const json& node, const char* key, const std::string& path, double& out, double lo, double hi,
              bool open_lo = false) {
    if (!node.contains(key)) return;
    const json& v = node.at(key);
    const std::string p = path + "." + key;
    if (!v.is_number()) {
      error(p, "expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo)) {
      std::ostringstream os;
      os << "value " << x << " outside " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
      error(p, os.str());
      return;
    }
    out = x;
  }

  void integer(const json& node, const char* key, const std::string& path, std::size_t& out, std::size_t lo,
               std::size_t hi) {
    if (!node.contains(key)) return;
    const json& v = node.at(key);
    const std::string p = path + "." + key;
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      error(p, "expected a nonnegative integer");
      return;
    }
    const auto x = v.get<unsigned long long>();
    if (x < lo || x > hi) {
      error(p, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return;
    }
    out = static_cast<std::size_t>(x);
  }

  void boolean(const json& node, const char* key, const std::string& path, bool& out) {
    if (!node.contains(key)) return;
    if (!node.at(key).is_boolean()) {
      error(path + "." + key, "expected true or false");
      return;
    }
    out = node.at(key).get<bool>();
  }

  void string(const json& node, const char* key, const std::string& path, std::string& out) {
    if (!node.contains(key)) return;
    if (!node.at(key).is_string()) {
      error(path + "." + key, "expected a string");
      return;
    }
    out = node.at(key).get<std::string>();
  }

  void raise() const {
    if (errors_.empty()) return;
    std::string msg = "invalid configuration (" + std::to_string(errors_.size()) + " problem" +
                      (errors_.size() == 1 ? "" : "s") + "): ";
    for (std::size_t i = 0; i < errors_.size(); ++i) msg += (i ? "; " : "") + errors_[i];
    throw ConfigError(msg);
  }

  [[nodiscard]] bool ok() const { return errors_.empty(); }

 private:
  std::vector<std::string> errors_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

std::optional<coefficients::Law> parse_law(Checker& c, const json& node, const std::string& path) {
  if (!node.is_object() || !node.contains("kind") || !node.at("kind").is_string()) {
    c.error(path, "expected an object with a string \"kind\"");
    return std::nullopt;
  }
  const std::string kind = node.at("kind").get<std::string>();
  auto require = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (!node.contains(k)) c.error(path + "." + k, "required for kind " + kind);
    }
  };
  coefficients::Law law;
  if (kind == "constant") {
    c.object(node, path, {"kind", "value"});
    require({"value"});
    c.number(node, "value", path, law.value, 0.0, kInf, true);
    return coefficients::Law::constant(law.value);
  }
  if (kind == "clamped_affine") {
    c.object(node, path, {"kind", "offset", "slope", "lower", "upper"});
    require({"offset", "slope", "lower", "upper"});
    c.number(node, "offset", path, law.offset, -kInf, kInf);
    c.number(node, "slope", path, law.slope, -kInf, kInf);
    c.number(node, "lower", path, law.lower, 0.0, kInf, true);
    c.number(node, "upper", path, law.upper, 0.0, kInf, true);
    if (law.lower > law.upper) c.error(path, "lower exceeds upper");
    return coefficients::Law::clamped_affine(law.offset, law.slope, law.lower, law.upper);
  }
  if (kind == "tanh_blend") {
    c.object(node, path, {"kind", "lower", "upper"});
    require({"lower", "upper"});
    c.number(node, "lower", path, law.lower, 0.0, kInf, true);
    c.number(node, "upper", path, law.upper, 0.0, kInf, true);
    if (law.lower > law.upper) c.error(path, "lower exceeds upper");
    return coefficients::Law::tanh_blend(law.lower, law.upper);
  }
  c.error(path + ".kind", "unknown kind '" + kind + "' (constant, clamped_affine, tanh_blend)");
  return std::nullopt;
}

void parse_coefficients(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "coefficients";
  if (!c.object(node, path, {"viscosity", "conductivity", "bounds", "lipschitz"})) return;
  std::optional<coefficients::Law> visc = coefficients::Law::constant(1.0);
  std::optional<coefficients::Law> cond = coefficients::Law::constant(1.0);
  if (node.contains("viscosity")) visc = parse_law(c, node.at("viscosity"), path + ".viscosity");
  if (node.contains("conductivity")) cond = parse_law(c, node.at("conductivity"), path + ".conductivity");
  if (!visc || !cond || !c.ok()) return;

  double g0 = visc->natural_min(), g1 = visc->natural_max();
  double k0 = cond->natural_min(), k1 = cond->natural_max();
  double l1 = visc->natural_lipschitz(), l2 = cond->natural_lipschitz();
  if (node.contains("bounds")) {
    const json& b = node.at("bounds");
    if (c.object(b, path + ".bounds", {"gamma0", "gamma1", "k0", "k1"})) {
      c.number(b, "gamma0", path + ".bounds", g0, 0.0, kInf, true);
      c.number(b, "gamma1", path + ".bounds", g1, 0.0, kInf, true);
      c.number(b, "k0", path + ".bounds", k0, 0.0, kInf, true);
      c.number(b, "k1", path + ".bounds", k1, 0.0, kInf, true);
    }
  }
  if (node.contains("lipschitz")) {
    const json& l = node.at("lipschitz");
    if (c.object(l, path + ".lipschitz", {"l1", "l2"})) {
      c.number(l, "l1", path + ".lipschitz", l1, 0.0, kInf);
      c.number(l, "l2", path + ".lipschitz", l2, 0.0, kInf);
    }
  }
  if (!c.ok()) return;
  try {
    cfg.coefficients = coefficients::CoefficientModel(*visc, *cond, g0, g1, k0, k1, l1, l2);
  } catch (const ConfigError& e) {
    c.error(path, e.what());
  }
}

void parse_mesh(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "mesh";
  if (!c.object(node, path, {"nx", "ny", "gamma1_sides", "refinements"})) return;
  c.integer(node, "nx", path, cfg.mesh.nx, 1, 1024);
  c.integer(node, "ny", path, cfg.mesh.ny, 1, 1024);
  c.integer(node, "refinements", path, cfg.mesh.refinements, 0, 6);
  if (node.contains("gamma1_sides")) {
    const json& s = node.at("gamma1_sides");
    if (!s.is_array()) {
      c.error(path + ".gamma1_sides", "expected an array of side names");
      return;
    }
    mesh::SideSet sides;
    for (const auto& item : s) {
      if (!item.is_string()) {
        c.error(path + ".gamma1_sides", "expected side names (left, right, bottom, top)");
        continue;
      }
      try {
        sides.insert(mesh::parse_side(item.get<std::string>()));
      } catch (const ConfigError& e) {
        c.error(path + ".gamma1_sides", e.what());
      }
    }
    if (sides.empty() || sides.full()) {
      c.error(path + ".gamma1_sides", "Gamma1 and Gamma2 must both be nonempty");
    }
    cfg.mesh.gamma1_sides = sides;
  }
}

void parse_physics(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "physics";
  if (!c.object(node, path, {"beta", "gravity", "buoyancy_sign"})) return;
  c.number(node, "beta", path, cfg.physics.beta, 0.0, kInf);
  if (node.contains("gravity")) {
    const json& g = node.at("gravity");
    if (g.is_string()) {
      if (g.get<std::string>() == "constant_down") {
        cfg.physics.gravity = {0.0, -1.0};
      } else {
        c.error(path + ".gravity", "unknown named field '" + g.get<std::string>() + "' (constant_down)");
      }
    } else if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number() &&
               std::isfinite(g[0].get<double>()) && std::isfinite(g[1].get<double>())) {
      cfg.physics.gravity = {g[0].get<double>(), g[1].get<double>()};
    } else {
      c.error(path + ".gravity", "expected [gx, gy] or \"constant_down\"");
    }
  }
  if (node.contains("buoyancy_sign")) {
    double s = 0.0;
    c.number(node, "buoyancy_sign", path, s, -1.0, 1.0);
    if (s != 1.0 && s != -1.0) {
      c.error(path + ".buoyancy_sign", "must be +1 or -1");
    } else {
      cfg.physics.buoyancy_sign = s;
    }
  }
}

void parse_data(Checker& c, const json& node, RunConfig& cfg) {
  if (!c.object(node, "data", {"problem"})) return;
  std::string name = data_name(cfg.data);
  c.string(node, "problem", "data", name);
  if (name == "mms") {
    cfg.data = DataKind::Mms;
  } else if (name == "zero") {
    cfg.data = DataKind::Zero;
  } else if (name == "cavity_convection") {
    cfg.data = DataKind::CavityConvection;
  } else {
    c.error("data.problem", "unknown problem '" + name + "' (mms, zero, cavity_convection)");
  }
}

void parse_solver(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "solver";
  if (!c.object(node, path, {"picard_max", "picard_tol", "picard_enabled", "constants"})) return;
  c.integer(node, "picard_max", path, cfg.solver.picard_max, 1, 1000);
  c.number(node, "picard_tol", path, cfg.solver.picard_tol, 0.0, 1.0, true);
  c.boolean(node, "picard_enabled", path, cfg.solver.picard_enabled);
  if (!node.contains("constants")) return;
  const json& k = node.at("constants");
  if (k.is_string()) {
    if (k.get<std::string>() == "estimate") {
      cfg.estimate_constants = true;
    } else {
      c.error(path + ".constants", "expected an object or \"estimate\"");
    }
    return;
  }
  if (!c.object(k, path + ".constants", {"c1", "c1_prime", "d"})) return;
  c.number(k, "c1", path + ".constants", cfg.solver.constants.c1, 0.0, kInf, true);
  c.number(k, "c1_prime", path + ".constants", cfg.solver.constants.c1_prime, 0.0, kInf, true);
  c.number(k, "d", path + ".constants", cfg.solver.constants.d, 0.0, kInf, true);
}

void parse_output(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "output";
  if (!c.object(node, path, {"directory", "vtk_every", "csv_name"})) return;
  c.string(node, "directory", path, cfg.output.directory);
  c.integer(node, "vtk_every", path, cfg.output.vtk_every, 0, std::numeric_limits<std::size_t>::max());
  c.string(node, "csv_name", path, cfg.output.csv_name);
  if (cfg.output.directory.empty()) c.error(path + ".directory", "must not be empty");
  if (cfg.output.csv_name.empty() || cfg.output.csv_name.find('/') != std::string::npos) {
    c.error(path + ".csv_name", "must be a plain file name");
  }
}

void parse_study(Checker& c, const json& node, RunConfig& cfg) {
  const std::string path = "study";
  if (!c.object(node, path, {"levels", "delta", "trials", "expect_monotone"})) return;
  c.integer(node, "levels", path, cfg.study.levels, 0, 8);
  c.number(node, "delta", path, cfg.study.delta, 0.0, kInf);
  c.integer(node, "trials", path, cfg.study.trials, 0, 100000);
  c.boolean(node, "expect_monotone", path, cfg.study.expect_monotone);
}

}  // namespace

std::string data_name(DataKind kind) {
  switch (kind) {
    case DataKind::Mms: return "mms";
    case DataKind::Zero: return "zero";
    case DataKind::CavityConvection: return "cavity_convection";
  }
  return "?";
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  Checker c;
  RunConfig cfg;
  if (!c.object(root, "$", {"mesh", "coefficients", "physics", "data", "time", "solver", "output", "study"})) {
    c.raise();
  }
  if (root.contains("mesh")) parse_mesh(c, root.at("mesh"), cfg);
  if (root.contains("coefficients")) parse_coefficients(c, root.at("coefficients"), cfg);
  if (root.contains("physics")) parse_physics(c, root.at("physics"), cfg);
  if (root.contains("data")) parse_data(c, root.at("data"), cfg);
  if (root.contains("time")) {
    const json& t = root.at("time");
    if (c.object(t, "time", {"dt", "t_end"})) {
      c.number(t, "dt", "time", cfg.solver.dt, 0.0, kInf, true);
      c.number(t, "t_end", "time", cfg.solver.t_end, 0.0, kInf, true);
    }
  }
  if (root.contains("solver")) parse_solver(c, root.at("solver"), cfg);
  if (root.contains("output")) parse_output(c, root.at("output"), cfg);
  if (root.contains("study")) parse_study(c, root.at("study"), cfg);

  if (cfg.data == DataKind::Mms && !(cfg.mesh.gamma1_sides == mesh::SideSet{mesh::Side::Left})) {
    c.error("mesh.gamma1_sides", "the mms problem is manufactured for gamma1_sides = [\"left\"]");
  }
  if (cfg.solver.t_end / cfg.solver.dt > 1e7) c.error("time", "more than 10^7 steps requested");
  c.raise();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

mesh::Mesh build_mesh(const RunConfig& config) {
  mesh::Mesh m = mesh::build_rectangle_mesh(config.mesh.nx, config.mesh.ny, config.mesh.gamma1_sides);
  for (std::size_t i = 0; i < config.mesh.refinements; ++i) m = mesh::refine_uniform(m);
  return m;
}

solver::ProblemData build_problem(const RunConfig& config) {
  const auto& ph = config.physics;
  solver::ProblemData p;
  switch (config.data) {
    case DataKind::Mms:
      return oracles::MmsProblem(config.coefficients, ph.beta, ph.gravity, ph.buoyancy_sign).problem();
    case DataKind::Zero:
      p.coefficients = config.coefficients;
      p.beta = ph.beta;
      p.set_constant_gravity(ph.gravity);
      break;
    case DataKind::CavityConvection:
      p = oracles::make_cavity_problem(config.coefficients, ph.beta, ph.gravity);
      break;
  }
  p.buoyancy_sign = ph.buoyancy_sign;
  return p;
}

}  // namespace bgs::config
