#include "hg/bench/config.hpp"

#include "hg/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hg::bench {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(Errc::ConfigError, what); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) fail(fmt::format("unknown key '{}'{}", key, where));
  }
}

int get_int(const json& v, std::string_view key, int min_value) {
  if (!v.is_number_integer()) fail(fmt::format("'{}' must be an integer", key));
  const auto x = v.get<long long>();
  if (x < min_value || x > 1'000'000'000) fail(fmt::format("'{}' out of range: {}", key, x));
  return static_cast<int>(x);
}

double get_double(const json& v, std::string_view key) {
  if (!v.is_number()) fail(fmt::format("'{}' must be a number", key));
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(fmt::format("'{}' must be finite", key));
  return x;
}

double get_positive(const json& v, std::string_view key) {
  const double x = get_double(v, key);
  if (!(x > 0.0)) fail(fmt::format("'{}' must be positive", key));
  return x;
}

bool get_bool(const json& v, std::string_view key) {
  if (!v.is_boolean()) fail(fmt::format("'{}' must be a boolean", key));
  return v.get<bool>();
}

std::string get_string(const json& v, std::string_view key) {
  if (!v.is_string()) fail(fmt::format("'{}' must be a string", key));
  return v.get<std::string>();
}

void parse_shape(const json& obj, DataShape& shape) {
  if (!obj.is_object()) fail("'shape' must be an object");
  reject_unknown(obj, {"n_train", "n_val", "features", "hidden"}, " in 'shape'");
  if (obj.contains("n_train")) shape.n_train = get_int(obj["n_train"], "shape.n_train", 1);
  if (obj.contains("n_val")) shape.n_val = get_int(obj["n_val"], "shape.n_val", 1);
  if (obj.contains("features")) shape.features = get_int(obj["features"], "shape.features", 1);
  if (obj.contains("hidden")) shape.hidden = get_int(obj["hidden"], "shape.hidden", 1);
}

void parse_eqm(const json& obj, EqmSettings& eqm) {
  if (!obj.is_object()) fail("'eqm' must be an object");
  reject_unknown(obj, {"hidden", "inputs", "n_train", "n_test", "separation", "eps", "momentum", "project"},
                 " in 'eqm'");
  if (obj.contains("hidden")) eqm.hidden = get_int(obj["hidden"], "eqm.hidden", 1);
  if (obj.contains("inputs")) eqm.inputs = get_int(obj["inputs"], "eqm.inputs", 1);
  if (obj.contains("n_train")) eqm.n_train = get_int(obj["n_train"], "eqm.n_train", 1);
  if (obj.contains("n_test")) eqm.n_test = get_int(obj["n_test"], "eqm.n_test", 1);
  if (obj.contains("separation")) eqm.separation = get_double(obj["separation"], "eqm.separation");
  if (obj.contains("eps")) {
    eqm.eps = get_double(obj["eps"], "eqm.eps");
    if (!(eqm.eps > 0.0 && eqm.eps < 1.0)) fail("'eqm.eps' must lie in (0, 1)");
  }
  if (obj.contains("momentum")) {
    eqm.momentum = get_double(obj["momentum"], "eqm.momentum");
    if (eqm.momentum < 0.0 || eqm.momentum >= 1.0) fail("'eqm.momentum' must lie in [0, 1)");
  }
  if (obj.contains("project")) {
    const auto& p = obj["project"];
    eqm.project.clear();
    if (p.is_boolean()) {
      eqm.project.push_back(p.get<bool>());
    } else if (p.is_array() && !p.empty()) {
      for (const auto& e : p) eqm.project.push_back(get_bool(e, "eqm.project[]"));
    } else {
      fail("'eqm.project' must be a boolean or a non-empty array of booleans");
    }
  }
}

}  // namespace

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::ITD, Method::AID_FP, Method::AID_CG, Method::AID_CGNORMAL}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("config must be a JSON object");
  reject_unknown(doc,
                 {"problem", "methods", "t_max", "k_policy", "n_lambdas", "seed", "out_path", "lr_grid", "steps",
                  "warm_start", "lower", "shape", "beta", "noise", "t", "t_stride", "zeta_range", "n_zeta", "eqm"},
                 "");
  ExperimentConfig cfg;
  if (doc.contains("problem")) {
    cfg.problem = get_string(doc["problem"], "problem");
    if (!parse_problem_kind(cfg.problem) && cfg.problem != "EQM" && cfg.problem != "eqm")
      fail(fmt::format("unknown problem '{}'", cfg.problem));
  }
  if (doc.contains("methods")) {
    const auto& ms = doc["methods"];
    if (!ms.is_array() || ms.empty()) fail("'methods' must be a non-empty array");
    cfg.methods.clear();
    for (const auto& m : ms) {
      const auto name = get_string(m, "methods[]");
      const auto parsed = parse_method(name);
      if (!parsed) fail(fmt::format("unknown method '{}'", name));
      cfg.methods.push_back(*parsed);
    }
  }
  if (doc.contains("t_max")) cfg.t_max = get_int(doc["t_max"], "t_max", 1);
  if (doc.contains("k_policy")) {
    const auto& k = doc["k_policy"];
    if (k.is_string()) {
      if (k.get<std::string>() != "equal_t") fail("'k_policy' must be \"equal_t\" or a positive integer");
      cfg.k_fixed.reset();
    } else {
      cfg.k_fixed = get_int(k, "k_policy", 1);
    }
  }
  if (doc.contains("n_lambdas")) cfg.n_lambdas = get_int(doc["n_lambdas"], "n_lambdas", 1);
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      fail("'seed' must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("out_path")) cfg.out_path = get_string(doc["out_path"], "out_path");
  if (doc.contains("lr_grid")) {
    const auto& g = doc["lr_grid"];
    if (!g.is_array() || g.empty()) fail("'lr_grid' must be a non-empty array");
    for (const auto& x : g) cfg.lr_grid.push_back(get_positive(x, "lr_grid[]"));
  }
  if (doc.contains("steps")) cfg.steps = get_int(doc["steps"], "steps", 0);
  if (doc.contains("warm_start")) cfg.warm_start = get_bool(doc["warm_start"], "warm_start");
  if (doc.contains("lower")) {
    const auto name = get_string(doc["lower"], "lower");
    if (name == "gd") {
      cfg.lower = LowerSolver::GradientDescent;
    } else if (name == "heavy_ball") {
      cfg.lower = LowerSolver::HeavyBall;
    } else {
      fail(fmt::format("'lower' must be \"gd\" or \"heavy_ball\", got '{}'", name));
    }
  }
  if (doc.contains("shape")) parse_shape(doc["shape"], cfg.shape);
  if (doc.contains("beta")) cfg.beta = get_positive(doc["beta"], "beta");
  if (doc.contains("noise")) {
    cfg.noise = get_double(doc["noise"], "noise");
    if (cfg.noise < 0.0) fail("'noise' must be non-negative");
  }
  if (doc.contains("t")) cfg.t = get_int(doc["t"], "t", 1);
  if (doc.contains("t_stride")) cfg.t_stride = get_int(doc["t_stride"], "t_stride", 1);
  if (doc.contains("zeta_range")) {
    const auto& z = doc["zeta_range"];
    if (!z.is_array() || z.size() != 2) fail("'zeta_range' must be [lo, hi]");
    cfg.zeta_lo = get_positive(z[0], "zeta_range[0]");
    cfg.zeta_hi = get_positive(z[1], "zeta_range[1]");
    if (cfg.zeta_lo > cfg.zeta_hi) fail("'zeta_range' must satisfy lo <= hi");
  }
  if (doc.contains("n_zeta")) cfg.n_zeta = get_int(doc["n_zeta"], "n_zeta", 1);
  if (doc.contains("eqm")) parse_eqm(doc["eqm"], cfg.eqm);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    fail(fmt::format("'{}' is not valid JSON (byte {})", path, e.byte));
  }
  return parse_config(doc);
}

ProblemConfig problem_config(const ExperimentConfig& cfg) {
  const auto kind = parse_problem_kind(cfg.problem);
  if (!kind) fail(fmt::format("'{}' is not a synthetic problem", cfg.problem));
  ProblemConfig pc = default_config(*kind);
  pc.shape = cfg.shape;
  if (cfg.beta) pc.beta = *cfg.beta;
  return pc;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) throw Error(Errc::InvalidArgument, "log_grid: need 0 < lo <= hi, n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (n - 1));
  out.back() = hi;
  return out;
}

}  // namespace hg::bench
