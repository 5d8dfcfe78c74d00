#pragma once

// Experiment configuration read from JSON. Unknown keys are rejected and
// every value is type-checked before any computation starts.

#include "hg/problem.hpp"
#include "hg/problem_suite.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hg::bench {

struct EqmSettings {
  Index hidden = 20;
  Index inputs = 10;
  Index n_train = 200;
  Index n_test = 200;
  double separation = 5.0;
  double eps = 1e-3;
  double momentum = 0.9;
  std::vector<bool> project{true, false};
};

struct ExperimentConfig {
  std::string problem = "BR";
  std::vector<Method> methods;  // empty: the command's default set
  int t_max = 100;
  std::optional<int> k_fixed;  // k_policy: nullopt means k = t
  int n_lambdas = 20;
  std::uint64_t seed = 0;
  std::string out_path;
  std::vector<double> lr_grid;  // bilevel step sizes, or EQM learning rates
  std::optional<int> steps;  // bilevel 500, EQM 300
  bool warm_start = false;

  // Optional refinements.
  std::optional<LowerSolver> lower;
  DataShape shape;
  std::optional<double> beta;
  double noise = 0.1;
  std::optional<int> t;  // inner iterations: bilevel 100, EQM 20
  int t_stride = 1;
  double zeta_lo = 1e-6;
  double zeta_hi = 10.0;
  int n_zeta = 30;
  EqmSettings eqm;

  [[nodiscard]] int k_for(int t_value) const { return k_fixed.value_or(t_value); }
};

std::optional<Method> parse_method(std::string_view name);

/// Throws Error(ConfigError) with a one-line reason.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Suite problem settings implied by the config (kind, beta, ranges, shape).
ProblemConfig problem_config(const ExperimentConfig& cfg);

/// n points evenly spaced in log10 between lo and hi, inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace hg::bench
