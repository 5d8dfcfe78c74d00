#pragma once

// Experiment protocols behind the hgbench subcommands. Each run returns rows
// already in their final order; writers emit RFC-4180 CSV.

#include "hg/bench/config.hpp"
#include "hg/eqm.hpp"
#include "hg/problem_suite.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hg::bench {

struct RunOptions {
  int threads = 1;
  bool timing = true;  // false writes wall_ms = 0 so files compare byte for byte
};

/// Data seed is cfg.seed; lambda samples come from a second stream.
std::uint64_t lambda_stream_seed(std::uint64_t seed);

/// One hypergradient estimate with the lower solver the experiment uses.
/// ITD and AID-FP differentiate the chosen map; AID-CG and AID-CGN solve the
/// symmetric gradient-descent system at the lower iterate w_t.
struct Estimate {
  Vec grad;
  Vec w_t;
};
Estimate estimate_hypergrad(const SuiteProblem& sp, LowerSolver lower, Method method, const Vec& lam, int t, int k,
                            const Vec& w0);

struct ConvergenceRecord {
  std::string problem;
  std::string method;
  int t = 0;
  int k = 0;
  std::uint64_t seed = 0;
  int lambda_id = 0;
  double err = 0.0;
  double wall_ms = 0.0;
};

const std::vector<std::string>& approx_error_header();
std::vector<ConvergenceRecord> run_approx_error(const ExperimentConfig& cfg, const RunOptions& opts);
void write_approx_error_csv(const std::vector<ConvergenceRecord>& rows, std::ostream& out);

struct BilevelRow {
  std::string problem;
  std::string method;
  int zeta_id = 0;
  double zeta = 0.0;
  int step = 0;
  double approx_obj = 0.0;  // f_t(lam_s)
  double true_obj = 0.0;    // f(lam_s), NaN when unavailable
  double grad_norm = 0.0;
  bool diverged = false;
};

struct BilevelSummary {
  std::string method;
  int best_zeta_id = -1;  // -1 when every step size diverged
  double best_zeta = 0.0;
  double initial_obj = 0.0;
  double final_obj = 0.0;
  double final_true_obj = 0.0;
  int n_diverged = 0;
};

struct BilevelResult {
  std::vector<BilevelRow> rows;
  std::vector<BilevelSummary> summary;
};

/// Step-size grid: lr_grid when given, else n_zeta log-spaced points in
/// zeta_range.
std::vector<double> bilevel_grid(const ExperimentConfig& cfg);
BilevelResult run_bilevel(const ExperimentConfig& cfg, const RunOptions& opts);
void write_bilevel_csv(const std::vector<BilevelRow>& rows, std::ostream& out);
void write_bilevel_summary_csv(const std::vector<BilevelSummary>& rows, std::ostream& out);

struct BoundsRow {
  int lambda_id = 0;
  int t = 0;
  int k = 0;
  double q = 0.0;
  double err_itd = 0.0;
  double itd_bound = 0.0;
  double err_aid_fp = 0.0;
  double aid_fp_bound = 0.0;
  double err_aid_cg = 0.0;
  double aid_cg_bound = 0.0;
  [[nodiscard]] bool itd_valid() const { return err_itd <= itd_bound; }
  [[nodiscard]] bool aid_fp_valid() const { return err_aid_fp <= aid_fp_bound; }
  [[nodiscard]] bool aid_cg_valid() const { return err_aid_cg <= aid_cg_bound; }
};

/// Relative error bound for k CG steps on a system whose spectrum lies in
/// [1-q, 1+q]: 2 sqrt(kappa) ((sqrt(kappa)-1)/(sqrt(kappa)+1))^k.
double cg_sigma(double q, int k);

std::vector<BoundsRow> run_bounds(const ExperimentConfig& cfg, const RunOptions& opts);
void write_bounds_csv(const std::vector<BoundsRow>& rows, std::ostream& out);

struct EqmRun {
  Method method = Method::AID_FP;
  bool project = true;
  int lr_id = 0;
  double lr = 0.0;
  std::string file;  // relative to the output directory
  EqmTrainLog log;
};

/// Learning rates: lr_grid when given, else 10 log-spaced points in [1e-4, 1].
std::vector<double> eqm_lr_grid(const ExperimentConfig& cfg);
EqmTrainConfig eqm_train_config(const ExperimentConfig& cfg, Method method, bool project, double lr);
std::vector<EqmRun> run_eqm(const ExperimentConfig& cfg, const RunOptions& opts);
void write_eqm_log_csv(const EqmTrainLog& log, std::ostream& out);
void write_eqm_summary_csv(const std::vector<EqmRun>& runs, std::ostream& out);

/// Runs a subcommand end to end and writes its files. out_path is a file for
/// approx-error, bilevel and bounds (bilevel adds <stem>.summary.csv) and a
/// directory for eqm. Returns the paths written.
std::vector<std::string> cmd_approx_error(const ExperimentConfig& cfg, const RunOptions& opts);
std::vector<std::string> cmd_bilevel(const ExperimentConfig& cfg, const RunOptions& opts);
std::vector<std::string> cmd_bounds(const ExperimentConfig& cfg, const RunOptions& opts);
std::vector<std::string> cmd_eqm(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace hg::bench
