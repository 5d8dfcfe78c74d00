#include "hg/bench/experiments.hpp"

#include "hg/bench/parallel.hpp"
#include "hg/bounds.hpp"
#include "hg/csv.hpp"
#include "hg/error.hpp"
#include "hg/hypergrad.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace hg::bench {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string method_name(Method m) { return std::string(to_string(m)); }

std::string flag(bool b) { return b ? "true" : "false"; }

ProblemKind synthetic_kind(const ExperimentConfig& cfg) {
  const auto kind = parse_problem_kind(cfg.problem);
  if (!kind) throw Error(Errc::ConfigError, fmt::format("'{}' is not a synthetic problem", cfg.problem));
  return *kind;
}

struct Setup {
  ProblemConfig pc;
  SynthData data;
  SuiteProblem sp;
  LowerSolver lower = LowerSolver::GradientDescent;
  std::vector<Vec> lambdas;
};

Setup make_setup(const ExperimentConfig& cfg, int n_lambdas) {
  Setup s;
  const ProblemKind kind = synthetic_kind(cfg);
  s.pc = problem_config(cfg);
  s.data = gen_data(kind, cfg.seed, cfg.noise, s.pc.shape);
  s.sp = make_problem(s.data, s.pc);
  s.lower = cfg.lower.value_or(default_lower_solver(kind));
  Rng rng(lambda_stream_seed(cfg.seed));
  s.lambdas = sample_lambdas(s.pc, n_lambdas, rng);
  return s;
}

std::vector<Method> methods_or(const ExperimentConfig& cfg, std::vector<Method> fallback) {
  return cfg.methods.empty() ? std::move(fallback) : cfg.methods;
}

std::ofstream open_output(const std::string& path) {
  if (path.empty()) throw Error(Errc::ConfigError, "no output path: set out_path or pass --out");
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, fmt::format("cannot write '{}'", path));
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(Errc::IoError, fmt::format("write to '{}' failed", path));
}

}  // namespace

std::uint64_t lambda_stream_seed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

Estimate estimate_hypergrad(const SuiteProblem& sp, LowerSolver lower, Method method, const Vec& lam, int t, int k,
                            const Vec& w0) {
  const bool hb = lower == LowerSolver::HeavyBall;
  const BilevelProblem& p = hb ? sp.hb : sp.gd;
  const Vec start = hb ? heavy_ball_lift(w0) : w0;
  auto head = [hb](const Vec& s) { return hb ? heavy_ball_head(s) : s; };

  switch (method) {
    case Method::ITD: {
      const Trajectory traj = iterate(p, lam, t, start);
      return {itd(p, lam, traj).grad, head(traj.last())};
    }
    case Method::AID_FP: {
      const Vec w_t = iterate_last(p, lam, t, start);
      return {aid_at(p, lam, w_t, k, AdjointSolver::FP).first.grad, head(w_t)};
    }
    case Method::AID_CG:
    case Method::AID_CGNORMAL: {
      const Vec w_t = head(iterate_last(p, lam, t, start));
      const auto solver = method == Method::AID_CG ? AdjointSolver::CG : AdjointSolver::CGNORMAL;
      return {aid_at(sp.gd, lam, w_t, k, solver).first.grad, w_t};
    }
    default:
      throw Error(Errc::InvalidArgument, "estimate_hypergrad: not an approximate method");
  }
}

// ---------------------------------------------------------------- approx-error

const std::vector<std::string>& approx_error_header() {
  static const std::vector<std::string> h{"problem", "method", "t", "k", "seed", "lambda_id", "err", "wall_ms"};
  return h;
}

std::vector<ConvergenceRecord> run_approx_error(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Setup s = make_setup(cfg, cfg.n_lambdas);
  const auto methods = methods_or(cfg, {Method::ITD, Method::AID_FP, Method::AID_CG});
  const std::string problem(to_string(s.sp.kind));

  std::vector<int> ts;
  for (int t = 1; t <= cfg.t_max; t += cfg.t_stride) ts.push_back(t);
  if (ts.back() != cfg.t_max) ts.push_back(cfg.t_max);

  std::vector<std::vector<ConvergenceRecord>> per_lambda(s.lambdas.size());
  parallel_for(s.lambdas.size(), opts.threads, [&](std::size_t id) {
    const Vec& lam = s.lambdas[id];
    const Vec ref = reference_hypergrad(s.sp, lam).grad;
    const Vec w0 = Vec::Zero(s.sp.gd.dim_w);
    auto& rows = per_lambda[id];
    for (Method m : methods) {
      for (int t : ts) {
        const int k = cfg.k_for(t);
        const auto start = Clock::now();
        const Estimate e = estimate_hypergrad(s.sp, s.lower, m, lam, t, k, w0);
        const double ms = opts.timing ? elapsed_ms(start) : 0.0;
        rows.push_back({problem, method_name(m), t, k, cfg.seed, static_cast<int>(id), (e.grad - ref).norm(), ms});
      }
    }
  });

  std::vector<ConvergenceRecord> out;
  for (Method m : methods) {
    for (auto& rows : per_lambda) {
      for (auto& r : rows) {
        if (r.method == to_string(m)) out.push_back(r);
      }
    }
  }
  // Stable key order: method (config order), then t, then lambda_id.
  std::stable_sort(out.begin(), out.end(), [&](const ConvergenceRecord& a, const ConvergenceRecord& b) {
    auto rank = [&](const std::string& name) {
      return std::find_if(methods.begin(), methods.end(), [&](Method m) { return to_string(m) == name; }) -
             methods.begin();
    };
    if (a.method != b.method) return rank(a.method) < rank(b.method);
    if (a.t != b.t) return a.t < b.t;
    return a.lambda_id < b.lambda_id;
  });
  return out;
}

void write_approx_error_csv(const std::vector<ConvergenceRecord>& rows, std::ostream& out) {
  CsvWriter w(out);
  w.header(approx_error_header());
  for (const auto& r : rows) {
    w.row({r.problem, r.method, std::to_string(r.t), std::to_string(r.k), std::to_string(r.seed),
           std::to_string(r.lambda_id), format_double(r.err), format_double(r.wall_ms)});
  }
}

// ---------------------------------------------------------------- bilevel

std::vector<double> bilevel_grid(const ExperimentConfig& cfg) {
  if (!cfg.lr_grid.empty()) return cfg.lr_grid;
  return log_grid(cfg.zeta_lo, cfg.zeta_hi, cfg.n_zeta);
}

BilevelResult run_bilevel(const ExperimentConfig& cfg, const RunOptions& opts) {
  const Setup s = make_setup(cfg, 1);
  const auto methods = methods_or(cfg, {Method::ITD, Method::AID_FP, Method::AID_CG});
  const auto grid = bilevel_grid(cfg);
  const int t = cfg.t.value_or(100);
  const int k = cfg.k_for(t);
  const int steps = cfg.steps.value_or(500);
  const std::string problem(to_string(s.sp.kind));
  const Vec lam0 = s.lambdas.front();
  // LR and KRR weights must stay positive; keep them inside the sampling box.
  const bool clamp = s.sp.kind == ProblemKind::LR || s.sp.kind == ProblemKind::KRR;
  const bool has_truth = static_cast<bool>(s.sp.gd.exact_fixed_point);

  const std::size_t n_runs = methods.size() * grid.size();
  std::vector<std::vector<BilevelRow>> runs(n_runs);
  parallel_for(n_runs, opts.threads, [&](std::size_t idx) {
    const Method m = methods[idx / grid.size()];
    const int zid = static_cast<int>(idx % grid.size());
    const double zeta = grid[static_cast<std::size_t>(zid)];
    auto& rows = runs[idx];
    Vec lam = lam0;
    Vec w0 = Vec::Zero(s.sp.gd.dim_w);
    for (int step = 0; step <= steps; ++step) {
      BilevelRow row{problem, method_name(m), zid, zeta, step, 0.0, std::numeric_limits<double>::quiet_NaN(), 0.0,
                     false};
      try {
        const Estimate e = estimate_hypergrad(s.sp, s.lower, m, lam, t, k, w0);
        row.approx_obj = s.sp.gd.outer_E(e.w_t, lam);
        row.grad_norm = e.grad.norm();
        if (has_truth) row.true_obj = upper_objective(s.sp.gd, lam);
        if (!std::isfinite(row.approx_obj) || !all_finite(e.grad)) throw Error(Errc::Diverged, "non-finite");
        rows.push_back(row);
        if (step == steps) break;
        lam -= zeta * e.grad;
        if (clamp) lam = lam.cwiseMax(s.pc.lambda_lo).cwiseMin(s.pc.lambda_hi);
        if (!all_finite(lam) || lam.norm() > kDivergenceThreshold) throw Error(Errc::Diverged, "lambda blew up");
        if (cfg.warm_start) w0 = e.w_t;
      } catch (const Error& err) {
        if (err.code() != Errc::Diverged && err.code() != Errc::InvalidConstants) throw;
        row.approx_obj = std::numeric_limits<double>::quiet_NaN();
        row.true_obj = std::numeric_limits<double>::quiet_NaN();
        row.grad_norm = std::numeric_limits<double>::quiet_NaN();
        row.diverged = true;
        if (rows.empty() || rows.back().step != step) {
          rows.push_back(row);
        } else {
          rows.back().diverged = true;
        }
        break;
      }
    }
  });

  BilevelResult result;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    BilevelSummary sum;
    sum.method = method_name(methods[mi]);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t z = 0; z < grid.size(); ++z) {
      const auto& rows = runs[mi * grid.size() + z];
      if (!rows.empty() && z == 0) sum.initial_obj = rows.front().approx_obj;
      const bool div = rows.empty() || rows.back().diverged;
      if (div) {
        ++sum.n_diverged;
      } else if (rows.back().approx_obj < best) {
        best = rows.back().approx_obj;
        sum.best_zeta_id = static_cast<int>(z);
        sum.best_zeta = grid[z];
        sum.final_obj = rows.back().approx_obj;
        sum.final_true_obj = rows.back().true_obj;
      }
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    if (sum.best_zeta_id < 0) {
      sum.final_obj = std::numeric_limits<double>::quiet_NaN();
      sum.final_true_obj = std::numeric_limits<double>::quiet_NaN();
    }
    result.summary.push_back(sum);
  }
  return result;
}

void write_bilevel_csv(const std::vector<BilevelRow>& rows, std::ostream& out) {
  CsvWriter w(out);
  w.header({"problem", "method", "zeta_id", "zeta", "step", "approx_obj", "true_obj", "grad_norm", "diverged"});
  for (const auto& r : rows) {
    w.row({r.problem, r.method, std::to_string(r.zeta_id), format_double(r.zeta), std::to_string(r.step),
           format_double(r.approx_obj), format_double(r.true_obj), format_double(r.grad_norm), flag(r.diverged)});
  }
}

void write_bilevel_summary_csv(const std::vector<BilevelSummary>& rows, std::ostream& out) {
  CsvWriter w(out);
  w.header({"method", "best_zeta_id", "best_zeta", "initial_obj", "final_obj", "final_true_obj", "n_diverged"});
  for (const auto& r : rows) {
    w.row({r.method, std::to_string(r.best_zeta_id), format_double(r.best_zeta), format_double(r.initial_obj),
           format_double(r.final_obj), format_double(r.final_true_obj), std::to_string(r.n_diverged)});
  }
}

// ---------------------------------------------------------------- bounds

double cg_sigma(double q, int k) {
  const double kappa = (1.0 + q) / (1.0 - q);
  const double sk = std::sqrt(kappa);
  return 2.0 * sk * std::pow((sk - 1.0) / (sk + 1.0), k);
}

std::vector<BoundsRow> run_bounds(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (synthetic_kind(cfg) != ProblemKind::BR) throw Error(Errc::ConfigError, "bounds needs problem \"BR\"");
  if (cfg.lower && *cfg.lower != LowerSolver::GradientDescent)
    throw Error(Errc::ConfigError, "bounds are evaluated for the gradient-descent map only");
  const Setup s = make_setup(cfg, cfg.n_lambdas);
  const BiasedRegressionData br{s.data.X, s.data.y, s.data.Xv, s.data.yv, s.pc.beta};

  std::vector<int> ts;
  for (int t = 1; t <= cfg.t_max; t += cfg.t_stride) ts.push_back(t);
  if (ts.back() != cfg.t_max) ts.push_back(cfg.t_max);

  std::vector<std::vector<BoundsRow>> per_lambda(s.lambdas.size());
  parallel_for(s.lambdas.size(), opts.threads, [&](std::size_t id) {
    const Vec& lam = s.lambdas[id];
    const BrAnalysis an = constants_for_quadratic_br(br, lam);
    const BoundCoefficients coef = coefficients(an.constants);
    const Vec truth = s.sp.closed_form_hypergrad(lam);
    const Vec w0 = Vec::Zero(s.sp.gd.dim_w);
    for (int t : ts) {
      const int k = cfg.k_for(t);
      BoundsRow r;
      r.lambda_id = static_cast<int>(id);
      r.t = t;
      r.k = k;
      r.q = coef.q;
      r.err_itd = (itd(s.sp.gd, lam, t, w0).grad - truth).norm();
      r.itd_bound = itd_bound(coef, t);
      r.err_aid_fp = (aid(s.sp.gd, lam, t, k, AdjointSolver::FP, w0).first.grad - truth).norm();
      r.aid_fp_bound = aid_fp_bound(coef, t, k);
      r.err_aid_cg = (aid(s.sp.gd, lam, t, k, AdjointSolver::CG, w0).first.grad - truth).norm();
      r.aid_cg_bound = aid_bound(coef, std::pow(coef.q, t), cg_sigma(coef.q, k));
      per_lambda[id].push_back(r);
    }
  });

  std::vector<BoundsRow> out;
  for (auto& rows : per_lambda) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

void write_bounds_csv(const std::vector<BoundsRow>& rows, std::ostream& out) {
  CsvWriter w(out);
  w.header({"problem", "lambda_id", "t", "k", "q", "err_itd", "itd_bound", "itd_valid", "err_aid_fp", "aid_fp_bound",
            "aid_fp_valid", "err_aid_cg", "aid_cg_bound", "aid_cg_valid"});
  for (const auto& r : rows) {
    w.row({"BR", std::to_string(r.lambda_id), std::to_string(r.t), std::to_string(r.k), format_double(r.q),
           format_double(r.err_itd), format_double(r.itd_bound), flag(r.itd_valid()), format_double(r.err_aid_fp),
           format_double(r.aid_fp_bound), flag(r.aid_fp_valid()), format_double(r.err_aid_cg),
           format_double(r.aid_cg_bound), flag(r.aid_cg_valid())});
  }
}

// ---------------------------------------------------------------- eqm

std::vector<double> eqm_lr_grid(const ExperimentConfig& cfg) {
  if (!cfg.lr_grid.empty()) return cfg.lr_grid;
  return log_grid(1e-4, 1.0, 10);
}

EqmTrainConfig eqm_train_config(const ExperimentConfig& cfg, Method method, bool project, double lr) {
  EqmTrainConfig tc;
  tc.shape.hidden = cfg.eqm.hidden;
  tc.shape.inputs = cfg.eqm.inputs;
  tc.n_train = cfg.eqm.n_train;
  tc.n_test = cfg.eqm.n_test;
  tc.separation = cfg.eqm.separation;
  tc.eps = cfg.eqm.eps;
  tc.momentum = cfg.eqm.momentum;
  tc.project = project;
  tc.method = method;
  tc.t = cfg.t.value_or(20);
  tc.k = cfg.k_for(tc.t);
  tc.lr = lr;
  tc.steps = cfg.steps.value_or(300);
  tc.seed = cfg.seed;
  return tc;
}

std::vector<EqmRun> run_eqm(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto methods = methods_or(cfg, {Method::ITD, Method::AID_FP, Method::AID_CGNORMAL});
  for (Method m : methods) {
    if (m == Method::AID_CG)
      throw Error(Errc::ConfigError, "eqm: d1Phi is not symmetric, use \"aid-cgn\" instead of \"aid-cg\"");
  }
  const auto grid = eqm_lr_grid(cfg);
  std::vector<EqmRun> runs;
  for (Method m : methods) {
    for (bool project : cfg.eqm.project) {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        EqmRun r;
        r.method = m;
        r.project = project;
        r.lr_id = static_cast<int>(i);
        r.lr = grid[i];
        r.file = fmt::format("eqm_{}_{}_lr{:02d}.csv", to_string(m), project ? "proj" : "noproj", i);
        runs.push_back(std::move(r));
      }
    }
  }
  parallel_for(runs.size(), opts.threads, [&](std::size_t i) {
    auto& r = runs[i];
    r.log = eqm_train(eqm_train_config(cfg, r.method, r.project, r.lr));
  });
  return runs;
}

void write_eqm_log_csv(const EqmTrainLog& log, std::ostream& out) {
  CsvWriter w(out);
  w.header({"step", "loss", "test_acc", "grad_norm", "spectral_norm_A"});
  for (const auto& r : log.records) {
    w.row({std::to_string(r.step), format_double(r.loss), format_double(r.test_acc), format_double(r.grad_norm),
           format_double(r.spectral_norm_A)});
  }
}

void write_eqm_summary_csv(const std::vector<EqmRun>& runs, std::ostream& out) {
  CsvWriter w(out);
  w.header({"method", "project", "lr_id", "lr", "steps_completed", "final_loss", "final_test_acc", "best_test_acc",
            "max_grad_norm", "max_spectral_norm_A", "diverged", "file"});
  for (const auto& r : runs) {
    double best_acc = 0.0;
    double max_grad = 0.0;
    double max_sn = 0.0;
    bool finite = true;
    for (const auto& rec : r.log.records) {
      best_acc = std::max(best_acc, rec.test_acc);
      if (!std::isfinite(rec.grad_norm) || !std::isfinite(rec.spectral_norm_A)) finite = false;
      max_grad = std::max(max_grad, rec.grad_norm);
      max_sn = std::max(max_sn, rec.spectral_norm_A);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto& last = r.log.records.empty() ? EqmStepRecord{-1, nan, nan, nan, nan} : r.log.records.back();
    w.row({std::string(to_string(r.method)), flag(r.project), std::to_string(r.lr_id), format_double(r.lr),
           std::to_string(last.step), format_double(last.loss), format_double(last.test_acc),
           format_double(best_acc), format_double(finite ? max_grad : nan), format_double(finite ? max_sn : nan),
           flag(r.log.diverged), r.file});
  }
}

// ---------------------------------------------------------------- commands

std::vector<std::string> cmd_approx_error(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto rows = run_approx_error(cfg, opts);
  auto out = open_output(cfg.out_path);
  write_approx_error_csv(rows, out);
  finish(out, cfg.out_path);
  return {cfg.out_path};
}

std::vector<std::string> cmd_bilevel(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto result = run_bilevel(cfg, opts);
  auto out = open_output(cfg.out_path);
  write_bilevel_csv(result.rows, out);
  finish(out, cfg.out_path);
  fs::path summary_path(cfg.out_path);
  summary_path.replace_extension(".summary.csv");
  auto sout = open_output(summary_path.string());
  write_bilevel_summary_csv(result.summary, sout);
  finish(sout, summary_path.string());
  return {cfg.out_path, summary_path.string()};
}

std::vector<std::string> cmd_bounds(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto rows = run_bounds(cfg, opts);
  auto out = open_output(cfg.out_path);
  write_bounds_csv(rows, out);
  finish(out, cfg.out_path);
  return {cfg.out_path};
}

std::vector<std::string> cmd_eqm(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (cfg.out_path.empty()) throw Error(Errc::ConfigError, "no output directory: set out_path or pass --out");
  const auto runs = run_eqm(cfg, opts);
  const fs::path dir(cfg.out_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error(Errc::IoError, fmt::format("cannot create directory '{}'", cfg.out_path));
  std::vector<std::string> written;
  for (const auto& r : runs) {
    const std::string path = (dir / r.file).string();
    auto out = open_output(path);
    write_eqm_log_csv(r.log, out);
    finish(out, path);
    written.push_back(path);
  }
  const std::string summary = (dir / "summary.csv").string();
  auto out = open_output(summary);
  write_eqm_summary_csv(runs, out);
  finish(out, summary);
  written.push_back(summary);
  return written;
}

}  // namespace hg::bench
