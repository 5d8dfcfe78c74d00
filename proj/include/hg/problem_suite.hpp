#pragma once

// Synthetic bilevel problems: logistic regression with per-feature l2
// penalties (LR), kernel ridge regression with a per-feature Gaussian
// bandwidth (KRR), biased regularization (BR) and hyper-representation (HR).

#include "hg/lower_solvers.hpp"
#include "hg/numkit.hpp"
#include "hg/problem.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace hg {

enum class ProblemKind { LR, KRR, BR, HR };

std::string_view to_string(ProblemKind kind);
std::optional<ProblemKind> parse_problem_kind(std::string_view name);

struct DataShape {
  Index n_train = 50;
  Index n_val = 50;
  Index features = 100;
  Index hidden = 200;  // HR only: H is features x hidden
};

struct SynthData {
  ProblemKind kind = ProblemKind::BR;
  Mat X;   // n_train x features
  Mat Xv;  // n_val x features
  Vec y;
  Vec yv;
  double noise = 0.1;
  std::uint64_t seed = 0;
  Vec w_star;
  Mat H_star;  // HR only
};

struct ProblemConfig {
  ProblemKind kind = ProblemKind::BR;
  double beta = 1.0;  // BR and HR
  double lambda_lo = -5.0;
  double lambda_hi = 5.0;
  DataShape shape;
};

/// Ranges LR [0.01, 10], KRR [0.0005, 0.005], BR [-5, 5], HR [-1, 1];
/// beta = 1 for BR and 10 for HR.
ProblemConfig default_config(ProblemKind kind);

/// Number of hyperparameters: LR p, KRR 1 + p (beta then gamma), BR p, HR p * hidden.
Index lambda_dim(ProblemKind kind, const DataShape& shape);

/// Draws X, Xv, w*, H* (HR), eps, eps' in that order from one generator and
/// builds targets: LR sign(X w* + m eps), KRR X w* + m eps,
/// BR X (w* + 1) + m eps, HR X H* w* + m eps.
SynthData gen_data(ProblemKind kind, std::uint64_t seed, double noise = 0.1, const DataShape& shape = {});

/// count vectors with i.i.d. U(lo, hi) components.
std::vector<Vec> sample_lambdas(const ProblemConfig& config, int count, Rng& rng);

enum class LowerSolver { GradientDescent, HeavyBall };

std::string_view to_string(LowerSolver solver);

struct SuiteProblem {
  ProblemKind kind = ProblemKind::BR;
  LowerObjective lower;
  OuterObjective outer;
  BilevelProblem gd;  // optimal-step gradient-descent map, symmetric d1Phi
  BilevelProblem hb;  // heavy-ball map on the stacked (w, w_prev) state
  DenseJacobians gd_jac;
  DenseJacobians hb_jac;
  std::function<Vec(const Vec&)> closed_form_hypergrad;  // BR only
};

SuiteProblem make_lr(const SynthData& data);
SuiteProblem make_krr(const SynthData& data);
SuiteProblem make_br(const SynthData& data, double beta);
SuiteProblem make_hr(const SynthData& data, double beta);
SuiteProblem make_problem(const SynthData& data, const ProblemConfig& config);

/// The solver each problem uses in the convergence experiments: GD for LR,
/// heavy-ball for the quadratic problems.
LowerSolver default_lower_solver(ProblemKind kind);

struct ReferenceHypergrad {
  Vec grad;
  double adjoint_residual = 0.0;  // nonzero only for the iterative LR reference
};

/// Target hypergradient for error curves: BR closed form, KRR/HR dense
/// implicit formula at the closed-form lower solution, LR AID-CG with
/// t = k = 2000.
ReferenceHypergrad reference_hypergrad(const SuiteProblem& problem, const Vec& lam);

/// logistic loss psi(x) = log(1 + e^-x) and its first two derivatives
double logistic_loss(double x);
double logistic_loss_d1(double x);
double logistic_loss_d2(double x);

/// Header "split,target,x0,...,x{p-1}", train rows then validation rows.
void write_dataset_csv(const SynthData& data, std::ostream& out);

}  // namespace hg
