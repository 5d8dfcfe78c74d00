#pragma once

// Dense tanh equilibrium model: each example's representation is the fixed
// point w_i = tanh(A w_i + B x_i + c), read out by a logistic classifier.

#include "hg/numkit.hpp"
#include "hg/problem.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hg {

struct EqmShape {
  Index hidden = 20;
  Index inputs = 10;
  Index classes = 2;
};

struct EqmParams {
  Mat A;      // hidden x hidden
  Mat B;      // hidden x inputs
  Vec c;      // hidden
  Mat W;      // classes x hidden
  Vec b_out;  // classes
};

/// Packed order: A, B, c, W, b_out, each column-major.
Index param_count(const EqmShape& shape);
Vec pack(const EqmParams& params);
EqmParams unpack(const Vec& packed, const EqmShape& shape);

struct EqmDataset {
  Mat X;  // inputs x examples, one column per example
  std::vector<int> labels;
};

/// Two Gaussian classes with identity covariance centred at +-(separation/2) u
/// for a random unit vector u.
struct Blobs {
  EqmDataset train;
  EqmDataset test;
};
Blobs make_blobs(Index n_train, Index n_test, Index inputs, double separation, std::uint64_t seed);

/// One application of the blockwise map to the stacked state
/// (hidden x examples, column-major).
Vec eqm_phi(const EqmParams& params, const Mat& inputs, const Vec& w_stacked);

/// Bilevel problem over the stacked state; lam is the packed parameter
/// vector. E is the average cross-entropy of the readout on the training set.
/// d1Phi is not symmetric, so d1phi_vec is provided for normal-equation CG.
BilevelProblem eqm_problem(const EqmShape& shape, const EqmDataset& data);

/// Clips the singular values of A to [0, 1 - eps].
Mat project_spectral(const Mat& A, double eps);

/// Average cross-entropy of logits (classes x examples).
double cross_entropy(const Mat& logits, const std::vector<int>& labels);

/// Classification accuracy after t fixed-point iterations from zero.
double eqm_accuracy(const EqmParams& params, const EqmDataset& data, int t);

struct EqmTrainConfig {
  EqmShape shape;
  Index n_train = 200;
  Index n_test = 200;
  double separation = 5.0;
  double eps = 1e-3;
  bool project = true;
  Method method = Method::AID_FP;  // ITD, AID_FP or AID_CGNORMAL
  int t = 20;
  int k = 20;
  double lr = 0.1;
  double momentum = 0.9;  // Nesterov
  int steps = 300;
  std::uint64_t seed = 0;
};

struct EqmStepRecord {
  int step = 0;
  double loss = 0.0;
  double test_acc = 0.0;
  double grad_norm = 0.0;
  double spectral_norm_A = 0.0;
};

struct EqmTrainLog {
  std::vector<EqmStepRecord> records;  // state before each update, plus the final state
  bool diverged = false;
  int diverged_step = -1;
  std::string note;
};

/// Hypergradient descent with Nesterov momentum on the packed parameters;
/// when enabled, A is projected after initialization and after every update.
/// A blow-up is reported in the log rather than thrown.
EqmTrainLog eqm_train(const EqmTrainConfig& config);

}  // namespace hg
