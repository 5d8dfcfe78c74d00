#include "hg/eqm.hpp"

#include "hg/error.hpp"
#include "hg/hypergrad.hpp"
#include "hg/lower_solvers.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace hg {

namespace {

using ConstMap = Eigen::Map<const Mat>;
using ConstVecMap = Eigen::Map<const Vec>;

struct ParamView {
  ConstMap A, B;
  ConstVecMap c;
  ConstMap W;
  ConstVecMap b_out;
};

ParamView view(const Vec& lam, const EqmShape& s) {
  const double* p = lam.data();
  const Index h = s.hidden;
  ConstMap A(p, h, h);
  p += h * h;
  ConstMap B(p, h, s.inputs);
  p += h * s.inputs;
  ConstVecMap c(p, h);
  p += h;
  ConstMap W(p, s.classes, h);
  p += s.classes * h;
  ConstVecMap b(p, s.classes);
  return {A, B, c, W, b};
}

Mat one_hot(const std::vector<int>& labels, Index classes) {
  Mat Y = Mat::Zero(classes, static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) Y(labels[i], static_cast<Index>(i)) = 1.0;
  return Y;
}

Mat softmax_columns(const Mat& logits) {
  Mat P = logits;
  for (Index j = 0; j < P.cols(); ++j) {
    P.col(j).array() -= P.col(j).maxCoeff();
    P.col(j) = P.col(j).array().exp();
    P.col(j) /= P.col(j).sum();
  }
  return P;
}

// A S + B X + c 1^T
template <class AMat, class BMat, class CVec>
Mat preactivation(const AMat& A, const BMat& B, const CVec& c, const Mat& S, const Mat& X) {
  Mat Z = A * S + B * X;
  Z.colwise() += c;
  return Z;
}

Mat forward(const EqmParams& params, const Mat& X, int t) {
  Mat S = Mat::Zero(params.A.rows(), X.cols());
  for (int i = 0; i < t; ++i) S = preactivation(params.A, params.B, params.c, S, X).array().tanh();
  return S;
}

}  // namespace

Index param_count(const EqmShape& s) {
  return s.hidden * s.hidden + s.hidden * s.inputs + s.hidden + s.classes * s.hidden + s.classes;
}

Vec pack(const EqmParams& params) {
  const EqmShape s{params.A.rows(), params.B.cols(), params.W.rows()};
  Vec out(param_count(s));
  Index at = 0;
  auto put = [&](const auto& m) {
    out.segment(at, m.size()) = Eigen::Map<const Vec>(m.data(), m.size());
    at += m.size();
  };
  put(params.A);
  put(params.B);
  put(params.c);
  put(params.W);
  put(params.b_out);
  return out;
}

EqmParams unpack(const Vec& packed, const EqmShape& shape) {
  if (packed.size() != param_count(shape)) throw Error(Errc::InvalidArgument, "eqm: packed parameters have wrong length");
  const ParamView v = view(packed, shape);
  return {v.A, v.B, v.c, v.W, v.b_out};
}

Blobs make_blobs(Index n_train, Index n_test, Index inputs, double separation, std::uint64_t seed) {
  Rng rng(seed);
  Vec direction = sample_normal_vec(rng, inputs);
  direction.normalize();
  auto draw = [&](Index n) {
    EqmDataset d;
    d.X = Mat(inputs, n);
    d.labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const int label = rng.uniform() < 0.5 ? 0 : 1;
      d.labels[static_cast<std::size_t>(i)] = label;
      const double side = label == 1 ? 0.5 : -0.5;
      for (Index j = 0; j < inputs; ++j) d.X(j, i) = side * separation * direction(j) + rng.normal();
    }
    return d;
  };
  Blobs blobs;
  blobs.train = draw(n_train);
  blobs.test = draw(n_test);
  return blobs;
}

Vec eqm_phi(const EqmParams& params, const Mat& inputs, const Vec& w_stacked) {
  const Index h = params.A.rows();
  const ConstMap S(w_stacked.data(), h, inputs.cols());
  Mat next = preactivation(params.A, params.B, params.c, Mat(S), inputs).array().tanh();
  return Eigen::Map<const Vec>(next.data(), next.size());
}

double cross_entropy(const Mat& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Index j = 0; j < logits.cols(); ++j) {
    const double top = logits.col(j).maxCoeff();
    const double log_norm = top + std::log((logits.col(j).array() - top).exp().sum());
    total += log_norm - logits(labels[static_cast<std::size_t>(j)], j);
  }
  return total / static_cast<double>(logits.cols());
}

BilevelProblem eqm_problem(const EqmShape& shape, const EqmDataset& data) {
  auto X = std::make_shared<const Mat>(data.X);
  auto Y = std::make_shared<const Mat>(one_hot(data.labels, shape.classes));
  auto labels = std::make_shared<const std::vector<int>>(data.labels);
  const Index h = shape.hidden;
  const Index n = data.X.cols();

  auto state = [h, n](const Vec& w) { return ConstMap(w.data(), h, n); };
  auto flat = [](const Mat& m) -> Vec { return Eigen::Map<const Vec>(m.data(), m.size()); };
  // 1 - tanh(Z)^2 at the current state
  auto slope = [shape, X, state](const Vec& w, const Vec& lam) -> Mat {
    const ParamView p = view(lam, shape);
    const Mat Z = preactivation(p.A, p.B, p.c, Mat(state(w)), *X);
    return 1.0 - Z.array().tanh().square();
  };

  BilevelProblem prob;
  prob.dim_w = h * n;
  prob.dim_lambda = param_count(shape);
  prob.phi = [shape, X, state, flat](const Vec& w, const Vec& lam) -> Vec {
    const ParamView p = view(lam, shape);
    return flat(preactivation(p.A, p.B, p.c, Mat(state(w)), *X).array().tanh());
  };
  prob.d1phi_tvec = [shape, state, flat, slope](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    const ParamView p = view(lam, shape);
    const Mat G = slope(w, lam).cwiseProduct(state(v));
    return flat(p.A.transpose() * G);
  };
  prob.d1phi_vec = [shape, state, flat, slope](const Vec& w, const Vec& lam, const Vec& u) -> Vec {
    const ParamView p = view(lam, shape);
    return flat(slope(w, lam).cwiseProduct(p.A * state(u)));
  };
  prob.d2phi_tvec = [shape, X, state, slope](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    const Index hid = shape.hidden;
    const Mat G = slope(w, lam).cwiseProduct(state(v));
    Vec out = Vec::Zero(param_count(shape));
    Index at = 0;
    const Mat dA = G * state(w).transpose();
    out.segment(at, dA.size()) = Eigen::Map<const Vec>(dA.data(), dA.size());
    at += dA.size();
    const Mat dB = G * X->transpose();
    out.segment(at, dB.size()) = Eigen::Map<const Vec>(dB.data(), dB.size());
    at += dB.size();
    out.segment(at, hid) = G.rowwise().sum();
    return out;
  };
  prob.outer_E = [shape, state, labels](const Vec& w, const Vec& lam) {
    const ParamView p = view(lam, shape);
    Mat logits = p.W * state(w);
    logits.colwise() += p.b_out;
    return cross_entropy(logits, *labels);
  };
  prob.grad1_E = [shape, state, flat, Y, n](const Vec& w, const Vec& lam) -> Vec {
    const ParamView p = view(lam, shape);
    Mat logits = p.W * state(w);
    logits.colwise() += p.b_out;
    const Mat residual = (softmax_columns(logits) - *Y) / static_cast<double>(n);
    return flat(p.W.transpose() * residual);
  };
  prob.grad2_E = [shape, state, Y, n](const Vec& w, const Vec& lam) -> Vec {
    const ParamView p = view(lam, shape);
    Mat logits = p.W * state(w);
    logits.colwise() += p.b_out;
    const Mat residual = (softmax_columns(logits) - *Y) / static_cast<double>(n);
    Vec out = Vec::Zero(param_count(shape));
    const Index offset = shape.hidden * shape.hidden + shape.hidden * shape.inputs + shape.hidden;
    const Mat dW = residual * state(w).transpose();
    out.segment(offset, dW.size()) = Eigen::Map<const Vec>(dW.data(), dW.size());
    out.segment(offset + dW.size(), shape.classes) = residual.rowwise().sum();
    return out;
  };
  // tanh is 1-Lipschitz, so each block is an ||A||-contraction.
  prob.contraction_q = [shape](const Vec& lam) { return spectral_norm(Mat(view(lam, shape).A)); };
  prob.exact_fixed_point = [phi = prob.phi, h, n](const Vec& lam) -> Vec {
    Vec w = Vec::Zero(h * n);
    for (int i = 0; i < 100000; ++i) {
      Vec next = phi(w, lam);
      const double change = (next - w).lpNorm<Eigen::Infinity>();
      w = std::move(next);
      if (change == 0.0 || change < 1e-15) break;
    }
    return w;
  };
  prob.symmetric_d1phi = false;
  return prob;
}

Mat project_spectral(const Mat& A, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(Errc::InvalidArgument, "project_spectral: eps must lie in (0, 1)");
  const double cap = 1.0 - eps;
  Svd f = svd(A);
  if (f.s.size() == 0 || f.s(0) <= cap) return A;
  f.s = f.s.cwiseMin(cap);
  return f.U * f.s.asDiagonal() * f.Vt;
}

double eqm_accuracy(const EqmParams& params, const EqmDataset& data, int t) {
  const Mat S = forward(params, data.X, t);
  Mat logits = params.W * S;
  logits.colwise() += params.b_out;
  Index correct = 0;
  for (Index j = 0; j < logits.cols(); ++j) {
    Index best = 0;
    logits.col(j).maxCoeff(&best);
    if (best == data.labels[static_cast<std::size_t>(j)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

EqmTrainLog eqm_train(const EqmTrainConfig& cfg) {
  if (cfg.method != Method::ITD && cfg.method != Method::AID_FP && cfg.method != Method::AID_CGNORMAL)
    throw Error(Errc::InvalidArgument, "eqm_train: method must be itd, aid-fp or aid-cgn");
  if (cfg.t < 1 || cfg.k < 1 || cfg.steps < 0) throw Error(Errc::InvalidArgument, "eqm_train: bad iteration counts");

  const EqmShape& shape = cfg.shape;
  const Blobs blobs = make_blobs(cfg.n_train, cfg.n_test, shape.inputs, cfg.separation, cfg.seed);
  const BilevelProblem prob = eqm_problem(shape, blobs.train);

  // Initialization stream is separate from the data stream so seeds only
  // perturb lambda_0 and the sample draw independently.
  Rng rng(cfg.seed ^ 0x5eed5eed5eed5eedULL);
  const double h = static_cast<double>(shape.hidden);
  EqmParams init;
  init.A = sample_normal(rng, shape.hidden, shape.hidden) * (0.3 / std::sqrt(h));
  init.B = sample_normal(rng, shape.hidden, shape.inputs) * (1.0 / std::sqrt(static_cast<double>(shape.inputs)));
  init.c = Vec::Zero(shape.hidden);
  init.W = sample_normal(rng, shape.classes, shape.hidden) * (0.1 / std::sqrt(h));
  init.b_out = Vec::Zero(shape.classes);
  if (cfg.project) init.A = project_spectral(init.A, cfg.eps);

  Vec lam = pack(init);
  Vec velocity = Vec::Zero(lam.size());
  const Vec w0 = Vec::Zero(prob.dim_w);
  const Index a_size = shape.hidden * shape.hidden;

  EqmTrainLog log;
  for (int step = 0; step <= cfg.steps; ++step) {
    EqmStepRecord rec;
    rec.step = step;
    Vec grad;
    try {
      if (cfg.method == Method::ITD) {
        const Trajectory traj = iterate(prob, lam, cfg.t, w0);
        rec.loss = prob.outer_E(traj.last(), lam);
        grad = itd(prob, lam, traj).grad;
      } else {
        const Vec w_t = iterate_last(prob, lam, cfg.t, w0);
        rec.loss = prob.outer_E(w_t, lam);
        const AdjointSolver solver = cfg.method == Method::AID_FP ? AdjointSolver::FP : AdjointSolver::CGNORMAL;
        grad = aid_at(prob, lam, w_t, cfg.k, solver).first.grad;
      }
    } catch (const Error& e) {
      log.diverged = true;
      log.diverged_step = step;
      log.note = e.what();
      break;
    }
    const EqmParams current = unpack(lam, shape);
    rec.grad_norm = grad.norm();
    rec.test_acc = eqm_accuracy(current, blobs.test, cfg.t);
    rec.spectral_norm_A = spectral_norm(current.A);
    log.records.push_back(rec);
    if (!std::isfinite(rec.grad_norm) || !std::isfinite(rec.loss)) {
      log.diverged = true;
      log.diverged_step = step;
      log.note = "non-finite hypergradient or loss";
      break;
    }
    if (step == cfg.steps) break;

    velocity = cfg.momentum * velocity + grad;
    lam -= cfg.lr * (grad + cfg.momentum * velocity);
    if (cfg.project) {
      const Mat A = project_spectral(Eigen::Map<const Mat>(lam.data(), shape.hidden, shape.hidden), cfg.eps);
      lam.head(a_size) = Eigen::Map<const Vec>(A.data(), a_size);
    }
    if (!lam.allFinite()) {
      log.diverged = true;
      log.diverged_step = step + 1;
      log.note = "non-finite parameters";
      break;
    }
  }
  return log;
}

}  // namespace hg
