#include "hg/problem_suite.hpp"

#include "hg/csv.hpp"
#include "hg/detail/lambda_cache.hpp"
#include "hg/error.hpp"
#include "hg/hypergrad.hpp"

#include <Eigen/Cholesky>

#include <cctype>
#include <cmath>
#include <memory>
#include <ostream>

namespace hg {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::LR: return "LR";
    case ProblemKind::KRR: return "KRR";
    case ProblemKind::BR: return "BR";
    case ProblemKind::HR: return "HR";
  }
  return "?";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view name) {
  for (ProblemKind k : {ProblemKind::LR, ProblemKind::KRR, ProblemKind::BR, ProblemKind::HR}) {
    const std::string_view canonical = to_string(k);
    if (name.size() != canonical.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < name.size(); ++i)
      same = same && std::toupper(static_cast<unsigned char>(name[i])) == canonical[i];
    if (same) return k;
  }
  return std::nullopt;
}

std::string_view to_string(LowerSolver solver) {
  return solver == LowerSolver::GradientDescent ? "gd" : "heavy_ball";
}

ProblemConfig default_config(ProblemKind kind) {
  ProblemConfig c;
  c.kind = kind;
  switch (kind) {
    case ProblemKind::LR:
      c.lambda_lo = 0.01;
      c.lambda_hi = 10.0;
      break;
    case ProblemKind::KRR:
      c.lambda_lo = 0.0005;
      c.lambda_hi = 0.005;
      break;
    case ProblemKind::BR:
      c.beta = 1.0;
      c.lambda_lo = -5.0;
      c.lambda_hi = 5.0;
      break;
    case ProblemKind::HR:
      c.beta = 10.0;
      c.lambda_lo = -1.0;
      c.lambda_hi = 1.0;
      break;
  }
  return c;
}

Index lambda_dim(ProblemKind kind, const DataShape& shape) {
  switch (kind) {
    case ProblemKind::LR: return shape.features;
    case ProblemKind::KRR: return 1 + shape.features;
    case ProblemKind::BR: return shape.features;
    case ProblemKind::HR: return shape.features * shape.hidden;
  }
  return 0;
}

SynthData gen_data(ProblemKind kind, std::uint64_t seed, double noise, const DataShape& shape) {
  Rng rng(seed);
  SynthData data;
  data.kind = kind;
  data.noise = noise;
  data.seed = seed;
  data.X = sample_normal(rng, shape.n_train, shape.features);
  data.Xv = sample_normal(rng, shape.n_val, shape.features);
  const Index inner = kind == ProblemKind::HR ? shape.hidden : shape.features;
  data.w_star = sample_normal_vec(rng, inner);
  if (kind == ProblemKind::HR) data.H_star = sample_normal(rng, shape.features, shape.hidden);
  const Vec eps = sample_normal_vec(rng, shape.n_train);
  const Vec eps_v = sample_normal_vec(rng, shape.n_val);

  Vec signal;
  switch (kind) {
    case ProblemKind::LR:
    case ProblemKind::KRR: signal = data.w_star; break;
    case ProblemKind::BR: signal = data.w_star + Vec::Ones(shape.features); break;
    case ProblemKind::HR: signal = data.H_star * data.w_star; break;
  }
  data.y = data.X * signal + noise * eps;
  data.yv = data.Xv * signal + noise * eps_v;
  if (kind == ProblemKind::LR) {
    auto sign = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };
    data.y = data.y.unaryExpr(sign);
    data.yv = data.yv.unaryExpr(sign);
  }
  return data;
}

std::vector<Vec> sample_lambdas(const ProblemConfig& config, int count, Rng& rng) {
  if (count < 1) throw Error(Errc::InvalidArgument, "sample_lambdas: count must be >= 1");
  const Index n = lambda_dim(config.kind, config.shape);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Vec lam(n);
    for (Index i = 0; i < n; ++i) lam(i) = rng.uniform(config.lambda_lo, config.lambda_hi);
    out.push_back(std::move(lam));
  }
  return out;
}

double logistic_loss(double x) { return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

double logistic_loss_d1(double x) {
  // -1 / (1 + e^x)
  if (x > 0.0) {
    const double e = std::exp(-x);
    return -e / (1.0 + e);
  }
  return -1.0 / (1.0 + std::exp(x));
}

double logistic_loss_d2(double x) {
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

namespace {

double largest_eigenvalue(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

void attach_maps(SuiteProblem& sp) {
  sp.gd = gd_map_problem(sp.lower, sp.outer);
  sp.hb = heavy_ball_problem(sp.lower, sp.outer);
  sp.gd_jac = gd_map_jacobians(sp.lower);
  sp.hb_jac = heavy_ball_jacobians(sp.lower);
}

// ---------------------------------------------------------------------------
// LR

struct LogisticData {
  Mat X, Xv;
  Vec y, yv;
  double gram_norm = 0.0;  // ||X^T X||
};

double lr_lower_value(const LogisticData& d, const Vec& w, const Vec& lam) {
  const Vec margins = d.y.cwiseProduct(d.X * w);
  return margins.unaryExpr([](double m) { return logistic_loss(m); }).sum() +
         0.5 * lam.cwiseProduct(w.cwiseAbs2()).sum();
}

Vec lr_lower_grad(const LogisticData& d, const Vec& w, const Vec& lam) {
  const Vec margins = d.y.cwiseProduct(d.X * w);
  const Vec coeff = d.y.cwiseProduct(margins.unaryExpr([](double m) { return logistic_loss_d1(m); }));
  return d.X.transpose() * coeff + lam.cwiseProduct(w);
}

Vec lr_curvature_weights(const LogisticData& d, const Vec& w) {
  return d.y.cwiseProduct(d.X * w).unaryExpr([](double m) { return logistic_loss_d2(m); });
}

Mat lr_hessian(const LogisticData& d, const Vec& w, const Vec& lam) {
  const Vec s = lr_curvature_weights(d, w);
  Mat H = d.X.transpose() * s.asDiagonal() * d.X;
  H.diagonal() += lam;
  return H;
}

Vec lr_newton_argmin(const LogisticData& d, const Vec& lam) {
  Vec w = Vec::Zero(d.X.cols());
  for (int it = 0; it < 100; ++it) {
    const Vec g = lr_lower_grad(d, w, lam);
    const double gnorm = g.norm();
    if (gnorm == 0.0) break;
    const Vec step = Eigen::LLT<Mat>(lr_hessian(d, w, lam)).solve(g);
    const double value = lr_lower_value(d, w, lam);
    const double decrement = g.dot(step);
    // Near the optimum the Armijo test drowns in rounding; a smaller gradient
    // is accepted instead.
    double scale = 1.0;
    Vec candidate = w - step;
    while (lr_lower_value(d, candidate, lam) > value - 1e-4 * scale * decrement &&
           lr_lower_grad(d, candidate, lam).norm() >= gnorm) {
      scale *= 0.5;
      if (scale < 1e-10) return w;
      candidate = w - scale * step;
    }
    w = candidate;
    if (scale == 1.0 && step.norm() <= 1e-14 * (1.0 + w.norm())) break;
  }
  return w;
}

}  // namespace

SuiteProblem make_lr(const SynthData& data) {
  for (const Vec* labels : {&data.y, &data.yv})
    for (Index i = 0; i < labels->size(); ++i)
      if ((*labels)(i) != 1.0 && (*labels)(i) != -1.0)
        throw Error(Errc::InvalidLabels, "LR labels must be -1 or +1");

  auto d = std::make_shared<LogisticData>();
  d->X = data.X;
  d->Xv = data.Xv;
  d->y = data.y;
  d->yv = data.yv;
  d->gram_norm = largest_eigenvalue(d->X.transpose() * d->X);

  SuiteProblem sp;
  sp.kind = ProblemKind::LR;
  LowerObjective& lo = sp.lower;
  lo.dim_w = data.X.cols();
  lo.dim_lambda = data.X.cols();
  lo.grad = [d](const Vec& w, const Vec& lam) { return lr_lower_grad(*d, w, lam); };
  lo.hess_vec = [d](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    const Vec s = lr_curvature_weights(*d, w);
    return d->X.transpose() * s.cwiseProduct(d->X * v) + lam.cwiseProduct(v);
  };
  lo.mixed_tvec = [](const Vec& w, const Vec&, const Vec& v) -> Vec { return w.cwiseProduct(v); };
  // psi'' <= 1/4, so the data term has curvature at most ||X||^2 / 4.
  lo.curvature = [d](const Vec& lam) {
    if (!(lam.minCoeff() > 0.0)) throw Error(Errc::InvalidConstants, "LR needs positive regularization weights");
    return Curvature{lam.minCoeff(), d->gram_norm / 4.0 + lam.maxCoeff()};
  };
  lo.argmin = [d](const Vec& lam) { return lr_newton_argmin(*d, lam); };
  lo.hess_dense = [d](const Vec& w, const Vec& lam) { return lr_hessian(*d, w, lam); };
  lo.mixed_dense = [](const Vec& w, const Vec&) -> Mat { return w.asDiagonal(); };

  OuterObjective& out = sp.outer;
  out.value = [d](const Vec& w, const Vec&) {
    const Vec margins = d->yv.cwiseProduct(d->Xv * w);
    return margins.unaryExpr([](double m) { return logistic_loss(m); }).sum();
  };
  out.grad_w = [d](const Vec& w, const Vec&) -> Vec {
    const Vec margins = d->yv.cwiseProduct(d->Xv * w);
    return d->Xv.transpose() * d->yv.cwiseProduct(margins.unaryExpr([](double m) { return logistic_loss_d1(m); }));
  };
  out.grad_lambda = [](const Vec&, const Vec& lam) -> Vec { return Vec::Zero(lam.size()); };

  attach_maps(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// KRR

namespace {

struct KernelData {
  Mat X, Xv;
  Vec y, yv;
};

// K_ij = exp(-(A_i - B_j)^T diag(gamma) (A_i - B_j))
Mat gaussian_kernel(const Mat& A, const Mat& B, const Vec& gamma) {
  Mat K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < B.rows(); ++j)
      K(i, j) = std::exp(-((A.row(i) - B.row(j)).array().square() * gamma.transpose().array()).sum());
  return K;
}

// Entry k: sum_ij C_ij (A_ik - B_jk)^2.
Vec weighted_sq_diff(const Mat& C, const Mat& A, const Mat& B) {
  const Vec row = C.rowwise().sum();
  const Vec col = C.colwise().sum().transpose();
  const Mat cross = (A.transpose() * C * B);
  return A.array().square().matrix().transpose() * row + B.array().square().matrix().transpose() * col -
         2.0 * cross.diagonal();
}

struct KernelState {
  Mat K;      // train x train
  Mat Kv;     // val x train
  double mu = 0.0;
  double L = 0.0;
};

void check_krr_lambda(const Vec& lam) {
  if (!(lam(0) > 0.0)) throw Error(Errc::InvalidConstants, "KRR needs beta > 0");
  if (!(lam.tail(lam.size() - 1).minCoeff() > 0.0))
    throw Error(Errc::InvalidConstants, "KRR needs every gamma component > 0");
}

}  // namespace

SuiteProblem make_krr(const SynthData& data) {
  auto d = std::make_shared<KernelData>(KernelData{data.X, data.Xv, data.y, data.yv});
  const Index n = data.X.rows();
  const Index p = data.X.cols();
  auto cache = detail::make_cache<KernelState>([d](const Vec& lam) {
    check_krr_lambda(lam);
    KernelState s;
    const Vec gamma = lam.tail(lam.size() - 1);
    s.K = gaussian_kernel(d->X, d->X, gamma);
    s.Kv = gaussian_kernel(d->Xv, d->X, gamma);
    Mat system = s.K;
    system.diagonal().array() += lam(0);
    Eigen::SelfAdjointEigenSolver<Mat> eig(system, Eigen::EigenvaluesOnly);
    s.mu = eig.eigenvalues().minCoeff();
    s.L = eig.eigenvalues().maxCoeff();
    return s;
  });

  SuiteProblem sp;
  sp.kind = ProblemKind::KRR;
  LowerObjective& lo = sp.lower;
  lo.dim_w = n;
  lo.dim_lambda = 1 + p;
  lo.grad = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    return s->K * w + lam(0) * w - d->y;
  };
  lo.hess_vec = [cache](const Vec&, const Vec& lam, const Vec& v) -> Vec {
    return cache->get(lam)->K * v + lam(0) * v;
  };
  // d/dbeta grad = w; d/dgamma_k grad = (dK/dgamma_k) w with dK_ij/dgamma_k = -K_ij (X_ik - X_jk)^2.
  lo.mixed_tvec = [d, cache](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    const auto s = cache->get(lam);
    Vec out(lam.size());
    out(0) = w.dot(v);
    const Mat C = v.asDiagonal() * s->K * w.asDiagonal();
    out.tail(lam.size() - 1) = -weighted_sq_diff(C, d->X, d->X);
    return out;
  };
  lo.curvature = [cache](const Vec& lam) {
    const auto s = cache->get(lam);
    return Curvature{s->mu, s->L};
  };
  lo.argmin = [d, cache](const Vec& lam) -> Vec {
    Mat system = cache->get(lam)->K;
    system.diagonal().array() += lam(0);
    return Eigen::LLT<Mat>(system).solve(d->y);
  };
  lo.hess_dense = [cache](const Vec&, const Vec& lam) -> Mat {
    Mat H = cache->get(lam)->K;
    H.diagonal().array() += lam(0);
    return H;
  };
  lo.mixed_dense = [d, cache](const Vec& w, const Vec& lam) -> Mat {
    const auto s = cache->get(lam);
    const Index rows = d->X.rows();
    const Index feats = d->X.cols();
    Mat M = Mat::Zero(rows, 1 + feats);
    M.col(0) = w;
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < rows; ++j) {
        const double kw = s->K(i, j) * w(j);
        M.row(i).tail(feats).array() -= kw * (d->X.row(i) - d->X.row(j)).array().square();
      }
    return M;
  };

  OuterObjective& out = sp.outer;
  out.value = [d, cache](const Vec& w, const Vec& lam) {
    return 0.5 * (d->yv - cache->get(lam)->Kv * w).squaredNorm();
  };
  out.grad_w = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    return -(s->Kv.transpose() * (d->yv - s->Kv * w));
  };
  // dE/dgamma_k = sum_ij r_i Kv_ij w_j (Xv_ik - X_jk)^2 with r = yv - Kv w.
  out.grad_lambda = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    const Vec r = d->yv - s->Kv * w;
    Vec g = Vec::Zero(lam.size());
    const Mat C = r.asDiagonal() * s->Kv * w.asDiagonal();
    g.tail(lam.size() - 1) = weighted_sq_diff(C, d->Xv, d->X);
    return g;
  };

  attach_maps(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// BR

namespace {

struct BiasedData {
  Mat X, Xv;
  Vec y, yv;
  double beta = 1.0;
  Mat gram;        // X^T X
  Vec Xty;         // X^T y
  Eigen::LLT<Mat> system;  // X^T X + beta I
  double mu = 0.0;
  double L = 0.0;
};

}  // namespace

SuiteProblem make_br(const SynthData& data, double beta) {
  if (!(beta > 0.0)) throw Error(Errc::InvalidConstants, "BR needs beta > 0");
  auto d = std::make_shared<BiasedData>();
  d->X = data.X;
  d->Xv = data.Xv;
  d->y = data.y;
  d->yv = data.yv;
  d->beta = beta;
  d->gram = d->X.transpose() * d->X;
  d->Xty = d->X.transpose() * d->y;
  const Index p = data.X.cols();
  const Mat hessian = d->gram + beta * Mat::Identity(p, p);
  d->system.compute(hessian);
  Eigen::SelfAdjointEigenSolver<Mat> eig(hessian, Eigen::EigenvaluesOnly);
  d->mu = eig.eigenvalues().minCoeff();
  d->L = eig.eigenvalues().maxCoeff();

  SuiteProblem sp;
  sp.kind = ProblemKind::BR;
  LowerObjective& lo = sp.lower;
  lo.dim_w = p;
  lo.dim_lambda = p;
  lo.grad = [d](const Vec& w, const Vec& lam) -> Vec { return d->gram * w - d->Xty + d->beta * (w - lam); };
  lo.hess_vec = [d](const Vec&, const Vec&, const Vec& v) -> Vec { return d->gram * v + d->beta * v; };
  lo.mixed_tvec = [d](const Vec&, const Vec&, const Vec& v) -> Vec { return -d->beta * v; };
  lo.curvature = [d](const Vec&) { return Curvature{d->mu, d->L}; };
  lo.argmin = [d](const Vec& lam) -> Vec { return d->system.solve(d->Xty + d->beta * lam); };
  lo.hess_dense = [d](const Vec&, const Vec&) -> Mat {
    return d->gram + d->beta * Mat::Identity(d->gram.rows(), d->gram.cols());
  };
  lo.mixed_dense = [d](const Vec&, const Vec&) -> Mat {
    return -d->beta * Mat::Identity(d->gram.rows(), d->gram.cols());
  };

  OuterObjective& out = sp.outer;
  out.value = [d](const Vec& w, const Vec&) { return 0.5 * (d->Xv * w - d->yv).squaredNorm(); };
  out.grad_w = [d](const Vec& w, const Vec&) -> Vec { return d->Xv.transpose() * (d->Xv * w - d->yv); };
  out.grad_lambda = [](const Vec&, const Vec& lam) -> Vec { return Vec::Zero(lam.size()); };

  // grad f = beta (X^T X + beta I)^{-1} Xv^T (Xv w(lam) - yv)
  sp.closed_form_hypergrad = [d](const Vec& lam) -> Vec {
    const Vec w = d->system.solve(d->Xty + d->beta * lam);
    return d->beta * d->system.solve(d->Xv.transpose() * (d->Xv * w - d->yv));
  };

  attach_maps(sp);
  return sp;
}

// ---------------------------------------------------------------------------
// HR

namespace {

struct RepresentationData {
  Mat X, Xv;
  Vec y, yv;
  Mat gram;  // X^T X
  double beta = 1.0;
  Index features = 0;
  Index hidden = 0;
};

struct RepresentationState {
  Mat Z;   // X H
  Mat Zv;  // Xv H
  double L = 0.0;
};

Eigen::Map<const RowMat> as_matrix(const Vec& lam, Index rows, Index cols) {
  return Eigen::Map<const RowMat>(lam.data(), rows, cols);
}

Vec flatten(const RowMat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace

SuiteProblem make_hr(const SynthData& data, double beta) {
  if (!(beta > 0.0)) throw Error(Errc::InvalidConstants, "HR needs beta > 0");
  auto d = std::make_shared<RepresentationData>();
  d->X = data.X;
  d->Xv = data.Xv;
  d->y = data.y;
  d->yv = data.yv;
  d->gram = d->X.transpose() * d->X;
  d->beta = beta;
  d->features = data.X.cols();
  d->hidden = data.H_star.size() > 0 ? data.H_star.cols() : DataShape{}.hidden;
  const Index h = d->hidden;
  const Index pf = d->features;

  auto cache = detail::make_cache<RepresentationState>([d](const Vec& lam) {
    if (lam.size() != d->features * d->hidden) throw Error(Errc::InvalidArgument, "HR: lambda has wrong length");
    const auto H = as_matrix(lam, d->features, d->hidden);
    RepresentationState s;
    s.Z = d->X * H;
    s.Zv = d->Xv * H;
    s.L = largest_eigenvalue(s.Z * s.Z.transpose()) + d->beta;
    return s;
  });

  SuiteProblem sp;
  sp.kind = ProblemKind::HR;
  LowerObjective& lo = sp.lower;
  lo.dim_w = h;
  lo.dim_lambda = pf * h;
  lo.grad = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    return s->Z.transpose() * (s->Z * w - d->y) + d->beta * w;
  };
  lo.hess_vec = [d, cache](const Vec&, const Vec& lam, const Vec& v) -> Vec {
    const auto s = cache->get(lam);
    return s->Z.transpose() * (s->Z * v) + d->beta * v;
  };
  // d/dH [v^T grad_w l] = X^T r v^T + X^T (Z v) w^T with r = Z w - y.
  lo.mixed_tvec = [d, cache](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    const auto s = cache->get(lam);
    const Vec r = s->Z * w - d->y;
    const RowMat G = (d->X.transpose() * r) * v.transpose() + (d->X.transpose() * (s->Z * v)) * w.transpose();
    return flatten(G);
  };
  // Z^T Z has rank <= n_train < hidden in the default shape, so mu = beta.
  lo.curvature = [d, cache](const Vec& lam) { return Curvature{d->beta, cache->get(lam)->L}; };
  lo.argmin = [d, cache](const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    Mat system = s->Z.transpose() * s->Z;
    system.diagonal().array() += d->beta;
    return Eigen::LLT<Mat>(system).solve(s->Z.transpose() * d->y);
  };
  lo.hess_dense = [d, cache](const Vec&, const Vec& lam) -> Mat {
    const auto s = cache->get(lam);
    Mat H = s->Z.transpose() * s->Z;
    H.diagonal().array() += d->beta;
    return H;
  };
  // Column (a, b) of d grad_w l / dH: e_b (X^T r)_a + w_b (H^T X^T X)_{:, a}.
  lo.mixed_dense = [d, cache](const Vec& w, const Vec& lam) -> Mat {
    const auto s = cache->get(lam);
    const auto H = as_matrix(lam, d->features, d->hidden);
    const Vec xr = d->X.transpose() * (s->Z * w - d->y);
    const Mat HtG = H.transpose() * d->gram;
    Mat M = Mat::Zero(d->hidden, d->features * d->hidden);
    for (Index a = 0; a < d->features; ++a)
      for (Index b = 0; b < d->hidden; ++b) {
        const Index col = a * d->hidden + b;
        M.col(col) = w(b) * HtG.col(a);
        M(b, col) += xr(a);
      }
    return M;
  };

  OuterObjective& out = sp.outer;
  out.value = [d, cache](const Vec& w, const Vec& lam) {
    return 0.5 * (cache->get(lam)->Zv * w - d->yv).squaredNorm();
  };
  out.grad_w = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    return s->Zv.transpose() * (s->Zv * w - d->yv);
  };
  out.grad_lambda = [d, cache](const Vec& w, const Vec& lam) -> Vec {
    const auto s = cache->get(lam);
    const RowMat G = (d->Xv.transpose() * (s->Zv * w - d->yv)) * w.transpose();
    return flatten(G);
  };

  attach_maps(sp);
  return sp;
}

SuiteProblem make_problem(const SynthData& data, const ProblemConfig& config) {
  switch (config.kind) {
    case ProblemKind::LR: return make_lr(data);
    case ProblemKind::KRR: return make_krr(data);
    case ProblemKind::BR: return make_br(data, config.beta);
    case ProblemKind::HR: return make_hr(data, config.beta);
  }
  throw Error(Errc::InvalidArgument, "unknown problem kind");
}

LowerSolver default_lower_solver(ProblemKind kind) {
  return kind == ProblemKind::LR ? LowerSolver::GradientDescent : LowerSolver::HeavyBall;
}

ReferenceHypergrad reference_hypergrad(const SuiteProblem& problem, const Vec& lam) {
  switch (problem.kind) {
    case ProblemKind::BR: return {problem.closed_form_hypergrad(lam), 0.0};
    case ProblemKind::KRR:
    case ProblemKind::HR: return {exact_hypergrad(problem.gd, lam, problem.gd_jac).grad, 0.0};
    case ProblemKind::LR: {
      auto [hg, report] = aid(problem.gd, lam, 2000, 2000, AdjointSolver::CG, Vec::Zero(problem.gd.dim_w));
      return {std::move(hg.grad), report.residual};
    }
  }
  throw Error(Errc::InvalidArgument, "unknown problem kind");
}

void write_dataset_csv(const SynthData& data, std::ostream& out) {
  CsvWriter csv(out);
  std::vector<std::string> header{"split", "target"};
  for (Index j = 0; j < data.X.cols(); ++j) header.push_back("x" + std::to_string(j));
  csv.header(header);
  auto emit = [&](std::string_view split, const Mat& X, const Vec& y) {
    for (Index i = 0; i < X.rows(); ++i) {
      std::vector<std::string> row{std::string(split), format_double(y(i))};
      for (Index j = 0; j < X.cols(); ++j) row.push_back(format_double(X(i, j)));
      csv.row(row);
    }
  };
  emit("train", data.X, data.y);
  emit("val", data.Xv, data.yv);
}

}  // namespace hg
