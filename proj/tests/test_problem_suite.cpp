#include "hg/error.hpp"
#include "hg/hypergrad.hpp"
#include "hg/problem_suite.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using hg::Mat;
using hg::ProblemKind;
using hg::Vec;

namespace {

const hg::DataShape kSmall{14, 11, 6, 9};

Vec sample_lambda(ProblemKind kind, std::uint64_t seed) {
  auto cfg = hg::default_config(kind);
  cfg.shape = kSmall;
  hg::Rng rng(seed);
  return hg::sample_lambdas(cfg, 1, rng).front();
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace

TEST(GenData, RegeneratesFromTheSameStream) {
  for (auto kind : {ProblemKind::LR, ProblemKind::KRR, ProblemKind::BR, ProblemKind::HR}) {
    const auto d = hg::gen_data(kind, 17, 0.1, kSmall);
    hg::Rng rng(17);
    const Mat X = hg::sample_normal(rng, 14, 6);
    const Mat Xv = hg::sample_normal(rng, 11, 6);
    const Vec ws = hg::sample_normal_vec(rng, kind == ProblemKind::HR ? 9 : 6);
    Mat Hs;
    if (kind == ProblemKind::HR) Hs = hg::sample_normal(rng, 6, 9);
    const Vec e = hg::sample_normal_vec(rng, 14);
    const Vec ev = hg::sample_normal_vec(rng, 11);
    EXPECT_EQ(d.X, X);
    EXPECT_EQ(d.Xv, Xv);
    EXPECT_EQ(d.w_star, ws);
    Vec signal = ws;
    if (kind == ProblemKind::BR) signal = ws + Vec::Ones(6);
    if (kind == ProblemKind::HR) signal = Hs * ws;
    Vec y = X * signal + 0.1 * e;
    Vec yv = Xv * signal + 0.1 * ev;
    if (kind == ProblemKind::LR) {
      y = y.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
      yv = yv.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
    }
    EXPECT_LT((d.y - y).norm(), 1e-12);
    EXPECT_LT((d.yv - yv).norm(), 1e-12);
  }
}

TEST(GenData, GoldenValues) {
  // Frozen from the reference build; any change to the stream breaks this.
  const auto d = hg::gen_data(ProblemKind::BR, 0);
  ASSERT_EQ(d.X.rows(), 50);
  ASSERT_EQ(d.X.cols(), 100);
  ASSERT_EQ(d.Xv.rows(), 50);
  EXPECT_DOUBLE_EQ(d.X(0, 0), -0.01896499060631051);
  EXPECT_DOUBLE_EQ(d.X(0, 1), -1.3559302271143727);
  EXPECT_DOUBLE_EQ(d.X(49, 99), -0.029606414551164438);
  EXPECT_DOUBLE_EQ(d.y(0), 5.4060014812795254);
}

TEST(GenData, DefaultsAndLabels) {
  const auto lr = hg::gen_data(ProblemKind::LR, 5);
  for (Vec v : {lr.y, lr.yv})
    for (double x : v) EXPECT_TRUE(x == 1.0 || x == -1.0);
  const auto hr = hg::gen_data(ProblemKind::HR, 5);
  EXPECT_EQ(hr.H_star.rows(), 100);
  EXPECT_EQ(hr.H_star.cols(), 200);
  EXPECT_EQ(hr.w_star.size(), 200);
}

TEST(ProblemConfig, RangesAndDims) {
  EXPECT_EQ(hg::default_config(ProblemKind::LR).lambda_lo, 0.01);
  EXPECT_EQ(hg::default_config(ProblemKind::LR).lambda_hi, 10.0);
  EXPECT_EQ(hg::default_config(ProblemKind::KRR).lambda_lo, 0.0005);
  EXPECT_EQ(hg::default_config(ProblemKind::KRR).lambda_hi, 0.005);
  EXPECT_EQ(hg::default_config(ProblemKind::BR).beta, 1.0);
  EXPECT_EQ(hg::default_config(ProblemKind::HR).beta, 10.0);
  EXPECT_EQ(hg::default_config(ProblemKind::HR).lambda_lo, -1.0);
  const hg::DataShape s;
  EXPECT_EQ(hg::lambda_dim(ProblemKind::LR, s), 100);
  EXPECT_EQ(hg::lambda_dim(ProblemKind::KRR, s), 101);
  EXPECT_EQ(hg::lambda_dim(ProblemKind::BR, s), 100);
  EXPECT_EQ(hg::lambda_dim(ProblemKind::HR, s), 20000);
}

TEST(SampleLambdas, InsideRange) {
  auto cfg = hg::default_config(ProblemKind::KRR);
  hg::Rng rng(1);
  const auto lams = hg::sample_lambdas(cfg, 20, rng);
  ASSERT_EQ(lams.size(), 20U);
  for (const auto& l : lams) {
    EXPECT_EQ(l.size(), 101);
    EXPECT_GE(l.minCoeff(), 0.0005);
    EXPECT_LT(l.maxCoeff(), 0.005);
  }
  EXPECT_THROW((void)hg::sample_lambdas(cfg, 0, rng), hg::Error);
}

TEST(ParseProblemKind, CaseInsensitive) {
  EXPECT_EQ(hg::parse_problem_kind("krr"), ProblemKind::KRR);
  EXPECT_EQ(hg::parse_problem_kind("Hr"), ProblemKind::HR);
  EXPECT_FALSE(hg::parse_problem_kind("svm"));
}

TEST(LogisticLoss, StableAndDifferentiable) {
  EXPECT_NEAR(hg::logistic_loss(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(hg::logistic_loss(800.0), 0.0, 1e-300);
  EXPECT_NEAR(hg::logistic_loss(-800.0), 800.0, 1e-9);
  for (double x : {-3.0, -0.2, 0.0, 1.5, 10.0}) {
    const double h = 1e-6;
    EXPECT_NEAR(hg::logistic_loss_d1(x), (hg::logistic_loss(x + h) - hg::logistic_loss(x - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(hg::logistic_loss_d2(x), (hg::logistic_loss_d1(x + h) - hg::logistic_loss_d1(x - h)) / (2 * h), 1e-8);
  }
}

class SuiteKinds : public ::testing::TestWithParam<ProblemKind> {};

TEST_P(SuiteKinds, DenseCallbacksAgreeWithProducts) {
  const ProblemKind kind = GetParam();
  auto cfg = hg::default_config(kind);
  cfg.shape = kSmall;
  const auto sp = hg::make_problem(hg::gen_data(kind, 3, 0.1, kSmall), cfg);
  const Vec lam = sample_lambda(kind, 4);
  hg::Rng rng(5);
  const Vec w = hg::sample_normal_vec(rng, sp.lower.dim_w);
  const Vec v = hg::sample_normal_vec(rng, sp.lower.dim_w);
  EXPECT_LT(rel(sp.lower.hess_vec(w, lam, v), sp.lower.hess_dense(w, lam) * v), 1e-12);
  EXPECT_LT(rel(sp.lower.mixed_tvec(w, lam, v), sp.lower.mixed_dense(w, lam).transpose() * v), 1e-11);
}

TEST_P(SuiteKinds, GdMapContractsWithDeclaredQ) {
  const ProblemKind kind = GetParam();
  auto cfg = hg::default_config(kind);
  cfg.shape = kSmall;
  const auto sp = hg::make_problem(hg::gen_data(kind, 6, 0.1, kSmall), cfg);
  const Vec lam = sample_lambda(kind, 7);
  const double q = sp.gd.contraction_q(lam);
  EXPECT_GE(q, 0.0);
  EXPECT_LT(q, 1.0);
  if (kind != ProblemKind::LR) {
    // quadratic lower level: the map is affine, so pairs measure ||d1Phi||.
    hg::Rng pairs(8);
    EXPECT_LE(hg::check_contraction(sp.gd, lam, 100, pairs), q * (1 + 1e-10));
  }
  const Vec w = sp.gd.exact_fixed_point(lam);
  EXPECT_LT((sp.gd.phi(w, lam) - w).norm(), 1e-8 * (1 + w.norm()));
  EXPECT_LT(sp.lower.grad(w, lam).norm(), 1e-7 * (1 + w.norm()));
}

TEST_P(SuiteKinds, ExactHypergradMatchesFiniteDifferences) {
  const ProblemKind kind = GetParam();
  auto cfg = hg::default_config(kind);
  cfg.shape = kSmall;
  const auto sp = hg::make_problem(hg::gen_data(kind, 9, 0.1, kSmall), cfg);
  const Vec lam = sample_lambda(kind, 10);
  const Vec exact = hg::exact_hypergrad(sp.gd, lam, sp.gd_jac).grad;
  const double h = kind == ProblemKind::KRR ? 1e-7 : 1e-5;
  const Vec fd = oracle::fd4(sp.gd, lam, h);
  EXPECT_LT(rel(exact, fd), 1e-6);
  const Vec tangent = hg::exact_hypergrad(sp.gd, lam, sp.gd_jac, hg::ExactRoute::Tangent).grad;
  EXPECT_LT(rel(exact, tangent), 1e-10);
}

TEST_P(SuiteKinds, HeavyBallAndGdMapsShareTheHypergradient) {
  const ProblemKind kind = GetParam();
  if (kind == ProblemKind::LR) GTEST_SKIP() << "heavy-ball is used for the quadratic problems only";
  auto cfg = hg::default_config(kind);
  cfg.shape = kSmall;
  const auto sp = hg::make_problem(hg::gen_data(kind, 11, 0.1, kSmall), cfg);
  const Vec lam = sample_lambda(kind, 12);
  const Vec gd = hg::exact_hypergrad(sp.gd, lam, sp.gd_jac).grad;
  const Vec hb = hg::exact_hypergrad(sp.hb, lam, sp.hb_jac).grad;
  EXPECT_LT(rel(hb, gd), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, SuiteKinds,
                         ::testing::Values(ProblemKind::LR, ProblemKind::KRR, ProblemKind::BR, ProblemKind::HR),
                         [](const auto& info) { return std::string(hg::to_string(info.param)); });

TEST(Br, ClosedFormMatchesImplicitSolve) {
  const auto data = hg::gen_data(ProblemKind::BR, 2);
  const auto sp = hg::make_br(data, 1.0);
  hg::Rng rng(4);
  Vec l(100);
  for (auto& x : l) x = rng.uniform(-5, 5);
  const Vec exact = hg::exact_hypergrad(sp.gd, l, sp.gd_jac).grad;
  EXPECT_LT(rel(sp.closed_form_hypergrad(l), exact), 1e-9);
}

TEST(Br, RejectsNonPositiveBeta) {
  const auto data = hg::gen_data(ProblemKind::BR, 2, 0.1, kSmall);
  EXPECT_THROW((void)hg::make_br(data, 0.0), hg::Error);
}

TEST(Lr, RejectsNonBinaryLabels) {
  auto data = hg::gen_data(ProblemKind::LR, 2, 0.1, kSmall);
  data.y(3) = 0.5;
  try {
    (void)hg::make_lr(data);
    FAIL();
  } catch (const hg::Error& e) {
    EXPECT_EQ(e.code(), hg::Errc::InvalidLabels);
  }
}

TEST(Lr, ReferenceHypergradHasSmallResidual) {
  auto data = hg::gen_data(ProblemKind::LR, 2, 0.1, kSmall);
  const auto sp = hg::make_lr(data);
  const Vec lam = sample_lambda(ProblemKind::LR, 1);
  const auto ref = hg::reference_hypergrad(sp, lam);
  EXPECT_LT(ref.adjoint_residual, 1e-8);
  const Vec exact = hg::exact_hypergrad(sp.gd, lam, sp.gd_jac).grad;
  EXPECT_LT(rel(ref.grad, exact), 1e-6);
}

TEST(Krr, RejectsNonPositiveHyperparameters) {
  const auto data = hg::gen_data(ProblemKind::KRR, 2, 0.1, kSmall);
  const auto sp = hg::make_krr(data);
  Vec lam = Vec::Constant(7, 0.001);
  lam(0) = -1.0;
  try {
    (void)sp.lower.curvature(lam);
    FAIL();
  } catch (const hg::Error& e) {
    EXPECT_EQ(e.code(), hg::Errc::InvalidConstants);
  }
}

TEST(Krr, OuterLambdaGradientByFiniteDifferences) {
  const auto data = hg::gen_data(ProblemKind::KRR, 8, 0.1, kSmall);
  const auto sp = hg::make_krr(data);
  const Vec lam = sample_lambda(ProblemKind::KRR, 9);
  hg::Rng rng(10);
  const Vec w = hg::sample_normal_vec(rng, sp.lower.dim_w);
  const Vec g = sp.outer.grad_lambda(w, lam);
  for (hg::Index i = 0; i < lam.size(); ++i) {
    Vec up = lam, dn = lam;
    const double h = 1e-7;
    up(i) += h;
    dn(i) -= h;
    const double fd = (sp.outer.value(w, up) - sp.outer.value(w, dn)) / (2 * h);
    EXPECT_NEAR(g(i), fd, 1e-5 * (1 + std::abs(fd)));
  }
}

TEST(Suite, DefaultLowerSolver) {
  EXPECT_EQ(hg::default_lower_solver(ProblemKind::LR), hg::LowerSolver::GradientDescent);
  EXPECT_EQ(hg::default_lower_solver(ProblemKind::BR), hg::LowerSolver::HeavyBall);
}

TEST(WriteDatasetCsv, Layout) {
  const auto data = hg::gen_data(ProblemKind::BR, 1, 0.1, {3, 2, 4, 1});
  std::ostringstream out;
  hg::write_dataset_csv(data, out);
  const std::string s = out.str();
  EXPECT_EQ(s.substr(0, s.find("\r\n")), "split,target,x0,x1,x2,x3");
  int lines = 0;
  for (std::size_t pos = 0; (pos = s.find("\r\n", pos)) != std::string::npos; pos += 2) ++lines;
  EXPECT_EQ(lines, 1 + 3 + 2);
  EXPECT_NE(s.find("\r\nval,"), std::string::npos);
}
