#include "hg/error.hpp"
#include "hg/hypergrad.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using hg::Mat;
using hg::Vec;

TEST(Itd, MatchesForwardModeOracle) {
  hg::Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [p, jac] = oracle::toy_problem(rng, 3 + trial, 1 + trial % 4, 0.8);
    const Vec lam = hg::sample_normal_vec(rng, p.dim_lambda);
    const Vec w0 = hg::sample_normal_vec(rng, p.dim_w);
    for (int t : {1, 2, 7, 25}) {
      const Vec ref = oracle::itd_forward_dense(p, jac, lam, t, w0);
      const auto g = hg::itd(p, lam, t, w0);
      EXPECT_LT((g.grad - ref).norm(), 1e-12 * (1 + ref.norm()));
      EXPECT_EQ(g.method, hg::Method::ITD);
      EXPECT_EQ(g.t, t);
    }
  }
}

TEST(Itd, ConvergesToExact) {
  hg::Rng rng(2);
  const auto [p, jac] = oracle::toy_problem(rng, 8, 3, 0.6);
  const Vec lam = hg::sample_normal_vec(rng, 3);
  const Vec exact = hg::exact_hypergrad(p, lam, jac).grad;
  const Vec g = hg::itd(p, lam, 120, Vec::Zero(8)).grad;
  EXPECT_LT((g - exact).norm(), 1e-10 * (1 + exact.norm()));
}

TEST(Itd, NeedsAtLeastOneStep) {
  hg::Rng rng(3);
  const auto [p, jac] = oracle::toy_problem(rng, 4, 2, 0.5);
  try {
    (void)hg::itd(p, Vec::Zero(2), 0, Vec::Zero(4));
    FAIL();
  } catch (const hg::Error& e) {
    EXPECT_EQ(e.code(), hg::Errc::InvalidArgument);
  }
}

TEST(FpAdjoint, EqualsNeumannPartialSum) {
  hg::Rng rng(4);
  const Mat J = oracle::with_singular_values(rng, 9, 0.1, 0.9);
  const Vec b = hg::sample_normal_vec(rng, 9);
  for (int k : {0, 1, 3, 30}) {
    const auto r = hg::fp_adjoint([&](const Vec& v) -> Vec { return J.transpose() * v; }, b, k);
    EXPECT_LT((r.v - oracle::neumann(J, b, k)).norm(), 1e-12 * (1 + b.norm()));
    EXPECT_EQ(r.iters, k);
    const Mat I = Mat::Identity(9, 9);
    EXPECT_NEAR(r.residual, ((I - J.transpose()) * r.v - b).norm(), 1e-12);
  }
}

TEST(Cg, SolvesSpdInDimensionSteps) {
  hg::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const hg::Index d = 2 + trial * 2;
    const Mat A = oracle::random_spd(rng, d, 1e3);
    const Vec b = hg::sample_normal_vec(rng, d);
    const auto r = hg::cg([&](const Vec& v) -> Vec { return A * v; }, b, static_cast<int>(d));
    EXPECT_LE((A * r.v - b).norm(), 1e-8 * b.norm());
    EXPECT_NEAR(r.residual, (A * r.v - b).norm(), 1e-12 * b.norm());
  }
}

TEST(Cg, ToleranceStopsEarly) {
  const Mat A = Mat::Identity(5, 5) * 2.0;
  const Vec b = Vec::Ones(5);
  const auto r = hg::cg([&](const Vec& v) -> Vec { return A * v; }, b, 50, 1e-12);
  EXPECT_EQ(r.iters, 1);
  EXPECT_LT((r.v - 0.5 * b).norm(), 1e-15);
}

TEST(Cg, ZeroRightHandSide) {
  const auto r = hg::cg([](const Vec& v) -> Vec { return v; }, Vec::Zero(4), 10, 0.0);
  EXPECT_TRUE(r.v.isZero());
}

TEST(Cg, IndefiniteBreaksDown) {
  Mat A = Mat::Identity(2, 2);
  A(1, 1) = -1.0;
  try {
    (void)hg::cg([&](const Vec& v) -> Vec { return A * v; }, Vec::Unit(2, 1), 5);
    FAIL();
  } catch (const hg::Error& e) {
    EXPECT_EQ(e.code(), hg::Errc::Breakdown);
  }
}

TEST(CgNormal, MatchesDenseSolveOnNonsymmetric) {
  hg::Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const hg::Index d = 3 + trial;
    const Mat J = oracle::with_singular_values(rng, d, 0.0, 0.7);
    const Mat A = Mat::Identity(d, d) - J.transpose();
    const Vec b = hg::sample_normal_vec(rng, d);
    const auto r = hg::cg_normal([&](const Vec& v) -> Vec { return A * v; },
                                 [&](const Vec& v) -> Vec { return A.transpose() * v; }, b, static_cast<int>(4 * d));
    const Vec x = A.partialPivLu().solve(b);
    EXPECT_LT((r.v - x).norm(), 1e-8 * x.norm());
  }
}

TEST(Aid, FpEqualsNeumannAtIterate) {
  hg::Rng rng(7);
  const auto [p, jac] = oracle::toy_problem(rng, 7, 3, 0.75);
  const Vec lam = hg::sample_normal_vec(rng, 3);
  const Vec w0 = Vec::Zero(7);
  const int t = 15, k = 9;
  const auto [g, rep] = hg::aid(p, lam, t, k, hg::AdjointSolver::FP, w0);
  const Vec wt = hg::iterate_last(p, lam, t, w0);
  const Vec v = oracle::neumann(jac.d1phi(wt, lam), p.grad1_E(wt, lam), k);
  const Vec ref = p.grad2_E(wt, lam) + jac.d2phi(wt, lam).transpose() * v;
  EXPECT_LT((g.grad - ref).norm(), 1e-12 * (1 + ref.norm()));
  EXPECT_EQ(g.method, hg::Method::AID_FP);
  EXPECT_EQ(g.t, t);
  EXPECT_EQ(g.k, k);
}

TEST(Aid, CgOnSymmetricAffineMap) {
  hg::Rng rng(8);
  const Mat S = oracle::random_spd(rng, 6, 5.0);
  const Mat J = 0.8 * S / S.norm();
  const Mat K = hg::sample_normal(rng, 6, 2);
  const auto [p, jac] = oracle::affine_problem(J, K, hg::sample_normal_vec(rng, 6), hg::sample_normal_vec(rng, 6));
  ASSERT_TRUE(p.symmetric_d1phi);
  const Vec lam = hg::sample_normal_vec(rng, 2);
  const Vec w_t = hg::iterate_last(p, lam, 200, Vec::Zero(6));
  const auto [g, rep] = hg::aid_at(p, lam, w_t, 6, hg::AdjointSolver::CG);
  EXPECT_LT((g.grad - oracle::implicit_dense(p, jac, lam, w_t)).norm(), 1e-9);
  EXPECT_EQ(g.t, -1);
  EXPECT_LT(rep.residual, 1e-9);
}

TEST(Aid, CgRejectsNonsymmetric) {
  hg::Rng rng(9);
  const auto [p, jac] = oracle::toy_problem(rng, 5, 2, 0.5);
  try {
    (void)hg::aid(p, Vec::Zero(2), 3, 3, hg::AdjointSolver::CG, Vec::Zero(5));
    FAIL();
  } catch (const hg::Error& e) {
    EXPECT_EQ(e.code(), hg::Errc::NotSymmetric);
  }
}

TEST(Aid, CgNormalNeedsForwardProduct) {
  hg::Rng rng(10);
  auto [p, jac] = oracle::toy_problem(rng, 5, 2, 0.5);
  p.d1phi_vec = nullptr;
  EXPECT_THROW((void)hg::aid(p, Vec::Zero(2), 3, 3, hg::AdjointSolver::CGNORMAL, Vec::Zero(5)), hg::Error);
}

TEST(Aid, CgNormalConvergesOnNonsymmetric) {
  hg::Rng rng(11);
  const auto [p, jac] = oracle::toy_problem(rng, 10, 3, 0.7);
  const Vec lam = hg::sample_normal_vec(rng, 3);
  const auto [g, rep] = hg::aid(p, lam, 200, 60, hg::AdjointSolver::CGNORMAL, Vec::Zero(10));
  const Vec exact = hg::exact_hypergrad(p, lam, jac).grad;
  EXPECT_LT((g.grad - exact).norm(), 1e-8 * (1 + exact.norm()));
  EXPECT_EQ(g.method, hg::Method::AID_CGNORMAL);
}

TEST(Aid, ResidualIsOfOriginalSystem) {
  hg::Rng rng(12);
  const auto [p, jac] = oracle::toy_problem(rng, 6, 2, 0.6);
  const Vec lam = hg::sample_normal_vec(rng, 2);
  const Vec wt = hg::iterate_last(p, lam, 10, Vec::Zero(6));
  for (auto solver : {hg::AdjointSolver::FP, hg::AdjointSolver::CGNORMAL}) {
    const auto [g, rep] = hg::aid_at(p, lam, wt, 4, solver);
    const Mat A = Mat::Identity(6, 6) - jac.d1phi(wt, lam).transpose();
    EXPECT_NEAR(rep.residual, (A * rep.v - p.grad1_E(wt, lam)).norm(), 1e-12);
  }
}

TEST(ForwardCheck, EqualsAdjointAssembly) {
  hg::Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [p, jac] = oracle::toy_problem(rng, 4 + trial, 1 + trial % 5, 0.9);
    const Vec lam = hg::sample_normal_vec(rng, p.dim_lambda);
    const Vec w0 = hg::sample_normal_vec(rng, p.dim_w);
    const int t = 1 + trial * 3, k = 1 + (trial * 7) % 30;
    const auto [g, rep] = hg::aid(p, lam, t, k, hg::AdjointSolver::FP, w0);
    const Vec wt = hg::iterate_last(p, lam, t, w0);
    const Vec fwd = hg::fp_forward_check(p, lam, t, k, jac, w0) + p.grad2_E(wt, lam);
    EXPECT_LT((g.grad - fwd).norm(), 1e-10 * (1 + g.grad.norm()));
  }
}

TEST(MethodFor, Names) {
  EXPECT_EQ(hg::method_for(hg::AdjointSolver::FP), hg::Method::AID_FP);
  EXPECT_EQ(hg::method_for(hg::AdjointSolver::CG), hg::Method::AID_CG);
  EXPECT_EQ(hg::method_for(hg::AdjointSolver::CGNORMAL), hg::Method::AID_CGNORMAL);
  EXPECT_EQ(hg::to_string(hg::Method::AID_CGNORMAL), "aid-cgn");
}
