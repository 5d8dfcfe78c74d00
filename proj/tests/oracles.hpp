#pragma once

// Independent reference computations for the tests. None of these reuse the
// library's solvers; they work with dense matrices and plain loops.

#include "hg/lower_solvers.hpp"
#include "hg/numkit.hpp"
#include "hg/problem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>

namespace oracle {

using hg::Index;
using hg::Mat;
using hg::Vec;

/// Forward-mode ITD: dw_i/dlam = d1Phi(w_{i-1}) dw_{i-1} + d2Phi(w_{i-1}),
/// then grad = grad2E + (dw_t)^T grad1E.
inline Vec itd_forward_dense(const hg::BilevelProblem& p, const hg::DenseJacobians& jac, const Vec& lam, int t,
                             const Vec& w0) {
  Vec w = w0;
  Mat dw = Mat::Zero(p.dim_w, p.dim_lambda);
  for (int i = 0; i < t; ++i) {
    const Mat J1 = jac.d1phi(w, lam);
    const Mat J2 = jac.d2phi(w, lam);
    dw = J1 * dw + J2;
    w = p.phi(w, lam);
  }
  return p.grad2_E(w, lam) + dw.transpose() * p.grad1_E(w, lam);
}

/// Partial Neumann sum sum_{i<k} (J^T)^i b, term by term.
inline Vec neumann(const Mat& J, const Vec& b, int k) {
  Vec term = b;
  Vec sum = Vec::Zero(b.size());
  for (int i = 0; i < k; ++i) {
    sum += term;
    term = J.transpose() * term;
  }
  return sum;
}

/// Exact implicit hypergradient via Eigen's LU, independent of solve_dense.
inline Vec implicit_dense(const hg::BilevelProblem& p, const hg::DenseJacobians& jac, const Vec& lam, const Vec& w) {
  const Mat J1 = jac.d1phi(w, lam);
  const Mat J2 = jac.d2phi(w, lam);
  const Mat I = Mat::Identity(J1.rows(), J1.cols());
  const Vec v = (I - J1.transpose()).partialPivLu().solve(p.grad1_E(w, lam));
  return p.grad2_E(w, lam) + J2.transpose() * v;
}

/// Fourth-order central difference of f(lam) = E(w(lam), lam), w from the
/// problem's exact fixed point.
inline Vec fd4(const hg::BilevelProblem& p, const Vec& lam, double h) {
  auto f = [&](const Vec& l) { return p.outer_E(p.exact_fixed_point(l), l); };
  Vec g(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    Vec a = lam, b = lam, c = lam, d = lam;
    a(i) += 2 * h;
    b(i) += h;
    c(i) -= h;
    d(i) -= 2 * h;
    g(i) = (-f(a) + 8 * f(b) - 8 * f(c) + f(d)) / (12 * h);
  }
  return g;
}

/// Random d x d matrix with prescribed singular values spread in [lo, hi].
inline Mat with_singular_values(hg::Rng& rng, Index d, double lo, double hi) {
  const Mat G1 = hg::sample_normal(rng, d, d);
  const Mat G2 = hg::sample_normal(rng, d, d);
  const Mat U = Eigen::HouseholderQR<Mat>(G1).householderQ();
  const Mat V = Eigen::HouseholderQR<Mat>(G2).householderQ();
  Vec s(d);
  for (Index i = 0; i < d; ++i) s(i) = d == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d - 1);
  return U * s.asDiagonal() * V.transpose();
}

/// Random SPD matrix with eigenvalues log-spaced in [1, cond].
inline Mat random_spd(hg::Rng& rng, Index d, double cond) {
  const Mat Q = Eigen::HouseholderQR<Mat>(hg::sample_normal(rng, d, d)).householderQ();
  Vec e(d);
  for (Index i = 0; i < d; ++i)
    e(i) = d == 1 ? 1.0 : std::pow(cond, static_cast<double>(i) / static_cast<double>(d - 1));
  return Q * e.asDiagonal() * Q.transpose();
}

/// Toy nonlinear contraction: phi(w, lam) = tanh(M w + N lam + c) with
/// ||M||_2 = q, E(w, lam) = 1/2 ||w - a||^2 + 1/2 s ||lam||^2 + a^T w * lam_0.
struct Toy {
  Mat M, N;
  Vec c, a;
  double s = 0.1;
};

inline std::pair<hg::BilevelProblem, hg::DenseJacobians> toy_problem(hg::Rng& rng, Index d, Index n, double q) {
  auto toy = std::make_shared<Toy>();
  toy->M = with_singular_values(rng, d, 0.0, q);
  toy->N = hg::sample_normal(rng, d, n);
  toy->c = hg::sample_normal_vec(rng, d) * 0.3;
  toy->a = hg::sample_normal_vec(rng, d);

  auto pre = [toy](const Vec& w, const Vec& lam) -> Vec { return toy->M * w + toy->N * lam + toy->c; };
  auto slope = [pre](const Vec& w, const Vec& lam) -> Vec {
    return (1.0 - pre(w, lam).array().tanh().square()).matrix();
  };

  hg::BilevelProblem p;
  p.dim_w = d;
  p.dim_lambda = n;
  p.phi = [pre](const Vec& w, const Vec& lam) -> Vec { return pre(w, lam).array().tanh().matrix(); };
  p.d1phi_tvec = [toy, slope](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    return toy->M.transpose() * slope(w, lam).cwiseProduct(v);
  };
  p.d1phi_vec = [toy, slope](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    return slope(w, lam).cwiseProduct(toy->M * v);
  };
  p.d2phi_tvec = [toy, slope](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    return toy->N.transpose() * slope(w, lam).cwiseProduct(v);
  };
  p.grad1_E = [toy](const Vec& w, const Vec& lam) -> Vec { return w - toy->a + toy->a * lam(0); };
  p.grad2_E = [toy](const Vec& w, const Vec& lam) -> Vec {
    Vec g = toy->s * lam;
    g(0) += toy->a.dot(w);
    return g;
  };
  p.outer_E = [toy](const Vec& w, const Vec& lam) {
    return 0.5 * (w - toy->a).squaredNorm() + 0.5 * toy->s * lam.squaredNorm() + toy->a.dot(w) * lam(0);
  };
  p.exact_fixed_point = [phi = p.phi, d](const Vec& lam) {
    Vec w = Vec::Zero(d);
    for (int i = 0; i < 100000; ++i) {
      Vec next = phi(w, lam);
      const double change = (next - w).norm();
      w = std::move(next);
      if (change < 1e-15) break;
    }
    return w;
  };
  p.contraction_q = [q](const Vec&) { return q; };

  hg::DenseJacobians jac;
  jac.d1phi = [toy, slope](const Vec& w, const Vec& lam) -> Mat { return slope(w, lam).asDiagonal() * toy->M; };
  jac.d2phi = [toy, slope](const Vec& w, const Vec& lam) -> Mat { return slope(w, lam).asDiagonal() * toy->N; };
  return {p, jac};
}

/// Affine contraction phi(w, lam) = J w + K lam + c with E = 1/2 ||w - a||^2;
/// d1Phi = J exactly, so adjoint rates can be checked against ||J||.
inline std::pair<hg::BilevelProblem, hg::DenseJacobians> affine_problem(const Mat& J, const Mat& K, const Vec& c,
                                                                        const Vec& a) {
  hg::BilevelProblem p;
  p.dim_w = J.rows();
  p.dim_lambda = K.cols();
  p.phi = [J, K, c](const Vec& w, const Vec& lam) -> Vec { return J * w + K * lam + c; };
  p.d1phi_tvec = [J](const Vec&, const Vec&, const Vec& v) -> Vec { return J.transpose() * v; };
  p.d1phi_vec = [J](const Vec&, const Vec&, const Vec& v) -> Vec { return J * v; };
  p.d2phi_tvec = [K](const Vec&, const Vec&, const Vec& v) -> Vec { return K.transpose() * v; };
  p.grad1_E = [a](const Vec& w, const Vec&) -> Vec { return w - a; };
  p.grad2_E = [n = K.cols()](const Vec&, const Vec&) -> Vec { return Vec::Zero(n); };
  p.outer_E = [a](const Vec& w, const Vec&) { return 0.5 * (w - a).squaredNorm(); };
  p.exact_fixed_point = [J, K, c](const Vec& lam) -> Vec {
    const Mat I = Mat::Identity(J.rows(), J.cols());
    return (I - J).partialPivLu().solve(K * lam + c);
  };
  p.symmetric_d1phi = J.isApprox(J.transpose(), 1e-14);
  const double q = J.jacobiSvd().singularValues()(0);
  p.contraction_q = [q](const Vec&) { return q; };
  hg::DenseJacobians jac;
  jac.d1phi = [J](const Vec&, const Vec&) -> Mat { return J; };
  jac.d2phi = [K](const Vec&, const Vec&) -> Mat { return K; };
  return {p, jac};
}

}  // namespace oracle
