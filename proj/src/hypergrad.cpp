#include "hg/hypergrad.hpp"

#include "hg/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hg {

Method method_for(AdjointSolver solver) {
  switch (solver) {
    case AdjointSolver::FP: return Method::AID_FP;
    case AdjointSolver::CG: return Method::AID_CG;
    case AdjointSolver::CGNORMAL: return Method::AID_CGNORMAL;
  }
  return Method::AID_FP;
}

Hypergradient itd(const BilevelProblem& p, const Vec& lam, const Trajectory& traj) {
  const int t = traj.steps();
  if (t < 1) throw Error(Errc::InvalidArgument, "itd: t must be >= 1");
  const Vec& w_t = traj.last();
  Vec alpha = p.grad1_E(w_t, lam);
  Vec g = p.grad2_E(w_t, lam);
  for (int i = t; i >= 1; --i) {
    const Vec& prev = traj.iterates[static_cast<std::size_t>(i - 1)];
    g += p.d2phi_tvec(prev, lam, alpha);
    alpha = p.d1phi_tvec(prev, lam, alpha);
  }
  return {std::move(g), Method::ITD, t, 0};
}

Hypergradient itd(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0) {
  if (t < 1) throw Error(Errc::InvalidArgument, "itd: t must be >= 1");
  return itd(p, lam, iterate(p, lam, t, w0));
}

AdjointSolveReport fp_adjoint(const LinearOperator& apply_At, const Vec& b, int k) {
  if (k < 0) throw Error(Errc::InvalidArgument, "fp_adjoint: k must be >= 0");
  Vec v = Vec::Zero(b.size());
  for (int i = 0; i < k; ++i) v = apply_At(v) + b;
  const double residual = (v - apply_At(v) - b).norm();
  return {std::move(v), k, residual};
}

AdjointSolveReport cg(const LinearOperator& apply_A, const Vec& b, int k, double tol) {
  if (k < 0) throw Error(Errc::InvalidArgument, "cg: k must be >= 0");
  const Index n = b.size();
  Vec v = Vec::Zero(n);
  Vec r = b;
  Vec dir = r;
  double rr = r.squaredNorm();
  const double stop = tol * b.norm();
  // Residuals are kept orthonormal explicitly (two Gram-Schmidt passes);
  // plain CG loses finite termination on ill-conditioned spectra. Once n
  // directions are used the recursion restarts from the true residual.
  Mat basis(n, std::min<Index>(n, std::max(k, 1)));
  Index used = 0;
  auto remember = [&](const Vec& x, double norm) {
    if (used < basis.cols()) basis.col(used++) = x / norm;
  };
  if (rr > 0.0) remember(r, std::sqrt(rr));
  int it = 0;
  while (it < k && rr > 0.0 && std::sqrt(rr) > stop) {
    const Vec Ad = apply_A(dir);
    const double curvature = dir.dot(Ad);
    if (!(curvature > 0.0))
      throw Error(Errc::Breakdown, "cg: p^T A p = " + std::to_string(curvature) + " at iteration " + std::to_string(it));
    const double step = rr / curvature;
    v += step * dir;
    ++it;
    if (used >= n) {
      r = b - apply_A(v);
      rr = r.squaredNorm();
      dir = r;
      used = 0;
      if (rr > 0.0) remember(r, std::sqrt(rr));
      continue;
    }
    r -= step * Ad;
    for (int pass = 0; pass < 2; ++pass) {
      const auto U = basis.leftCols(used);
      r -= U * (U.transpose() * r);
    }
    const double rr_next = r.squaredNorm();
    dir = r + (rr_next / rr) * dir;
    rr = rr_next;
    if (rr > 0.0) remember(r, std::sqrt(rr));
  }
  const double residual = (apply_A(v) - b).norm();
  return {std::move(v), it, residual};
}

AdjointSolveReport cg_normal(const LinearOperator& apply_A, const LinearOperator& apply_At, const Vec& b, int k,
                             double tol) {
  if (k < 0) throw Error(Errc::InvalidArgument, "cg_normal: k must be >= 0");
  // CGNR: works with the residual r = b - A v of the original system and
  // s = A^T r of the normal system.
  const Index n = b.size();
  Vec v = Vec::Zero(n);
  Vec r = b;
  Vec s = apply_At(r);
  Vec dir = s;
  double ss = s.squaredNorm();
  const double stop = tol * apply_At(b).norm();
  int it = 0;
  while (it < k && ss > 0.0 && std::sqrt(ss) > stop) {
    const Vec Ad = apply_A(dir);
    const double curvature = Ad.squaredNorm();
    if (!(curvature > 0.0))
      throw Error(Errc::Breakdown, "cg_normal: ||A p||^2 = 0 at iteration " + std::to_string(it));
    const double step = ss / curvature;
    v += step * dir;
    r -= step * Ad;
    s = apply_At(r);
    const double ss_next = s.squaredNorm();
    dir = s + (ss_next / ss) * dir;
    ss = ss_next;
    ++it;
  }
  const double residual = (apply_A(v) - b).norm();
  return {std::move(v), it, residual};
}

std::pair<Hypergradient, AdjointSolveReport> aid_at(const BilevelProblem& p, const Vec& lam, const Vec& w_t, int k,
                                                    AdjointSolver solver) {
  if (k < 1) throw Error(Errc::InvalidArgument, "aid: k must be >= 1");
  const Vec b = p.grad1_E(w_t, lam);
  const LinearOperator At = [&](const Vec& v) { return p.d1phi_tvec(w_t, lam, v); };

  AdjointSolveReport report;
  switch (solver) {
    case AdjointSolver::FP:
      report = fp_adjoint(At, b, k);
      break;
    case AdjointSolver::CG: {
      if (!p.symmetric_d1phi)
        throw Error(Errc::NotSymmetric, "aid: plain CG needs a symmetric d1Phi; use the normal equations");
      report = cg([&](const Vec& v) -> Vec { return v - At(v); }, b, k);
      break;
    }
    case AdjointSolver::CGNORMAL: {
      if (!p.d1phi_vec) throw Error(Errc::InvalidArgument, "aid: normal-equation CG needs d1phi_vec");
      // The system matrix is I - d1Phi^T; its transpose is I - d1Phi.
      report = cg_normal([&](const Vec& v) -> Vec { return v - At(v); },
                         [&](const Vec& v) -> Vec { return v - p.d1phi_vec(w_t, lam, v); }, b, k);
      break;
    }
  }

  Vec g = p.grad2_E(w_t, lam) + p.d2phi_tvec(w_t, lam, report.v);
  return {Hypergradient{std::move(g), method_for(solver), -1, k}, std::move(report)};
}

std::pair<Hypergradient, AdjointSolveReport> aid(const BilevelProblem& p, const Vec& lam, int t, int k,
                                                 AdjointSolver solver, const Vec& w0) {
  if (t < 1) throw Error(Errc::InvalidArgument, "aid: t must be >= 1");
  if (solver == AdjointSolver::CG && !p.symmetric_d1phi)
    throw Error(Errc::NotSymmetric, "aid: plain CG needs a symmetric d1Phi; use the normal equations");
  const Vec w_t = iterate_last(p, lam, t, w0);
  auto result = aid_at(p, lam, w_t, k, solver);
  result.first.t = t;
  return result;
}

Vec fp_forward_check(const BilevelProblem& p, const Vec& lam, int t, int k, const DenseJacobians& jac,
                     const Vec& w0) {
  if (!jac.d1phi || !jac.d2phi) throw Error(Errc::InvalidArgument, "fp_forward_check: dense Jacobians missing");
  const Vec w_t = iterate_last(p, lam, t, w0);
  const Mat J1 = jac.d1phi(w_t, lam);
  const Mat J2 = jac.d2phi(w_t, lam);
  Mat u = Mat::Zero(p.dim_w, p.dim_lambda);
  for (int i = 0; i < k; ++i) u = J1 * u + J2;
  return u.transpose() * p.grad1_E(w_t, lam);
}

}  // namespace hg
