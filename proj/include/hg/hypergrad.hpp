#pragma once

// Hypergradient engines: reverse accumulation through the unrolled lower
// iterations (ITD) and implicit differentiation with an approximate adjoint
// solve (AID) by fixed-point iteration or conjugate gradient.

#include "hg/lower_solvers.hpp"
#include "hg/numkit.hpp"
#include "hg/problem.hpp"

#include <functional>
#include <utility>

namespace hg {

using LinearOperator = std::function<Vec(const Vec&)>;

struct AdjointSolveReport {
  Vec v;
  int iters = 0;
  double residual = 0.0;  // ||A v - b|| of the original (not normal) system
};

enum class AdjointSolver { FP, CG, CGNORMAL };

Method method_for(AdjointSolver solver);

/// Gradient of f_t(lam) = E(w_t(lam), lam) by reverse accumulation over the
/// stored trajectory. Requires t >= 1.
Hypergradient itd(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0);
Hypergradient itd(const BilevelProblem& p, const Vec& lam, const Trajectory& traj);

/// Runs t lower iterations from w0, solves (I - d1Phi^T) v = grad1E with k
/// solver iterations from v = 0, and returns grad2E + d2Phi^T v.
std::pair<Hypergradient, AdjointSolveReport> aid(const BilevelProblem& p, const Vec& lam, int t, int k,
                                                 AdjointSolver solver, const Vec& w0);

/// Steps two and three of AID at a given lower-level approximation w_t.
/// The reported Hypergradient carries t = -1 unless set by the caller.
std::pair<Hypergradient, AdjointSolveReport> aid_at(const BilevelProblem& p, const Vec& lam, const Vec& w_t,
                                                    int k, AdjointSolver solver);

/// v_k = sum_{i<k} (A^T)^i b, i.e. k steps of v <- A^T v + b from v = 0.
/// apply_At is the map v -> d1Phi^T v.
AdjointSolveReport fp_adjoint(const LinearOperator& apply_At, const Vec& b, int k);

/// Conjugate gradient on an SPD operator from v = 0. Stops after k
/// iterations or once the recursive residual is <= tol * ||b||.
/// Throws Breakdown when p^T A p <= 0.
AdjointSolveReport cg(const LinearOperator& apply_A, const Vec& b, int k, double tol = 0.0);

/// Conjugate gradient on A^T A v = A^T b; one apply_A and one apply_At per
/// iteration.
AdjointSolveReport cg_normal(const LinearOperator& apply_A, const LinearOperator& apply_At, const Vec& b, int k,
                             double tol = 0.0);

/// Forward accumulation u_k = d1Phi u_{k-1} + d2Phi from u_0 = 0 at w_t,
/// returned as u_k^T grad1E(w_t). Equals d2Phi^T v_{t,k} of AID-FP; used as
/// a cross-check.
Vec fp_forward_check(const BilevelProblem& p, const Vec& lam, int t, int k, const DenseJacobians& jac,
                     const Vec& w0);

}  // namespace hg
