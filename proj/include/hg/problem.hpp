#pragma once

// Bilevel problem abstraction: the lower level is the fixed point
// w(lam) = phi(w(lam), lam) and the upper objective is f(lam) = E(w(lam), lam).

#include "hg/numkit.hpp"

#include <functional>
#include <span>
#include <string_view>

namespace hg {

using VecMap = std::function<Vec(const Vec& w, const Vec& lam)>;
using VecProduct = std::function<Vec(const Vec& w, const Vec& lam, const Vec& v)>;
using ScalarFn = std::function<double(const Vec& w, const Vec& lam)>;
using MatFn = std::function<Mat(const Vec& w, const Vec& lam)>;

/// Callback bundle describing one bilevel problem. Every callback must be
/// pure so a single instance can be evaluated from several threads.
struct BilevelProblem {
  Index dim_w = 0;
  Index dim_lambda = 0;

  VecMap phi;
  VecProduct d1phi_tvec;  // d1Phi(w, lam)^T v, length dim_w
  VecProduct d2phi_tvec;  // d2Phi(w, lam)^T v, length dim_lambda
  VecProduct d1phi_vec;   // d1Phi(w, lam) v; optional, needed by normal-equation CG

  VecMap grad1_E;
  VecMap grad2_E;
  ScalarFn outer_E;

  std::function<Vec(const Vec& lam)> exact_fixed_point;  // optional
  std::function<double(const Vec& lam)> contraction_q;   // optional

  bool symmetric_d1phi = false;
};

/// Dense partial Jacobians, used only by oracles and bound calculators.
struct DenseJacobians {
  MatFn d1phi;  // dim_w x dim_w
  MatFn d2phi;  // dim_w x dim_lambda; optional for the adjoint route
};

enum class Method { ITD, AID_FP, AID_CG, AID_CGNORMAL, EXACT, FD };

std::string_view to_string(Method m);

struct Hypergradient {
  Vec grad;
  Method method = Method::EXACT;
  int t = 0;
  int k = 0;
};

enum class ExactRoute {
  Adjoint,  // grad2E + d2Phi^T (I - d1Phi^T)^{-1} grad1E
  Tangent,  // grad2E + w'^T grad1E with w' = (I - d1Phi)^{-1} d2Phi
};

/// Hypergradient at the exact lower-level solution via a dense solve.
Hypergradient exact_hypergrad(const BilevelProblem& p, const Vec& lam, const DenseJacobians& jac,
                              ExactRoute route = ExactRoute::Adjoint);

/// Central differences of f(lam) = E(w(lam), lam), one coordinate at a time.
Hypergradient fd_hypergrad(const BilevelProblem& p, const Vec& lam, double h = 1e-5);

/// Central difference of f along the listed coordinates only; the result has
/// one entry per requested coordinate.
Vec fd_hypergrad_coords(const BilevelProblem& p, const Vec& lam, std::span<const Index> coords,
                        double h = 1e-5);

/// Empirical Lipschitz constant of phi(., lam): the largest ratio
/// ||phi(w1) - phi(w2)|| / ||w1 - w2|| over random standard-normal pairs.
double check_contraction(const BilevelProblem& p, const Vec& lam, int samples, Rng& rng);

/// f(lam) = E(w(lam), lam) using the exact fixed point.
double upper_objective(const BilevelProblem& p, const Vec& lam);

}  // namespace hg
