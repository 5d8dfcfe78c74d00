#pragma once

// Contraction maps built from smooth strongly convex lower-level objectives,
// and the lower-level iteration that records trajectories.

#include "hg/numkit.hpp"
#include "hg/problem.hpp"

#include <functional>
#include <vector>

namespace hg {

/// Step size and contraction constant of the gradient-descent map
/// w - alpha * grad l(w).
struct GdMapSpec {
  double mu = 1.0;
  double L = 1.0;
  double alpha = 1.0;
  double q = 0.0;
};

/// Polyak's optimal heavy-ball pair for a (mu, L) quadratic.
struct HeavyBallSpec {
  double mu = 1.0;
  double L = 1.0;
  double alpha = 1.0;
  double beta = 0.0;
};

/// alpha = 2/(mu+L), q = (kappa-1)/(kappa+1). Throws InvalidConstants
/// unless 0 < mu <= L.
GdMapSpec gd_map_constants(double mu, double L);

/// alpha = 4/(sqrt(L)+sqrt(mu))^2, beta = ((sqrt(kappa)-1)/(sqrt(kappa)+1))^2.
HeavyBallSpec heavy_ball_constants(double mu, double L);

struct Curvature {
  double mu = 1.0;  // strong convexity
  double L = 1.0;   // smoothness
};

/// A smooth strongly convex lower-level objective l(w, lam).
struct LowerObjective {
  Index dim_w = 0;
  Index dim_lambda = 0;
  VecMap grad;             // grad_w l
  VecProduct hess_vec;     // grad^2_w l * v
  VecProduct mixed_tvec;   // (d/dlam grad_w l)^T v, length dim_lambda
  std::function<Curvature(const Vec& lam)> curvature;
  std::function<Vec(const Vec& lam)> argmin;  // optional closed form / exact solver
  MatFn hess_dense;   // optional
  MatFn mixed_dense;  // optional, dim_w x dim_lambda
};

/// Upper-level objective E(w, lam) and its partial gradients.
struct OuterObjective {
  ScalarFn value;
  VecMap grad_w;
  VecMap grad_lambda;
};

/// phi(w, lam) = w - alpha(lam) grad_w l(w, lam) with the optimal step for
/// the curvature at lam. d2phi_tvec drops the grad alpha(lam) term, which
/// vanishes at the fixed point.
BilevelProblem gd_map_problem(const LowerObjective& lower, const OuterObjective& outer);
DenseJacobians gd_map_jacobians(const LowerObjective& lower);

/// Heavy-ball as a fixed-point map on the stacked state s = (w, w_prev):
/// (w, w_prev) -> (w - alpha grad l(w) + beta (w - w_prev), w).
/// The map is not a Euclidean contraction, so contraction_q is left unset.
BilevelProblem heavy_ball_problem(const LowerObjective& lower, const OuterObjective& outer);
DenseJacobians heavy_ball_jacobians(const LowerObjective& lower);

/// (w0, w0): a heavy-ball state at rest.
Vec heavy_ball_lift(const Vec& w0);
/// The w block of a heavy-ball state.
Vec heavy_ball_head(const Vec& state);

struct Trajectory {
  std::vector<Vec> iterates;  // w_0 .. w_t
  Vec lam;

  [[nodiscard]] int steps() const { return static_cast<int>(iterates.size()) - 1; }
  [[nodiscard]] const Vec& last() const { return iterates.back(); }
};

inline constexpr double kDivergenceThreshold = 1e12;

/// t applications of p.phi from w0. Throws Diverged when an iterate's norm
/// exceeds kDivergenceThreshold or becomes non-finite.
Trajectory iterate(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0);
Trajectory iterate(const BilevelProblem& p, const Vec& lam, int t);

/// Like iterate but keeps only the last state.
Vec iterate_last(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0);

}  // namespace hg
