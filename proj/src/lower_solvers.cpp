#include "hg/lower_solvers.hpp"

#include "hg/error.hpp"

#include <cmath>
#include <string>

namespace hg {

namespace {

void check_curvature(double mu, double L) {
  if (!(mu > 0.0) || !(L >= mu) || !std::isfinite(L))
    throw Error(Errc::InvalidConstants,
                "need 0 < mu <= L, got mu=" + std::to_string(mu) + " L=" + std::to_string(L));
}

void check_iterate(const Vec& w, int step) {
  if (!w.allFinite() || w.norm() > kDivergenceThreshold)
    throw Error(Errc::Diverged, "lower-level iterate blew up at step " + std::to_string(step));
}

}  // namespace

GdMapSpec gd_map_constants(double mu, double L) {
  check_curvature(mu, L);
  const double kappa = L / mu;
  return {mu, L, 2.0 / (mu + L), (kappa - 1.0) / (kappa + 1.0)};
}

HeavyBallSpec heavy_ball_constants(double mu, double L) {
  check_curvature(mu, L);
  const double root_mu = std::sqrt(mu);
  const double root_L = std::sqrt(L);
  const double root_kappa = root_L / root_mu;
  const double ratio = (root_kappa - 1.0) / (root_kappa + 1.0);
  return {mu, L, 4.0 / ((root_L + root_mu) * (root_L + root_mu)), ratio * ratio};
}

BilevelProblem gd_map_problem(const LowerObjective& lower, const OuterObjective& outer) {
  auto step = [lower](const Vec& lam) {
    const Curvature c = lower.curvature(lam);
    return gd_map_constants(c.mu, c.L).alpha;
  };

  BilevelProblem p;
  p.dim_w = lower.dim_w;
  p.dim_lambda = lower.dim_lambda;
  p.phi = [lower, step](const Vec& w, const Vec& lam) -> Vec {
    return w - step(lam) * lower.grad(w, lam);
  };
  // The Hessian is symmetric, so the forward and transposed products agree.
  p.d1phi_tvec = [lower, step](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    return v - step(lam) * lower.hess_vec(w, lam, v);
  };
  p.d1phi_vec = p.d1phi_tvec;
  p.d2phi_tvec = [lower, step](const Vec& w, const Vec& lam, const Vec& v) -> Vec {
    return -step(lam) * lower.mixed_tvec(w, lam, v);
  };
  p.grad1_E = outer.grad_w;
  p.grad2_E = outer.grad_lambda;
  p.outer_E = outer.value;
  if (lower.argmin) p.exact_fixed_point = lower.argmin;
  p.contraction_q = [lower](const Vec& lam) {
    const Curvature c = lower.curvature(lam);
    return gd_map_constants(c.mu, c.L).q;
  };
  p.symmetric_d1phi = true;
  return p;
}

DenseJacobians gd_map_jacobians(const LowerObjective& lower) {
  auto step = [lower](const Vec& lam) {
    const Curvature c = lower.curvature(lam);
    return gd_map_constants(c.mu, c.L).alpha;
  };
  DenseJacobians jac;
  if (lower.hess_dense) {
    jac.d1phi = [lower, step](const Vec& w, const Vec& lam) -> Mat {
      return Mat::Identity(lower.dim_w, lower.dim_w) - step(lam) * lower.hess_dense(w, lam);
    };
  }
  if (lower.mixed_dense) {
    jac.d2phi = [lower, step](const Vec& w, const Vec& lam) -> Mat {
      return -step(lam) * lower.mixed_dense(w, lam);
    };
  }
  return jac;
}

Vec heavy_ball_lift(const Vec& w0) {
  Vec state(2 * w0.size());
  state << w0, w0;
  return state;
}

Vec heavy_ball_head(const Vec& state) { return state.head(state.size() / 2); }

BilevelProblem heavy_ball_problem(const LowerObjective& lower, const OuterObjective& outer) {
  const Index d = lower.dim_w;
  auto constants = [lower](const Vec& lam) {
    const Curvature c = lower.curvature(lam);
    return heavy_ball_constants(c.mu, c.L);
  };

  BilevelProblem p;
  p.dim_w = 2 * d;
  p.dim_lambda = lower.dim_lambda;
  p.phi = [lower, constants, d](const Vec& s, const Vec& lam) -> Vec {
    const HeavyBallSpec hb = constants(lam);
    const Vec w = s.head(d);
    Vec next(2 * d);
    next.head(d) = w - hb.alpha * lower.grad(w, lam) + hb.beta * (w - s.tail(d));
    next.tail(d) = w;
    return next;
  };
  // J = [[(1+beta) I - alpha H, -beta I], [I, 0]]
  p.d1phi_tvec = [lower, constants, d](const Vec& s, const Vec& lam, const Vec& v) -> Vec {
    const HeavyBallSpec hb = constants(lam);
    const Vec w = s.head(d);
    const Vec v1 = v.head(d);
    Vec out(2 * d);
    out.head(d) = (1.0 + hb.beta) * v1 - hb.alpha * lower.hess_vec(w, lam, v1) + v.tail(d);
    out.tail(d) = -hb.beta * v1;
    return out;
  };
  p.d1phi_vec = [lower, constants, d](const Vec& s, const Vec& lam, const Vec& u) -> Vec {
    const HeavyBallSpec hb = constants(lam);
    const Vec w = s.head(d);
    const Vec u1 = u.head(d);
    Vec out(2 * d);
    out.head(d) = (1.0 + hb.beta) * u1 - hb.alpha * lower.hess_vec(w, lam, u1) - hb.beta * u.tail(d);
    out.tail(d) = u1;
    return out;
  };
  p.d2phi_tvec = [lower, constants, d](const Vec& s, const Vec& lam, const Vec& v) -> Vec {
    return -constants(lam).alpha * lower.mixed_tvec(s.head(d), lam, v.head(d));
  };
  p.grad1_E = [outer, d](const Vec& s, const Vec& lam) -> Vec {
    Vec g = Vec::Zero(2 * d);
    g.head(d) = outer.grad_w(s.head(d), lam);
    return g;
  };
  p.grad2_E = [outer, d](const Vec& s, const Vec& lam) -> Vec { return outer.grad_lambda(s.head(d), lam); };
  p.outer_E = [outer, d](const Vec& s, const Vec& lam) { return outer.value(s.head(d), lam); };
  if (lower.argmin) {
    p.exact_fixed_point = [lower](const Vec& lam) { return heavy_ball_lift(lower.argmin(lam)); };
  }
  p.symmetric_d1phi = false;
  return p;
}

DenseJacobians heavy_ball_jacobians(const LowerObjective& lower) {
  const Index d = lower.dim_w;
  auto constants = [lower](const Vec& lam) {
    const Curvature c = lower.curvature(lam);
    return heavy_ball_constants(c.mu, c.L);
  };
  DenseJacobians jac;
  if (lower.hess_dense) {
    jac.d1phi = [lower, constants, d](const Vec& s, const Vec& lam) -> Mat {
      const HeavyBallSpec hb = constants(lam);
      const Mat I = Mat::Identity(d, d);
      Mat J = Mat::Zero(2 * d, 2 * d);
      J.topLeftCorner(d, d) = (1.0 + hb.beta) * I - hb.alpha * lower.hess_dense(s.head(d), lam);
      J.topRightCorner(d, d) = -hb.beta * I;
      J.bottomLeftCorner(d, d) = I;
      return J;
    };
  }
  if (lower.mixed_dense) {
    jac.d2phi = [lower, constants, d](const Vec& s, const Vec& lam) -> Mat {
      Mat J = Mat::Zero(2 * d, lower.dim_lambda);
      J.topRows(d) = -constants(lam).alpha * lower.mixed_dense(s.head(d), lam);
      return J;
    };
  }
  return jac;
}

Trajectory iterate(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0) {
  if (t < 0) throw Error(Errc::InvalidArgument, "iterate: t must be >= 0");
  if (w0.size() != p.dim_w) throw Error(Errc::InvalidArgument, "iterate: w0 has wrong length");
  Trajectory traj;
  traj.lam = lam;
  traj.iterates.reserve(static_cast<std::size_t>(t) + 1);
  traj.iterates.push_back(w0);
  for (int i = 1; i <= t; ++i) {
    traj.iterates.push_back(p.phi(traj.iterates.back(), lam));
    check_iterate(traj.iterates.back(), i);
  }
  return traj;
}

Trajectory iterate(const BilevelProblem& p, const Vec& lam, int t) {
  return iterate(p, lam, t, Vec::Zero(p.dim_w));
}

Vec iterate_last(const BilevelProblem& p, const Vec& lam, int t, const Vec& w0) {
  if (t < 0) throw Error(Errc::InvalidArgument, "iterate: t must be >= 0");
  if (w0.size() != p.dim_w) throw Error(Errc::InvalidArgument, "iterate: w0 has wrong length");
  Vec w = w0;
  for (int i = 1; i <= t; ++i) {
    w = p.phi(w, lam);
    check_iterate(w, i);
  }
  return w;
}

}  // namespace hg
