#include "hg/problem.hpp"

#include "hg/error.hpp"

#include <algorithm>
#include <vector>

namespace hg {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::ITD: return "itd";
    case Method::AID_FP: return "aid-fp";
    case Method::AID_CG: return "aid-cg";
    case Method::AID_CGNORMAL: return "aid-cgn";
    case Method::EXACT: return "exact";
    case Method::FD: return "fd";
  }
  return "unknown";
}

namespace {

void require_fixed_point(const BilevelProblem& p) {
  if (!p.exact_fixed_point) throw Error(Errc::InvalidArgument, "problem has no exact fixed point");
}

}  // namespace

double upper_objective(const BilevelProblem& p, const Vec& lam) {
  require_fixed_point(p);
  return p.outer_E(p.exact_fixed_point(lam), lam);
}

Hypergradient exact_hypergrad(const BilevelProblem& p, const Vec& lam, const DenseJacobians& jac,
                              ExactRoute route) {
  require_fixed_point(p);
  if (!jac.d1phi) throw Error(Errc::InvalidArgument, "exact_hypergrad: dense d1phi missing");

  const Vec w = p.exact_fixed_point(lam);
  const Mat system = Mat::Identity(p.dim_w, p.dim_w) - jac.d1phi(w, lam);
  const Vec g1 = p.grad1_E(w, lam);
  Vec grad = p.grad2_E(w, lam);

  if (route == ExactRoute::Adjoint) {
    const Vec v = solve_dense(Mat(system.transpose()), g1);
    grad += p.d2phi_tvec(w, lam, v);
  } else {
    if (!jac.d2phi) throw Error(Errc::InvalidArgument, "exact_hypergrad: tangent route needs dense d2phi");
    const Mat tangent = solve_dense(system, jac.d2phi(w, lam));
    grad.noalias() += tangent.transpose() * g1;
  }
  return {std::move(grad), Method::EXACT, 0, 0};
}

Hypergradient fd_hypergrad(const BilevelProblem& p, const Vec& lam, double h) {
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "fd_hypergrad: step must be positive");
  std::vector<Index> coords(static_cast<std::size_t>(lam.size()));
  for (Index i = 0; i < lam.size(); ++i) coords[static_cast<std::size_t>(i)] = i;
  return {fd_hypergrad_coords(p, lam, coords, h), Method::FD, 0, 0};
}

Vec fd_hypergrad_coords(const BilevelProblem& p, const Vec& lam, std::span<const Index> coords, double h) {
  require_fixed_point(p);
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "fd_hypergrad: step must be positive");
  Vec out(static_cast<Index>(coords.size()));
  Vec shifted = lam;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Index c = coords[i];
    shifted(c) = lam(c) + h;
    const double up = upper_objective(p, shifted);
    shifted(c) = lam(c) - h;
    const double down = upper_objective(p, shifted);
    shifted(c) = lam(c);
    out(static_cast<Index>(i)) = (up - down) / (2.0 * h);
  }
  return out;
}

double check_contraction(const BilevelProblem& p, const Vec& lam, int samples, Rng& rng) {
  if (samples < 1) throw Error(Errc::InvalidArgument, "check_contraction: samples must be >= 1");
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec w1 = sample_normal_vec(rng, p.dim_w);
    const Vec w2 = sample_normal_vec(rng, p.dim_w);
    const double gap = (w1 - w2).norm();
    if (gap == 0.0) continue;
    worst = std::max(worst, (p.phi(w1, lam) - p.phi(w2, lam)).norm() / gap);
  }
  return worst;
}

}  // namespace hg
