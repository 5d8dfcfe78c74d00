#include "hg/bounds.hpp"

#include "hg/error.hpp"

#include <cmath>

namespace hg {

void validate(const BoundConstants& c) {
  const bool non_negative = c.D >= 0 && c.L_E >= 0 && c.L_Phi >= 0 && c.nu1 >= 0 && c.nu2 >= 0 && c.eta1 >= 0 &&
                            c.eta2 >= 0;
  if (!non_negative) throw Error(Errc::InvalidConstants, "bound constants must be non-negative");
  if (!(c.q >= 0.0 && c.q < 1.0)) throw Error(Errc::InvalidConstants, "contraction constant must lie in [0, 1)");
  if (!(c.mu > 0.0)) throw Error(Errc::InvalidConstants, "mu must be positive");
}

BoundCoefficients coefficients(const BoundConstants& c) {
  validate(c);
  const double gap = 1.0 - c.q;
  return {c.q, (c.eta2 + c.eta1 * c.L_Phi / gap) * c.D, (c.nu2 + c.nu1 * c.L_Phi / gap) * c.L_E * c.D,
          c.L_E * c.L_Phi / gap};
}

double itd_bound(const BoundCoefficients& c, int t) {
  if (t < 1) throw Error(Errc::InvalidArgument, "itd_bound: t must be >= 1");
  // c2 t/q q^t written as c2 t q^(t-1) so q = 0 stays finite.
  // Same grouping as aid_fp_bound, so the two agree bit for bit when c2 = 0, k = t.
  const double qt = std::pow(c.q, t);
  return (c.c1 * qt + c.c3 * qt) + c.c2 * t * std::pow(c.q, t - 1);
}

double aid_bound(const BoundCoefficients& c, double rho_t, double sigma_k) {
  return (c.c1 + c.c2 / (1.0 - c.q)) * rho_t + c.c3 * sigma_k;
}

double aid_bound(const BoundConstants& c, double rho_t, double sigma_k) {
  validate(c);
  const double mu = c.mu;
  const double lead = c.eta2 + c.eta1 * c.L_Phi / mu + c.nu2 * c.L_E / mu + c.nu1 * c.L_Phi * c.L_E / (mu * mu);
  return lead * c.D * rho_t + c.L_Phi * c.L_E / mu * sigma_k;
}

double aid_fp_bound(const BoundCoefficients& c, int t, int k) {
  if (t < 1 || k < 1) throw Error(Errc::InvalidArgument, "aid_fp_bound: t and k must be >= 1");
  const double qk = std::pow(c.q, k);
  const double qt = std::pow(c.q, t);
  return (c.c1 * qt + c.c3 * qk) + c.c2 * (1.0 - qk) / (1.0 - c.q) * qt;
}

BrAnalysis constants_for_quadratic_br(const BiasedRegressionData& data, const Vec& lam) {
  if (!(data.beta > 0.0)) throw Error(Errc::InvalidConstants, "BR needs beta > 0");
  const Index p = data.X.cols();
  const Mat hessian = data.X.transpose() * data.X + data.beta * Mat::Identity(p, p);
  Eigen::SelfAdjointEigenSolver<Mat> eig(hessian, Eigen::EigenvaluesOnly);
  const double mu_l = eig.eigenvalues().minCoeff();
  const double L_l = eig.eigenvalues().maxCoeff();
  const double kappa = L_l / mu_l;
  const double alpha = 2.0 / (mu_l + L_l);

  const Vec w = solve_dense(hessian, Vec(data.X.transpose() * data.y + data.beta * lam));
  const Mat gram_v = data.Xv.transpose() * data.Xv;
  Eigen::SelfAdjointEigenSolver<Mat> eig_v(gram_v, Eigen::EigenvaluesOnly);
  const double gram_norm = eig_v.eigenvalues().cwiseAbs().maxCoeff();

  BoundConstants c;
  c.q = (kappa - 1.0) / (kappa + 1.0);
  c.D = w.norm();
  c.eta1 = gram_norm;
  c.eta2 = 0.0;
  c.nu1 = 0.0;
  c.nu2 = 0.0;
  c.L_E = gram_norm * 2.0 * c.D + (data.Xv.transpose() * data.yv).norm();
  c.L_Phi = alpha * data.beta;
  c.mu = 1.0 - c.q;
  return {c, mu_l, L_l, alpha};
}

}  // namespace hg
