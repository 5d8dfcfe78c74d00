#pragma once

// Error bounds for ITD, AID and AID-FP hypergradients under a contraction,
// and the closed-form constants for biased regularization with the GD map.

#include "hg/numkit.hpp"

namespace hg {

/// Constants feeding the bounds. nu1/nu2 are Lipschitz constants of the
/// partial Jacobians of phi, eta1/eta2 those of grad1E/grad2E, D bounds
/// ||w(lam)||, L_E and L_Phi bound ||grad1E|| and ||d2Phi|| on the 2D ball,
/// and mu bounds ||(I - d1Phi)^{-1}|| <= 1/mu.
struct BoundConstants {
  double q = 0.0;
  double D = 0.0;
  double L_E = 0.0;
  double L_Phi = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double mu = 1.0;
};

/// c1 = (eta2 + eta1 L_Phi/(1-q)) D
/// c2 = (nu2 + nu1 L_Phi/(1-q)) L_E D
/// c3 = L_E L_Phi / (1-q)
struct BoundCoefficients {
  double q = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// Throws InvalidConstants for negative entries, q outside [0, 1) or mu <= 0.
void validate(const BoundConstants& c);

BoundCoefficients coefficients(const BoundConstants& c);

/// (c1 + c2 t/q + c3) q^t
double itd_bound(const BoundCoefficients& c, int t);

/// (c1 + c2/(1-q)) rho_t + c3 sigma_k, the contraction form with mu = 1-q.
double aid_bound(const BoundCoefficients& c, double rho_t, double sigma_k);

/// General form with an arbitrary mu:
/// (eta2 + eta1 L_Phi/mu + nu2 L_E/mu + nu1 L_Phi L_E/mu^2) D rho_t + L_Phi L_E/mu sigma_k.
double aid_bound(const BoundConstants& c, double rho_t, double sigma_k);

/// (c1 + c2 (1-q^k)/(1-q)) q^t + c3 q^k
double aid_fp_bound(const BoundCoefficients& c, int t, int k);

/// Inputs of a biased-regularization problem:
/// lower 1/2||X w - y||^2 + beta/2 ||w - lam||^2, upper 1/2||Xv w - yv||^2.
struct BiasedRegressionData {
  const Mat& X;
  const Vec& y;
  const Mat& Xv;
  const Vec& yv;
  double beta;
};

struct BrAnalysis {
  BoundConstants constants;
  double mu_l = 0.0;  // smallest eigenvalue of X^T X + beta I
  double L_l = 0.0;   // largest eigenvalue
  double alpha = 0.0;
};

/// Closed-form constants for BR with the optimal-step GD map. Jacobians of
/// an affine map are constant (nu1 = nu2 = 0), E does not depend on lam
/// (eta2 = 0), eta1 = ||Xv^T Xv||, D = ||w(lam)||,
/// L_E = ||Xv^T Xv|| 2D + ||Xv^T yv||, L_Phi = alpha beta.
BrAnalysis constants_for_quadratic_br(const BiasedRegressionData& data, const Vec& lam);

}  // namespace hg
