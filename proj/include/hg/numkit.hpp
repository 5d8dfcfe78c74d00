#pragma once

// Dense linear algebra and deterministic randomness shared by every module.

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace hg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// xoshiro256** seeded through splitmix64. The stream depends only on the
/// seed, so equal seeds give bitwise-equal samples on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Mat sample_normal(Rng& rng, Index rows, Index cols);
Vec sample_normal_vec(Rng& rng, Index len);

/// Solves A x = b by LU with partial pivoting.
/// Throws Error(SingularMatrix) when a pivot falls below 1e-14 * ||A||_inf.
Vec solve_dense(const Mat& A, const Vec& b);
/// Multiple right-hand sides, same pivoting rule.
Mat solve_dense(const Mat& A, const Mat& B);

struct Svd {
  Mat U;
  Vec s;  // non-increasing, non-negative
  Mat Vt;
};

/// Thin SVD, A = U diag(s) Vt. Throws Error(NoConvergence) if the
/// decomposition produces non-finite factors.
Svd svd(const Mat& A);

/// Largest singular value.
double spectral_norm(const Mat& A);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

}  // namespace hg
