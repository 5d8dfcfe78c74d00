#include "hg/numkit.hpp"

#include "hg/error.hpp"

#include <cmath>
#include <numbers>

namespace hg {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Mat sample_normal(Rng& rng, Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw Error(Errc::InvalidArgument, "sample_normal: empty shape");
  Mat out(rows, cols);
  // Row-major fill order keeps the stream layout independent of storage order.
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

Vec sample_normal_vec(Rng& rng, Index len) {
  if (len < 1) throw Error(Errc::InvalidArgument, "sample_normal_vec: empty shape");
  Vec out(len);
  for (Index i = 0; i < len; ++i) out(i) = rng.normal();
  return out;
}

Mat solve_dense(const Mat& A, const Mat& B) {
  const Index n = A.rows();
  if (A.cols() != n) throw Error(Errc::InvalidArgument, "solve_dense: matrix is not square");
  if (B.rows() != n) throw Error(Errc::InvalidArgument, "solve_dense: right-hand side has wrong length");

  Mat lu = A;
  Mat x = B;
  const double scale = A.cwiseAbs().rowwise().sum().maxCoeff();
  const double pivot_floor = 1e-14 * scale;

  for (Index col = 0; col < n; ++col) {
    Index pivot = col;
    lu.col(col).tail(n - col).cwiseAbs().maxCoeff(&pivot);
    pivot += col;
    if (!(std::abs(lu(pivot, col)) >= pivot_floor) || lu(pivot, col) == 0.0)
      throw Error(Errc::SingularMatrix, "solve_dense: pivot below threshold at column " + std::to_string(col));
    if (pivot != col) {
      lu.row(col).swap(lu.row(pivot));
      x.row(col).swap(x.row(pivot));
    }
    const Index rest = n - col - 1;
    if (rest == 0) continue;
    lu.col(col).tail(rest) /= lu(col, col);
    lu.bottomRightCorner(rest, rest).noalias() -= lu.col(col).tail(rest) * lu.row(col).tail(rest);
    x.bottomRows(rest).noalias() -= lu.col(col).tail(rest) * x.row(col);
  }
  lu.triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Vec solve_dense(const Mat& A, const Vec& b) {
  Mat rhs = b;
  return solve_dense(A, rhs).col(0);
}

Svd svd(const Mat& A) {
  if (!all_finite(A)) throw Error(Errc::InvalidArgument, "svd: non-finite input");
  Eigen::JacobiSVD<Mat> solver(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV().transpose()};
  if (!all_finite(out.U) || !all_finite(out.s) || !all_finite(out.Vt))
    throw Error(Errc::NoConvergence, "svd: reduction did not converge");
  return out;
}

double spectral_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> solver(A);
  return solver.singularValues()(0);
}

bool all_finite(const Vec& v) { return v.allFinite(); }
bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace hg
