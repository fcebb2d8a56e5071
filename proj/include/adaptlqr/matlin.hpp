#pragma once

// Dense double-precision linear algebra for the small systems handled here
// (n <= 8 states) and the LQR kernels built on top of it.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "adaptlqr/error.hpp"

namespace adaptlqr {

using Vec = std::vector<double>;

/// Row-major dense matrix. Storage is inline up to 6x6 so the Riccati
/// iteration inside the estimator does not touch the heap.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> d);
  static Mat column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return a_.size(); }
  bool empty() const noexcept { return a_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::span<double> data() { return {a_.data(), a_.size()}; }
  std::span<const double> data() const { return {a_.data(), a_.size()}; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * cols_, cols_}; }

  Mat transpose() const;
  Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Mat& b);

  double trace() const;
  double frobenius_norm() const;
  double max_abs() const;
  bool all_finite() const;

  Mat& operator+=(const Mat& b);
  Mat& operator-=(const Mat& b);
  Mat& operator*=(double s);

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  boost::container::small_vector<double, 36> a_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(double s, Mat a);
Vec operator*(const Mat& a, std::span<const double> x);

/// aᵀ·b without forming the transpose.
Mat transpose_mul(const Mat& a, const Mat& b);
/// Stacks [a b] horizontally.
Mat hstack(const Mat& a, const Mat& b);
Mat vstack(const Mat& a, const Mat& b);
Mat symmetrized(const Mat& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

bool is_symmetric(const Mat& a, double rel_tol = 1e-12);
/// Cholesky-based test; a must be symmetric.
bool is_positive_definite(const Mat& a);

/// Solves a·x = b by LU with partial pivoting. Throws Singular.
Mat solve(const Mat& a, const Mat& b);
Mat inverse(const Mat& a);

struct SymEigen {
  Vec values;  // ascending
  Mat vectors; // columns are eigenvectors
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymEigen sym_eigen(const Mat& a);

/// Symmetric PSD square root via sym_eigen. Small negative eigenvalues
/// (>= -1e-10 relative) are clamped to zero; larger ones throw NotPositiveDefinite.
Mat sqrt_psd(const Mat& a);
/// Inverse square root of a symmetric PD matrix.
Mat inv_sqrt_pd(const Mat& a);

/// Eigenvalues of a general real matrix: Householder Hessenberg reduction
/// followed by Francis double-shift QR.
std::vector<std::complex<double>> eigenvalues(const Mat& a);

double spectral_radius(const Mat& m);
/// Largest singular value, ‖m‖₂.
double spectral_norm(const Mat& m);

struct DareOptions {
  double tol = 1e-11;
  std::size_t max_iter = 100000;
  /// Run the stabilizability/detectability precondition and the closed-loop
  /// stability postcondition. The estimator disables this when q is PD.
  bool check = true;
  /// Starting iterate; q when null. Any PSD start converges to the same
  /// stabilizing solution, so the estimator warm-starts from nearby points.
  const Mat* initial = nullptr;
};

struct DareSolution {
  Mat x;
  Mat gain;
  std::size_t iterations = 0;
  /// ‖x − Ric(x)‖_F / max(1, ‖x‖_F)
  double residual = 0.0;
};

/// Fixed-point Riccati iteration from X₀ = q (or opts.initial). Returns the
/// last iterate X and the gain computed at that same X.
DareSolution solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                        const DareOptions& opts = {});

/// Gain L = −(bᵀXb + r)⁻¹bᵀXa of the stabilizing DARE solution.
Mat lqr_gain(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

/// Right-hand side of the Riccati equation at x, i.e. Ric(x).
Mat riccati_map(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& x);

struct StabDetect {
  bool stabilizable = false;
  bool detectable = false;
};

/// PBH test: every eigenvalue of a with |λ| >= 1 must keep [a − λI, b] at full
/// row rank (relative singular-value tolerance 1e-8), and dually for (a, q^{1/2}).
StabDetect stab_detect_check(const Mat& a, const Mat& b, const Mat& q);
bool pbh_stabilizable(const Mat& a, const Mat& b);

struct Lemma3Bound {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = ‖XᵀPX − YᵀPY‖₂, rhs = ‖P‖₂‖X − Y‖₂(‖X‖₂ + ‖Y‖₂).
Lemma3Bound lemma3_bound(const Mat& x, const Mat& p, const Mat& y);

/// Solves Σ = c·Σ·cᵀ + w by fixed-point iteration (relative change <= tol).
/// Throws UnstableClosedLoop when ρ(c) >= 1.
Mat solve_stein(const Mat& c, const Mat& w, double tol = 1e-12,
                std::size_t max_iter = 10000000);

}  // namespace adaptlqr
