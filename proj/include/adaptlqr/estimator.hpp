#pragma once

// Cost-biased maximum-likelihood estimation of the unknown part of (A, B):
//
//   W(Â, B̂) = μ(k)·trace X(Â, B̂) + Σ_{t=1..k} ‖x(t) − Âx(t−1) − B̂u(t−1)‖²
//
// minimized over the Free entries of a KnownMask, with Known entries taken
// from the true plant and graph zeros pinned.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adaptlqr/matlin.hpp"
#include "adaptlqr/nelder_mead.hpp"
#include "adaptlqr/plantspace.hpp"

namespace adaptlqr {

/// Observation history F_k = {x(0..k)} ∪ {u(0..k−1)} with incrementally
/// updated sufficient statistics of the regression x(t+1) = [A B]φ(t),
/// φ(t) = [x(t); u(t)].
class History {
 public:
  History(std::size_t n, std::size_t m, bool keep_series = true);

  /// Clears the history and sets x(0).
  void reset(std::span<const double> x0);
  /// Records u(k) and the resulting x(k+1).
  void append(std::span<const double> u, std::span<const double> x_next);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  /// Number of regression samples k (= number of inputs recorded).
  std::size_t samples() const { return samples_; }
  std::span<const double> last_state() const { return last_state_; }
  bool keeps_series() const { return keep_series_; }
  const std::vector<Vec>& states() const { return states_; }
  const std::vector<Vec>& inputs() const { return inputs_; }

  /// Σ φ(t)φ(t)ᵀ, (n+m) x (n+m).
  const Mat& phi_phi() const { return phi_phi_; }
  /// Σ x(t+1)φ(t)ᵀ, n x (n+m).
  const Mat& x_phi() const { return x_phi_; }
  /// Σ x_r(t+1)² per state row.
  const Vec& x_sq() const { return x_sq_; }

  /// Statistics rebuilt from the stored series (requires keep_series).
  History recomputed() const;

 private:
  std::size_t n_;
  std::size_t m_;
  bool keep_series_;
  std::size_t samples_ = 0;
  Vec last_state_;
  std::vector<Vec> states_;
  std::vector<Vec> inputs_;
  Mat phi_phi_;
  Mat x_phi_;
  Vec x_sq_;
};

/// Σ_t ‖x(t) − a·x(t−1) − b·u(t−1)‖² evaluated sample by sample.
double naive_residual_sum(const History& hist, const Mat& a, const Mat& b);

/// Regularization weight μ(k): nondecreasing, unbounded, o(log k).
struct MuSchedule {
  enum class Kind { SqrtLog, Custom };
  Kind kind = Kind::SqrtLog;
  /// Custom: step function, μ(k) = value of the last breakpoint with k_j <= k.
  std::vector<std::pair<std::size_t, double>> table;

  double operator()(std::size_t k) const;

  static MuSchedule sqrt_log() { return {}; }
  /// Throws InvalidArgument unless breakpoints are increasing in k and μ is nondecreasing.
  static MuSchedule custom(std::vector<std::pair<std::size_t, double>> table);
};

struct EstimatorOptions {
  NelderMeadOptions nelder_mead{};
  std::size_t random_starts = 5;
  /// Coarse grid refining the start set for problems with <= grid_max_dim free coordinates.
  std::size_t grid_points_per_axis = 25;
  std::size_t grid_max_dim = 3;
  bool parallel_starts = false;
};

/// One subcontroller's estimation problem: parameter layout, box, fixed part
/// of [Â B̂], and the history-independent grid of trace X values.
class EstimationProblem {
 public:
  EstimationProblem(const PlantFamily& family, const KnownMask& mask, const PlantInstance& truth,
                    const EstimatorOptions& opts = {});

  std::size_t dim() const { return coords_.size(); }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::span<const double> lo() const { return lo_; }
  std::span<const double> hi() const { return hi_; }
  Vec midpoint() const;
  Vec clamp(Vec theta) const;
  const Mat& q() const { return q_; }
  const Mat& r() const { return r_; }

  /// (row, col) of free coordinate j within [A B].
  std::pair<std::size_t, std::size_t> coord(std::size_t j) const { return coords_[j]; }

  /// Builds (Â, B̂) from the free coordinates.
  std::pair<Mat, Mat> assemble(std::span<const double> theta) const;
  Vec theta_of(const Mat& a, const Mat& b) const;

  /// trace X(Â, B̂), or +inf when the Riccati preconditions fail.
  double trace_x(std::span<const double> theta) const;
  /// Same value, with the Riccati iteration started from *warm when it is
  /// non-empty; on success *warm receives the new solution.
  double trace_x(std::span<const double> theta, Mat* warm) const;

  const std::vector<Vec>& grid() const { return grid_; }
  const Vec& grid_trace_x() const { return grid_trace_x_; }

  /// Residual sum as c + 2gᵀθ + θᵀHθ.
  struct Quadratic {
    Mat h;
    Vec g;
    double c = 0.0;
    double operator()(std::span<const double> theta) const;
  };
  Quadratic residual_quadratic(const History& hist) const;

 private:
  std::size_t n_;
  std::size_t m_;
  Mat base_;  // [A B] with Known/Fixed values, zeros elsewhere
  std::vector<std::pair<std::size_t, std::size_t>> coords_;
  Vec lo_;
  Vec hi_;
  Mat q_;
  Mat r_;
  bool q_pd_;
  std::vector<Vec> grid_;
  Vec grid_trace_x_;
};

struct SolverReport {
  std::size_t starts_used = 0;
  std::size_t best_start = 0;
  std::size_t inner_iterations = 0;
};

struct LocalEstimate {
  Vec theta;
  Mat a_hat;
  Mat b_hat;
  double objective = 0.0;
  SolverReport report;
};

/// W at theta; +inf at infeasible points.
double cbml_objective(std::span<const double> theta, const EstimationProblem& problem, double mu_k,
                      const History& hist);

/// Least-squares minimizer of the residual term alone, clamped into the box.
/// Coordinates with no excitation go to the box midpoint; a rank-deficient
/// remainder gets the minimum-norm solution.
Vec pure_ls_start(const EstimationProblem& problem, const History& hist);

/// Estimate at the box midpoint (initialization before any data).
LocalEstimate initial_estimate(const EstimationProblem& problem);

/// Multi-start projected Nelder–Mead over the start set
/// {warm, least squares, midpoint, random draws, best grid point}.
/// Result is the lexicographic (objective, start index) minimum, except that
/// the warm start wins ties within 1e-12. Throws AllStartsInfeasible.
LocalEstimate cbml_minimize(const EstimationProblem& problem, double mu_k, const History& hist,
                            const LocalEstimate* warm_start, std::uint64_t rng_seed,
                            const EstimatorOptions& opts = {});

}  // namespace adaptlqr
