#pragma once

// Seeded closed-loop simulation x(k+1) = Ax(k) + Bu(k) + w(k), x(0) = 0,
// with running-cost, moment and occurrence accumulators.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "adaptlqr/controllers.hpp"
#include "adaptlqr/matlin.hpp"
#include "adaptlqr/plantspace.hpp"

namespace adaptlqr {

/// Serial keeps the reference loop; Parallel distributes independent
/// trajectories/plants over OpenMP threads. Results are identical.
enum class ExecPolicy { Serial, Parallel };

struct SimConfig {
  std::size_t horizon = 1000;
  std::uint64_t seed = 0;
  /// Second key of the noise stream, so one seed can drive many paired trajectories.
  std::uint64_t trajectory = 0;
  NoiseModel noise = NoiseModel::unit();
  std::size_t record_stride = 1;
  /// Test hook: multiplies every noise sample (0 gives a deterministic run).
  double noise_scale = 1.0;
  WDeltaParams wdelta{};
};

struct SimTrace {
  std::string strategy;
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::size_t horizon = 0;
  /// Recorded T' values: multiples of the stride plus T/2 and T.
  std::vector<std::size_t> k;
  /// J_T' = (1/T') Σ_{t<T'} xᵀQx + uᵀRu
  Vec running_cost;
  /// ‖K(T'−1) − L(A,B)‖₂ for the gain applied at the last step of the window.
  Vec gain_error;
  std::vector<std::string> estimate_labels;
  /// estimate_errors[c][r]: |θ̂ − θ| for labelled parameter c at record r.
  std::vector<Vec> estimate_errors;
  /// Running average of ‖x‖⁴ + ‖u‖⁴.
  Vec moment4;
  /// Per subsystem: Σ_{t<T'} χ(‖K^(i)(t) − L(A,B)‖ > ρ) and Σ χ((Â,B̂) ∈ 𝒲_δ), per record.
  std::vector<std::vector<std::uint64_t>> gain_violations;
  std::vector<std::vector<std::uint64_t>> wdelta_visits;

  double final_cost = 0.0;
  /// Average cost over the last half of the horizon.
  double tail_cost = 0.0;
  /// Optimal cost trace(XH); trace X under unit noise.
  double trace_x = 0.0;
  std::size_t infeasible_events = 0;
  bool failed = false;
  std::size_t failed_at = 0;
  std::string failure;

  std::size_t index_of(std::size_t k_value) const;
};

/// Tail average (T·J_T − h·J_h)/(T − h), h = ⌊T/2⌋; J_1 when T = 1.
double tail_average(std::size_t horizon, double j_t, double j_half);

SimTrace run_closed_loop(const PlantInstance& plant, const Strategy& strategy, const SimConfig& cfg);

/// One trajectory per entry of `trajectories`, all sharing cfg otherwise.
std::vector<SimTrace> run_ensemble(const PlantInstance& plant, const Strategy& strategy, const SimConfig& cfg,
                                   const std::vector<std::uint64_t>& trajectories, ExecPolicy policy);

/// trace(X·H) for the stabilizing DARE solution X and noise covariance H.
double optimal_cost(const PlantInstance& plant, const NoiseModel& noise = NoiseModel::unit());

/// trace{Σ(Q + KᵀRK)}, Σ = (A+BK)Σ(A+BK)ᵀ + I. Throws UnstableClosedLoop.
double lyapunov_cost(const PlantInstance& plant, const Mat& gain);

struct MomentReport {
  double sup_running = 0.0;
  double final_running = 0.0;
  bool within_bound = true;
};

MomentReport moment_tracker(const SimTrace& trace, double bound = std::numeric_limits<double>::infinity());

}  // namespace adaptlqr
