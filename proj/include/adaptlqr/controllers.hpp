#pragma once

// Design strategies: optimal full-information K*, the modified Campi–Kumar
// adaptive controller Γ* (one cost-biased estimator per subsystem), the
// centralized Campi–Kumar controller Γ^C, and the platoon deadbeat Γ^Δ.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptlqr/estimator.hpp"
#include "adaptlqr/matlin.hpp"
#include "adaptlqr/plantspace.hpp"

namespace adaptlqr {

enum class StrategyKind { OptimalFullInfo, ModifiedCK, CentralizedCK, Deadbeat };

std::string_view to_string(StrategyKind kind);
/// Accepts the canonical names (optimal, modified_ck, centralized_ck, deadbeat)
/// and a few aliases; throws ConfigError otherwise.
StrategyKind parse_strategy(std::string_view name);

struct AdaptiveOptions {
  MuSchedule mu = MuSchedule::sqrt_log();
  EstimatorOptions estimator{};
  /// Re-estimation cadence. 2 reproduces the even-step rule; other values are an extension.
  std::size_t update_period = 2;
  /// Run the per-subsystem estimations of one step concurrently.
  bool parallel_subsystems = false;
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::OptimalFullInfo;
  AdaptiveOptions adaptive{};
};

/// Row block i of a full gain (m x n -> m_i x n).
Mat t_select(const Mat& gain, std::size_t subsystem, const InfoStructure& info);
/// Stacks [T_1 K^(1); ...; T_N K^(N)].
Mat stack_gains(std::span<const Mat> local_gains, const InfoStructure& info);

Mat optimal_full_info(const PlantInstance& plant);

/// Throws WrongFamily unless the plant has the two-vehicle platoon structure.
Mat deadbeat_platoon(const PlantInstance& plant);

struct WDeltaParams {
  double delta = 0.1;
  double rho = 0.1;
};

/// ‖[A + B·L(Â,B̂)] − [Â + B̂·L(Â,B̂)]‖₂.
double closed_loop_mismatch(const Mat& a_hat, const Mat& b_hat, const Mat& gain_hat, const Mat& a, const Mat& b);
/// True iff the mismatch is at least delta. Solves the DARE for (Â, B̂).
bool wdelta_membership(const Mat& a_hat, const Mat& b_hat, const PlantInstance& truth, const WDeltaParams& params);

/// Mutable per-trajectory controller state.
struct ControllerState {
  StrategyKind kind = StrategyKind::OptimalFullInfo;
  InfoStructure info;
  std::vector<std::shared_ptr<const EstimationProblem>> problems;
  std::vector<LocalEstimate> estimates;
  /// K^(i)(k): each subcontroller's full m x n certainty-equivalence gain.
  std::vector<Mat> local_gains;
  Mat applied_gain;
  std::size_t step = 0;
  /// Incremented whenever any gain changes.
  std::size_t revision = 0;
  /// Steps at which a subsystem kept its previous gain after an infeasible estimate.
  std::size_t infeasible_events = 0;
  std::uint64_t seed = 0;
  AdaptiveOptions options;
};

/// Algorithm step for Γ*: at k = 0 gains come from the initial (midpoint)
/// estimates, at positive multiples of update_period each subsystem re-solves
/// its estimation problem, otherwise estimates carry over.
Vec step_modified_ck(ControllerState& state, std::span<const double> x_k, const History& hist);
/// Same rule with a single estimator that ignores every Known block.
Vec step_centralized_ck(ControllerState& state, std::span<const double> x_k, const History& hist);

/// Prepared strategy for one plant; shares the (immutable) estimation
/// problems between the trajectories it instantiates.
class Strategy {
 public:
  Strategy(const StrategySpec& spec, const PlantFamily& family, const PlantInstance& plant);

  StrategyKind kind() const { return spec_.kind; }
  const StrategySpec& spec() const { return spec_; }
  bool is_static() const { return static_gain_.has_value(); }
  /// Constant gain of K* or Γ^Δ; throws InvalidArgument for adaptive strategies.
  const Mat& static_gain() const;
  const std::vector<std::shared_ptr<const EstimationProblem>>& problems() const { return problems_; }

  ControllerState instantiate(std::uint64_t seed) const;

 private:
  StrategySpec spec_;
  InfoStructure info_;
  std::optional<Mat> static_gain_;
  std::vector<std::shared_ptr<const EstimationProblem>> problems_;
};

/// Dispatches on state.kind and advances state.step.
Vec controller_step(ControllerState& state, std::span<const double> x_k, const History& hist);

}  // namespace adaptlqr
