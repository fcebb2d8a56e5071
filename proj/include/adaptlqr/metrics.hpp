#pragma once

// Monte-Carlo competitive ratios J_P(Γ(P)) / J_P(K*(P)) over a plant family:
// the density-weighted mean (r_ave) and the sample maximum (r_sup, a lower
// bound on the essential supremum).

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptlqr/controllers.hpp"
#include "adaptlqr/plantspace.hpp"
#include "adaptlqr/sim.hpp"

namespace adaptlqr {

struct PlantRatio {
  std::size_t index = 0;
  /// Free parameters of the plant, row-major over [A B].
  Vec free_values;
  double j_strategy = 0.0;
  double j_optimal = 0.0;
  double ratio = 0.0;
  double weight = 1.0;
  bool ok = true;
  std::string error;
};

struct RatioEstimate {
  std::string strategy;
  /// "analytic" (Lyapunov cost of a static gain) or "simulated" (seed-averaged tail cost).
  std::string numerator;
  double r_ave_hat = 0.0;
  double r_sup_hat = 0.0;
  std::vector<PlantRatio> per_plant;
  std::size_t n_plants = 0;
  std::size_t horizon = 0;
  std::size_t seeds_per_plant = 0;
  std::size_t skipped = 0;
  std::vector<std::string> parameter_labels;
};

enum class NumeratorMode { Auto, Analytic, Simulated };

struct RatioOptions {
  std::size_t n_plants = 20;
  std::size_t seeds_per_plant = 1;
  std::size_t horizon = 50000;
  std::uint64_t master_seed = 0;
  /// Auto: analytic for static strategies, simulated otherwise.
  NumeratorMode numerator = NumeratorMode::Auto;
  ExecPolicy policy = ExecPolicy::Parallel;
  std::size_t record_stride = 1000;
};

/// Seed of plant i and of trajectory j on plant i, derived from the master seed.
std::uint64_t plant_seed(std::uint64_t master, std::size_t plant);
std::uint64_t trajectory_seed(std::uint64_t master, std::size_t plant, std::size_t trajectory);

/// Samples n_plants plants, evaluates the strategy on each, and reduces.
/// Plants whose evaluation fails are recorded with ok = false and excluded.
RatioEstimate estimate_ratios(const PlantFamily& family, const StrategySpec& strategy, const RatioOptions& opts);

/// Ratios lyapunov_cost(gain)/trace X on the n_grid^d grid over the box
/// (endpoints included). Static strategies only.
RatioEstimate analytic_ratio_static(const PlantFamily& family, const StrategySpec& strategy, std::size_t n_grid,
                                    ExecPolicy policy = ExecPolicy::Parallel);

/// Labels of the free entries, e.g. "A_1_1", "B_3_2" (1-based).
std::vector<std::string> free_parameter_labels(const PlantFamily& family);

nlohmann::json ratio_to_json(const RatioEstimate& est);
void write_ratio_csv(std::ostream& out, const RatioEstimate& est);

}  // namespace adaptlqr
