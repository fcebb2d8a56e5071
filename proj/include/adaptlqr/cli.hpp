#pragma once

// Scenario configuration and the command-line front end.
//
// Scenario document (every field optional):
//   {
//     "family": "platoon2" | "relative/or/absolute/family.json" | { inline family },
//     "platoon": { "alpha1": 0.564, "beta1": 1.0497, "mass1": 1, ... },  // builtin parameters
//     "plant": { "A": [[...]], "B": [[...]] },   // simulated plant; default: family nominal,
//                                                // else a draw from the family keyed by --seed
//     "strategies": ["optimal", "modified_ck", "centralized_ck", "deadbeat"],
//     "horizon": 10000,
//     "trajectories": 1,                          // paired noise realizations per strategy
//     "record_stride": 10,
//     "mu": { "kind": "sqrt_log" } | { "kind": "custom", "table": [[k, mu], ...] },
//     "update_period": 2,                         // != 2 is an extension of the even-step rule
//     "noise": { "covariances": [ [[...]], ... ] },  // per-subsystem H_i, default unit
//     "ratio": { "n_plants": 20, "seeds_per_plant": 1, "numerator": "auto", "analytic_grid": 0 },
//     "svg": true,
//     "out": "out"
//   }

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adaptlqr/controllers.hpp"
#include "adaptlqr/metrics.hpp"
#include "adaptlqr/plantspace.hpp"
#include "adaptlqr/platoon.hpp"

namespace adaptlqr {

struct ScenarioConfig {
  PlantFamily family;
  std::string family_name = "platoon2";
  std::optional<PlantInstance> plant;
  std::vector<StrategyKind> strategies{StrategyKind::OptimalFullInfo, StrategyKind::ModifiedCK,
                                       StrategyKind::CentralizedCK, StrategyKind::Deadbeat};
  std::size_t horizon = 10000;
  std::size_t trajectories = 1;
  std::size_t record_stride = 10;
  AdaptiveOptions adaptive{};
  NoiseModel noise = NoiseModel::unit();
  std::size_t ratio_plants = 20;
  std::size_t ratio_seeds = 1;
  NumeratorMode ratio_numerator = NumeratorMode::Auto;
  std::size_t analytic_grid = 0;
  bool svg = true;
  std::filesystem::path out = "out";
};

/// Throws ConfigError. Relative family paths resolve against base_dir.
ScenarioConfig scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Exit status for an error kind: 2 for configuration/usage errors, 3 for numeric failures.
int exit_code_for(ErrorKind kind);

/// Entry point of the `adaptlqr` executable.
int run_cli(int argc, char** argv);

}  // namespace adaptlqr
