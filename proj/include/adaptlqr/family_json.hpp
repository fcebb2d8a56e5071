#pragma once

// JSON document format for plant families:
//
//   {
//     "state_dims": [1, 2],
//     "input_dims": [1, 1],
//     "plant_adj":  [[1, 0], [1, 1]],
//     "design_adj": [[1, 0], [0, 1]],
//     "self_knowledge": true,                      // optional, default true
//     "A": [[{"free": [0, 1]}, "zero", "zero"],    // n x n entry specs
//           [{"fixed": 1}, {"fixed": 1}, {"fixed": -1}],
//           ["zero", "zero", {"free": [0, 1]}]],
//     "B": [[{"free": [0.5, 1.5]}, "zero"], ...],  // n x m entry specs
//     "Q": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
//     "R": [[1, 0], [0, 1]],
//     "nominal": {"A": [[...]], "B": [[...]]}      // optional member plant
//   }
//
// "zero" inside a graph-connected block is read as {"fixed": 0}; {"fixed": 0}
// inside a graph-zero block is read as "zero".

#include <filesystem>

#include <json.hpp>

#include "adaptlqr/plantspace.hpp"

namespace adaptlqr {

/// Throws ConfigError on schema or invariant violations.
PlantFamily family_from_json(const nlohmann::json& doc);
PlantFamily load_family(const std::filesystem::path& path);
nlohmann::json family_to_json(const PlantFamily& family);

nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j, const char* what);

}  // namespace adaptlqr
