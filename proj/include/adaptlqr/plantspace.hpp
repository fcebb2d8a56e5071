#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "adaptlqr/matlin.hpp"

namespace adaptlqr {

using Adjacency = std::vector<std::vector<int>>;

/// Subsystem partition plus the plant graph S^P and design graph S^C.
/// Entry s_ij = 1 means subsystem i receives from subsystem j.
struct InfoStructure {
  std::vector<std::size_t> state_dims;
  std::vector<std::size_t> input_dims;
  Adjacency plant_adj;
  Adjacency design_adj;

  std::size_t n_subsystems() const { return state_dims.size(); }
  std::size_t n() const;
  std::size_t m() const;
  std::size_t state_offset(std::size_t i) const;
  std::size_t input_offset(std::size_t i) const;
  /// Subsystem owning state row `row`.
  std::size_t state_owner(std::size_t row) const;
  std::size_t input_owner(std::size_t col) const;
};

/// Builds and validates an InfoStructure. With `self_knowledge` the diagonal
/// of design_adj is forced to 1.
InfoStructure make_info(std::vector<std::size_t> state_dims, std::vector<std::size_t> input_dims,
                        Adjacency plant_adj, Adjacency design_adj, bool self_knowledge = true);

/// Full design graph: every subcontroller knows the whole model.
Adjacency all_ones(std::size_t n);
Adjacency identity_adj(std::size_t n);

struct EntrySpec {
  enum class Kind : std::uint8_t { Fixed, Free, ZeroByGraph };
  Kind kind = Kind::ZeroByGraph;
  double value = 0.0;  // Fixed
  double lo = 0.0;     // Free
  double hi = 0.0;

  static EntrySpec fixed(double v) { return {Kind::Fixed, v, 0.0, 0.0}; }
  static EntrySpec free(double lo, double hi) { return {Kind::Free, 0.0, lo, hi}; }
  static EntrySpec zero() { return {}; }

  friend bool operator==(const EntrySpec&, const EntrySpec&) = default;
};

/// Per-entry weight over a Free coordinate. The density of a plant is the
/// product over Free entries; an empty list means uniform.
struct Density {
  std::vector<std::function<double(double)>> weights;

  bool is_uniform() const { return weights.empty(); }
};

struct PlantInstance {
  Mat a;
  Mat b;
  Mat q;
  Mat r;
  InfoStructure info;
};

/// Validated constructor: block sparsity must follow the plant graph,
/// (a, b) stabilizable, (a, q^{1/2}) detectable.
PlantInstance make_plant(Mat a, Mat b, Mat q, Mat r, InfoStructure info);

/// Parameter box with fixed entries and graph-induced zeros.
struct PlantFamily {
  InfoStructure info;
  std::vector<EntrySpec> a_spec;  // n x n, row-major
  std::vector<EntrySpec> b_spec;  // n x m, row-major
  Mat q;
  Mat r;
  Density density;
  /// Distinguished member used when a concrete plant is needed and none is given.
  std::optional<PlantInstance> nominal;

  std::size_t n() const { return info.n(); }
  std::size_t m() const { return info.m(); }
  const EntrySpec& a_entry(std::size_t i, std::size_t j) const { return a_spec[i * n() + j]; }
  const EntrySpec& b_entry(std::size_t i, std::size_t j) const { return b_spec[i * m() + j]; }
  /// Entry of the combined parameter matrix [A B] (n x (n+m)).
  const EntrySpec& entry(std::size_t row, std::size_t col) const;
  std::size_t free_count() const;
};

/// Throws InvalidArgument describing the first violated invariant.
void validate_family(const PlantFamily& family);

/// True when (a, b) matches every Fixed/Zero entry and lies inside the box.
bool family_contains(const PlantFamily& family, const Mat& a, const Mat& b, double tol = 1e-12);

/// Values of the Free entries of [a b], row-major over [A B].
Vec free_values(const PlantFamily& family, const Mat& a, const Mat& b);

/// Uniform draw of every Free entry, rejection-resampled until the pair passes
/// the stabilizability/detectability check. Deterministic given the seed.
PlantInstance sample_plant(const PlantFamily& family, std::uint64_t rng_seed);

/// Relative density weight f(ξ) up to normalization (1 for uniform families).
double density_weight(const PlantFamily& family, const PlantInstance& plant);

struct NoiseModel {
  /// Per-subsystem covariances H_i; empty means unit covariance.
  std::vector<Mat> covariances;

  bool is_unit() const { return covariances.empty(); }
  static NoiseModel unit() { return {}; }
};

/// Change of variables x̄_i = H_i^{-1/2} x_i: Ā_ij = H_i^{-1/2}A_ij H_j^{1/2},
/// B̄_ij = H_i^{-1/2}B_ij, Q̄_ij = H_i^{1/2}Q_ij H_j^{1/2}.
PlantInstance whiten(const PlantInstance& plant, const NoiseModel& noise);
PlantInstance unwhiten(const PlantInstance& plant, const NoiseModel& noise);
/// Block-diagonal H^{1/2}; identity for unit noise.
Mat noise_sqrt(const InfoStructure& info, const NoiseModel& noise);

enum class EntryClass : std::uint8_t { Known, Free, ZeroByGraph };

/// Classification of every entry of [A B] for one subcontroller's estimation
/// problem.
struct KnownMask {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<EntryClass> cls;  // n x (n+m), row-major

  EntryClass at(std::size_t row, std::size_t col) const { return cls[row * (n + m) + col]; }
  std::size_t count(EntryClass c) const;
};

/// Entries in block-rows j with design_adj[subsystem][j] != 0 are Known, as are
/// Fixed entries anywhere; remaining box entries are Free.
KnownMask known_mask(const PlantFamily& family, std::size_t subsystem);

/// Mask of a centralized estimator that ignores all subsystem knowledge.
KnownMask centralized_mask(const PlantFamily& family);

}  // namespace adaptlqr
