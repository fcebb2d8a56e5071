#pragma once

// Two-truck platoon in distance/velocity coordinates:
//   z = [v1 − v*, x1 − x2 − d*, v2 − v*],
//   A = [[a11, 0, 0], [1, 1, −1], [0, 0, a22]],  B = diag-ish [[b11, 0], [0, 0], [0, b22]],
// with a_ii = 1 − α_i ΔT/m_i and b_ii = β_i ΔT/m_i.

#include "adaptlqr/plantspace.hpp"

namespace adaptlqr {

struct PlatoonParams {
  double alpha1 = 0.5640;
  double beta1 = 1.0497;
  double mass1 = 1.0;
  double alpha2 = 0.9741;
  double beta2 = 0.9353;
  double mass2 = 1.0;
  double delta_t = 1.0;
  double d_star = 0.0;
  double v_star = 0.0;
  double q_d = 1.0;
  double q_v = 1.0;
  double r_weight = 1.0;

  double a11() const { return 1.0 - alpha1 / mass1 * delta_t; }
  double b11() const { return beta1 / mass1 * delta_t; }
  double a22() const { return 1.0 - alpha2 / mass2 * delta_t; }
  double b22() const { return beta2 / mass2 * delta_t; }
  /// Average control ū_i* = α_i v*/β_i around which u is measured.
  double u_bar1() const { return alpha1 * v_star / beta1; }
  double u_bar2() const { return alpha2 * v_star / beta2; }
};

/// Throws InvalidParams for nonpositive masses/ΔT/weights or non-finite values.
void validate_platoon(const PlatoonParams& params);

/// The concrete plant for the given parameters.
PlantInstance platoon_instance(const PlatoonParams& params);

/// The family a_ii ∈ [0,1], b_ii ∈ [0.5,1.5] with the fixed middle row,
/// plant graph [[1,0],[1,1]] and self-only design graph; `nominal` is the
/// instance built from params (InvalidParams if it leaves the box).
PlantFamily build_platoon(const PlatoonParams& params = {});

}  // namespace adaptlqr
