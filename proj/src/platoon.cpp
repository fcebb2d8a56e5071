#include "adaptlqr/platoon.hpp"

#include <cmath>

namespace adaptlqr {

namespace {

InfoStructure platoon_info() {
  return make_info({1, 2}, {1, 1}, {{1, 0}, {1, 1}}, identity_adj(2));
}

}  // namespace

void validate_platoon(const PlatoonParams& p) {
  const double all[] = {p.alpha1, p.beta1, p.mass1, p.alpha2, p.beta2, p.mass2, p.delta_t,
                        p.d_star, p.v_star, p.q_d, p.q_v, p.r_weight};
  for (double v : all)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidParams, "platoon parameters must be finite");
  if (!(p.mass1 > 0.0) || !(p.mass2 > 0.0)) throw Error(ErrorKind::InvalidParams, "vehicle masses must be positive");
  if (!(p.delta_t > 0.0)) throw Error(ErrorKind::InvalidParams, "sampling time must be positive");
  if (!(p.q_d > 0.0) || !(p.q_v > 0.0) || !(p.r_weight > 0.0))
    throw Error(ErrorKind::InvalidParams, "cost weights must be positive");
}

PlantInstance platoon_instance(const PlatoonParams& p) {
  validate_platoon(p);
  Mat a{{p.a11(), 0.0, 0.0}, {1.0, 1.0, -1.0}, {0.0, 0.0, p.a22()}};
  Mat b{{p.b11(), 0.0}, {0.0, 0.0}, {0.0, p.b22()}};
  const double qd[] = {p.q_v, p.q_d, p.q_v};
  const double rd[] = {p.r_weight, p.r_weight};
  try {
    return make_plant(std::move(a), std::move(b), Mat::diag(qd), Mat::diag(rd), platoon_info());
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidParams, std::string("platoon plant rejected: ") + e.what());
  }
}

PlantFamily build_platoon(const PlatoonParams& params) {
  PlantInstance nominal = platoon_instance(params);
  PlantFamily f;
  f.info = platoon_info();
  const auto fx = EntrySpec::fixed;
  const auto z = EntrySpec::zero();
  f.a_spec = {EntrySpec::free(0.0, 1.0), z, z,
              fx(1.0), fx(1.0), fx(-1.0),
              fx(0.0), fx(0.0), EntrySpec::free(0.0, 1.0)};
  f.b_spec = {EntrySpec::free(0.5, 1.5), z,
              fx(0.0), fx(0.0),
              fx(0.0), EntrySpec::free(0.5, 1.5)};
  f.q = nominal.q;
  f.r = nominal.r;
  validate_family(f);
  if (!family_contains(f, nominal.a, nominal.b))
    throw Error(ErrorKind::InvalidParams, "platoon parameters put (a_ii, b_ii) outside the family box");
  f.nominal = std::move(nominal);
  return f;
}

}  // namespace adaptlqr
