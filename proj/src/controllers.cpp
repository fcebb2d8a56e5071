#include "adaptlqr/controllers.hpp"

#include <cmath>
#include <string>

#include "adaptlqr/noise.hpp"

namespace adaptlqr {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::OptimalFullInfo: return "optimal";
    case StrategyKind::ModifiedCK: return "modified_ck";
    case StrategyKind::CentralizedCK: return "centralized_ck";
    case StrategyKind::Deadbeat: return "deadbeat";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "optimal" || name == "kstar" || name == "optimal_full_info") return StrategyKind::OptimalFullInfo;
  if (name == "modified_ck" || name == "gamma_star" || name == "modified") return StrategyKind::ModifiedCK;
  if (name == "centralized_ck" || name == "gamma_c" || name == "centralized") return StrategyKind::CentralizedCK;
  if (name == "deadbeat" || name == "gamma_delta") return StrategyKind::Deadbeat;
  throw Error(ErrorKind::ConfigError, "unknown strategy '" + std::string(name) + "'");
}

Mat t_select(const Mat& gain, std::size_t subsystem, const InfoStructure& info) {
  if (subsystem >= info.n_subsystems()) throw Error(ErrorKind::IndexOutOfRange, "t_select: subsystem " + std::to_string(subsystem));
  if (gain.rows() != info.m() || gain.cols() != info.n()) throw Error(ErrorKind::DimensionMismatch, "t_select: gain must be m x n");
  return gain.block(info.input_offset(subsystem), 0, info.input_dims[subsystem], info.n());
}

Mat stack_gains(std::span<const Mat> local_gains, const InfoStructure& info) {
  Mat k(info.m(), info.n());
  if (local_gains.size() == 1) {
    if (local_gains[0].rows() != info.m() || local_gains[0].cols() != info.n())
      throw Error(ErrorKind::DimensionMismatch, "stack_gains: gain must be m x n");
    return local_gains[0];
  }
  if (local_gains.size() != info.n_subsystems()) throw Error(ErrorKind::DimensionMismatch, "stack_gains: one gain per subsystem");
  for (std::size_t i = 0; i < local_gains.size(); ++i)
    k.set_block(info.input_offset(i), 0, t_select(local_gains[i], i, info));
  return k;
}

Mat optimal_full_info(const PlantInstance& plant) { return lqr_gain(plant.a, plant.b, plant.q, plant.r); }

Mat deadbeat_platoon(const PlantInstance& plant) {
  const Mat& a = plant.a;
  const Mat& b = plant.b;
  const InfoStructure& info = plant.info;
  const bool shape = a.rows() == 3 && a.cols() == 3 && b.rows() == 3 && b.cols() == 2 &&
                     info.state_dims == std::vector<std::size_t>{1, 2} && info.input_dims == std::vector<std::size_t>{1, 1};
  if (!shape) throw Error(ErrorKind::WrongFamily, "deadbeat gain needs the 3-state, 2-input platoon structure");
  const bool pattern = a(0, 1) == 0.0 && a(0, 2) == 0.0 && a(1, 0) == 1.0 && a(1, 1) == 1.0 && a(1, 2) == -1.0 &&
                       a(2, 0) == 0.0 && a(2, 1) == 0.0 && b(0, 1) == 0.0 && b(1, 0) == 0.0 && b(1, 1) == 0.0 &&
                       b(2, 0) == 0.0 && b(0, 0) != 0.0 && b(2, 1) != 0.0;
  if (!pattern) throw Error(ErrorKind::WrongFamily, "plant does not match the platoon sparsity and fixed entries");
  const double a11 = a(0, 0);
  const double b11 = b(0, 0);
  const double a22 = a(2, 2);
  const double b22 = b(2, 1);
  return Mat{{-a11 / b11, 0.0, 0.0}, {1.0 / b22, 1.0 / b22, -(1.0 + a22) / b22}};
}

double closed_loop_mismatch(const Mat& a_hat, const Mat& b_hat, const Mat& gain_hat, const Mat& a, const Mat& b) {
  return spectral_norm((a + b * gain_hat) - (a_hat + b_hat * gain_hat));
}

bool wdelta_membership(const Mat& a_hat, const Mat& b_hat, const PlantInstance& truth, const WDeltaParams& params) {
  if (!(params.delta > 0.0) || !(params.rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta and rho must be positive");
  if (a_hat.rows() != truth.a.rows() || b_hat.cols() != truth.b.cols())
    throw Error(ErrorKind::DimensionMismatch, "estimate and truth differ in shape");
  const Mat gain_hat = lqr_gain(a_hat, b_hat, truth.q, truth.r);
  return closed_loop_mismatch(a_hat, b_hat, gain_hat, truth.a, truth.b) >= params.delta;
}

namespace {

void refresh_applied(ControllerState& s) {
  Mat k = stack_gains(s.local_gains, s.info);
  if (!(k == s.applied_gain)) {
    s.applied_gain = std::move(k);
    ++s.revision;
  }
}

void reestimate(ControllerState& s, const History& hist) {
  const std::size_t k = s.step;
  const double mu = s.options.mu(k);
  const long long count = static_cast<long long>(s.problems.size());
  std::vector<int> failed(s.problems.size(), 0);
#pragma omp parallel for schedule(static) if (s.options.parallel_subsystems && count > 1)
  for (long long ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const EstimationProblem& p = *s.problems[i];
    try {
      LocalEstimate est = cbml_minimize(p, mu, hist, &s.estimates[i], hash_key({s.seed, k, i}), s.options.estimator);
      Mat gain = lqr_gain(est.a_hat, est.b_hat, p.q(), p.r());
      s.estimates[i] = std::move(est);
      s.local_gains[i] = std::move(gain);
    } catch (const Error&) {
      failed[i] = 1;  // keep the previous estimate and gain, retry next update
    }
  }
  for (int f : failed) s.infeasible_events += static_cast<std::size_t>(f);
  refresh_applied(s);
}

Vec adaptive_step(ControllerState& s, std::span<const double> x_k, const History& hist) {
  if (hist.samples() != s.step) throw Error(ErrorKind::InvalidArgument, "history length does not match the controller step");
  if (s.step > 0 && s.step % s.options.update_period == 0) reestimate(s, hist);
  Vec u = s.applied_gain * x_k;
  ++s.step;
  return u;
}

}  // namespace

Vec step_modified_ck(ControllerState& state, std::span<const double> x_k, const History& hist) {
  if (state.kind != StrategyKind::ModifiedCK) throw Error(ErrorKind::InvalidArgument, "state is not a modified_ck controller");
  return adaptive_step(state, x_k, hist);
}

Vec step_centralized_ck(ControllerState& state, std::span<const double> x_k, const History& hist) {
  if (state.kind != StrategyKind::CentralizedCK) throw Error(ErrorKind::InvalidArgument, "state is not a centralized_ck controller");
  return adaptive_step(state, x_k, hist);
}

Vec controller_step(ControllerState& state, std::span<const double> x_k, const History& hist) {
  switch (state.kind) {
    case StrategyKind::ModifiedCK: return step_modified_ck(state, x_k, hist);
    case StrategyKind::CentralizedCK: return step_centralized_ck(state, x_k, hist);
    case StrategyKind::OptimalFullInfo:
    case StrategyKind::Deadbeat: break;
  }
  Vec u = state.applied_gain * x_k;
  ++state.step;
  return u;
}

Strategy::Strategy(const StrategySpec& spec, const PlantFamily& family, const PlantInstance& plant)
    : spec_(spec), info_(plant.info) {
  if (spec_.adaptive.update_period == 0) throw Error(ErrorKind::InvalidArgument, "update_period must be >= 1");
  switch (spec_.kind) {
    case StrategyKind::OptimalFullInfo:
      static_gain_ = optimal_full_info(plant);
      break;
    case StrategyKind::Deadbeat:
      static_gain_ = deadbeat_platoon(plant);
      break;
    case StrategyKind::ModifiedCK:
      for (std::size_t i = 0; i < family.info.n_subsystems(); ++i)
        problems_.push_back(
            std::make_shared<const EstimationProblem>(family, known_mask(family, i), plant, spec_.adaptive.estimator));
      break;
    case StrategyKind::CentralizedCK:
      problems_.push_back(
          std::make_shared<const EstimationProblem>(family, centralized_mask(family), plant, spec_.adaptive.estimator));
      break;
  }
}

const Mat& Strategy::static_gain() const {
  if (!static_gain_) throw Error(ErrorKind::InvalidArgument, "adaptive strategies have no static gain");
  return *static_gain_;
}

ControllerState Strategy::instantiate(std::uint64_t seed) const {
  ControllerState s;
  s.kind = spec_.kind;
  s.info = info_;
  s.seed = seed;
  s.options = spec_.adaptive;
  if (static_gain_) {
    s.applied_gain = *static_gain_;
    return s;
  }
  s.problems = problems_;
  for (const auto& p : problems_) {
    LocalEstimate est = initial_estimate(*p);
    Mat gain(info_.m(), info_.n());
    try {
      gain = lqr_gain(est.a_hat, est.b_hat, p->q(), p->r());
    } catch (const Error&) {
      ++s.infeasible_events;
    }
    s.estimates.push_back(std::move(est));
    s.local_gains.push_back(std::move(gain));
  }
  s.applied_gain = stack_gains(s.local_gains, info_);
  return s;
}

}  // namespace adaptlqr
