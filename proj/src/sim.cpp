#include "adaptlqr/sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "adaptlqr/noise.hpp"

namespace adaptlqr {

namespace {

constexpr double kOverflow = 1e12;

// Per-subsystem diagnostics, recomputed only when the controller's gains change.
struct Diagnostics {
  std::size_t revision = static_cast<std::size_t>(-1);
  double gain_error = 0.0;
  std::vector<std::uint8_t> violating;
  std::vector<std::uint8_t> in_wdelta;

  void refresh(const ControllerState& st, const PlantInstance& plant, const Mat& l, const WDeltaParams& wd) {
    if (st.revision == revision) return;
    revision = st.revision;
    gain_error = spectral_norm(st.applied_gain - l);
    const std::size_t n_sub = st.local_gains.empty() ? 1 : st.local_gains.size();
    violating.assign(n_sub, 0);
    in_wdelta.assign(n_sub, 0);
    for (std::size_t i = 0; i < n_sub; ++i) {
      const Mat& gi = st.local_gains.empty() ? st.applied_gain : st.local_gains[i];
      violating[i] = spectral_norm(gi - l) > wd.rho;
      if (!st.estimates.empty())
        in_wdelta[i] = closed_loop_mismatch(st.estimates[i].a_hat, st.estimates[i].b_hat, gi, plant.a, plant.b) >= wd.delta;
    }
  }
};

}  // namespace

std::size_t SimTrace::index_of(std::size_t k_value) const {
  const auto it = std::lower_bound(k.begin(), k.end(), k_value);
  if (it == k.end() || *it != k_value) throw Error(ErrorKind::IndexOutOfRange, "step " + std::to_string(k_value) + " was not recorded");
  return static_cast<std::size_t>(it - k.begin());
}

double tail_average(std::size_t horizon, double j_t, double j_half) {
  const std::size_t h = horizon / 2;
  if (h == 0) return j_t;
  const double t = static_cast<double>(horizon);
  const double hd = static_cast<double>(h);
  return (t * j_t - hd * j_half) / (t - hd);
}

SimTrace run_closed_loop(const PlantInstance& plant, const Strategy& strategy, const SimConfig& cfg) {
  if (cfg.horizon == 0) throw Error(ErrorKind::InvalidArgument, "horizon must be >= 1");
  if (cfg.record_stride == 0) throw Error(ErrorKind::InvalidArgument, "record_stride must be >= 1");
  const std::size_t n = plant.a.rows();
  const std::size_t m = plant.b.cols();
  const std::size_t T = cfg.horizon;
  const std::size_t half = T / 2;

  SimTrace tr;
  tr.strategy = std::string(to_string(strategy.kind()));
  tr.seed = cfg.seed;
  tr.trajectory = cfg.trajectory;
  tr.horizon = T;

  const DareSolution opt = solve_dare(plant.a, plant.b, plant.q, plant.r);
  const bool unit_noise = cfg.noise.is_unit();
  const Mat hsqrt = unit_noise ? Mat() : noise_sqrt(plant.info, cfg.noise);
  tr.trace_x = unit_noise ? opt.x.trace() : (hsqrt.transpose() * opt.x * hsqrt).trace();

  ControllerState st = strategy.instantiate(hash_key({cfg.seed, cfg.trajectory}));
  const std::size_t n_sub = st.local_gains.empty() ? 1 : st.local_gains.size();
  tr.gain_violations.assign(n_sub, {});
  tr.wdelta_visits.assign(n_sub, {});

  std::vector<Vec> truth_theta;
  for (std::size_t p = 0; p < st.problems.size(); ++p) {
    const EstimationProblem& prob = *st.problems[p];
    truth_theta.push_back(prob.theta_of(plant.a, plant.b));
    for (std::size_t j = 0; j < prob.dim(); ++j) {
      const auto [row, col] = prob.coord(j);
      const bool is_a = col < n;
      tr.estimate_labels.push_back("err_s" + std::to_string(p + 1) + "_" + (is_a ? "A_" : "B_") + std::to_string(row + 1) + "_" +
                                   std::to_string((is_a ? col : col - n) + 1));
    }
  }
  tr.estimate_errors.assign(tr.estimate_labels.size(), {});

  const std::size_t expected = T / cfg.record_stride + 2;
  tr.k.reserve(expected);
  tr.running_cost.reserve(expected);
  tr.gain_error.reserve(expected);
  tr.moment4.reserve(expected);

  History hist(n, m, false);
  GaussianStream noise(cfg.seed, cfg.trajectory);
  Vec x(n, 0.0);
  Vec w(n, 0.0);
  Vec x_next(n, 0.0);
  std::vector<std::uint64_t> violations(n_sub, 0);
  std::vector<std::uint64_t> visits(n_sub, 0);
  Diagnostics diag;
  double cost_sum = 0.0;
  double m4_sum = 0.0;
  double j_half = 0.0;

  for (std::size_t k = 0; k < T; ++k) {
    Vec u;
    try {
      u = controller_step(st, x, hist);
    } catch (const Error& e) {
      tr.failed = true;
      tr.failed_at = k;
      tr.failure = e.what();
      break;
    }
    double xqx = 0.0;
    double uru = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) xqx += x[i] * plant.q(i, j) * x[j];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) uru += u[i] * plant.r(i, j) * u[j];
    cost_sum += xqx + uru;
    const double nx2 = dot(x, x);
    const double nu2 = dot(u, u);
    m4_sum += nx2 * nx2 + nu2 * nu2;

    diag.refresh(st, plant, opt.gain, cfg.wdelta);
    for (std::size_t i = 0; i < n_sub; ++i) {
      violations[i] += diag.violating[i];
      visits[i] += diag.in_wdelta[i];
    }

    noise.fill(k, w);
    if (!unit_noise) w = hsqrt * std::span<const double>(w);
    bool overflow = false;
    for (std::size_t i = 0; i < n; ++i) {
      double v = w[i] * cfg.noise_scale;
      for (std::size_t j = 0; j < n; ++j) v += plant.a(i, j) * x[j];
      for (std::size_t j = 0; j < m; ++j) v += plant.b(i, j) * u[j];
      x_next[i] = v;
      overflow = overflow || !(std::abs(v) <= kOverflow);
    }
    if (overflow) {
      tr.failed = true;
      tr.failed_at = k + 1;
      tr.failure = "state magnitude exceeded 1e12 (closed loop unstable)";
      break;
    }
    hist.append(u, x_next);
    x.swap(x_next);

    const std::size_t tp = k + 1;
    const double j_tp = cost_sum / static_cast<double>(tp);
    if (tp == half) j_half = j_tp;
    if (tp % cfg.record_stride == 0 || tp == T || tp == half) {
      tr.k.push_back(tp);
      tr.running_cost.push_back(j_tp);
      tr.gain_error.push_back(diag.gain_error);
      tr.moment4.push_back(m4_sum / static_cast<double>(tp));
      std::size_t c = 0;
      for (std::size_t p = 0; p < st.estimates.size(); ++p)
        for (std::size_t j = 0; j < truth_theta[p].size(); ++j, ++c)
          tr.estimate_errors[c].push_back(std::abs(st.estimates[p].theta[j] - truth_theta[p][j]));
      for (std::size_t i = 0; i < n_sub; ++i) {
        tr.gain_violations[i].push_back(violations[i]);
        tr.wdelta_visits[i].push_back(visits[i]);
      }
    }
  }

  tr.infeasible_events = st.infeasible_events;
  if (tr.failed) {
    tr.final_cost = std::numeric_limits<double>::infinity();
    tr.tail_cost = std::numeric_limits<double>::infinity();
  } else {
    tr.final_cost = tr.running_cost.back();
    tr.tail_cost = tail_average(T, tr.final_cost, j_half);
  }
  return tr;
}

std::vector<SimTrace> run_ensemble(const PlantInstance& plant, const Strategy& strategy, const SimConfig& cfg,
                                   const std::vector<std::uint64_t>& trajectories, ExecPolicy policy) {
  std::vector<SimTrace> out(trajectories.size());
  if (policy == ExecPolicy::Serial) {
    for (std::size_t j = 0; j < trajectories.size(); ++j) {
      SimConfig c = cfg;
      c.trajectory = trajectories[j];
      out[j] = run_closed_loop(plant, strategy, c);
    }
    return out;
  }
  std::vector<std::exception_ptr> errors(trajectories.size());
  const long long count = static_cast<long long>(trajectories.size());
#pragma omp parallel for schedule(dynamic)
  for (long long jj = 0; jj < count; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    try {
      SimConfig c = cfg;
      c.trajectory = trajectories[j];
      out[j] = run_closed_loop(plant, strategy, c);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double optimal_cost(const PlantInstance& plant, const NoiseModel& noise) {
  const Mat x = solve_dare(plant.a, plant.b, plant.q, plant.r).x;
  if (noise.is_unit()) return x.trace();
  const Mat h = noise_sqrt(plant.info, noise);
  return (h.transpose() * x * h).trace();
}

double lyapunov_cost(const PlantInstance& plant, const Mat& gain) {
  if (gain.rows() != plant.b.cols() || gain.cols() != plant.a.rows())
    throw Error(ErrorKind::DimensionMismatch, "gain must be m x n");
  const Mat c = plant.a + plant.b * gain;
  const Mat sigma = solve_stein(c, Mat::identity(plant.a.rows()));
  return (sigma * (plant.q + transpose_mul(gain, plant.r * gain))).trace();
}

MomentReport moment_tracker(const SimTrace& trace, double bound) {
  MomentReport rep;
  for (double v : trace.moment4) rep.sup_running = std::max(rep.sup_running, v);
  if (!trace.moment4.empty()) rep.final_running = trace.moment4.back();
  rep.within_bound = !trace.failed && rep.sup_running <= bound;
  return rep;
}

}  // namespace adaptlqr
