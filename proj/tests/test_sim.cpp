#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "adaptlqr/controllers.hpp"
#include "adaptlqr/noise.hpp"
#include "adaptlqr/platoon.hpp"
#include "adaptlqr/sim.hpp"
#include "oracle.hpp"

using namespace adaptlqr;

namespace {

PlantInstance scalar_plant(double a, double b) {
  const InfoStructure s = make_info({1}, {1}, {{1}}, {{1}});
  return make_plant(Mat{{a}}, Mat{{b}}, Mat{{1}}, Mat{{1}}, s);
}

PlantFamily scalar_box(double a_lo, double a_hi, double b_lo, double b_hi) {
  PlantFamily f;
  f.info = make_info({1}, {1}, {{1}}, {{1}});
  f.a_spec = {EntrySpec::free(a_lo, a_hi)};
  f.b_spec = {EntrySpec::free(b_lo, b_hi)};
  f.q = Mat{{1}};
  f.r = Mat{{1}};
  return f;
}

Strategy make(StrategyKind kind, const PlantFamily& f, const PlantInstance& p, AdaptiveOptions o = {}) {
  return Strategy(StrategySpec{kind, o}, f, p);
}

}  // namespace

TEST(GaussianStream, MomentsWithinThreeSigma) {
  const GaussianStream g(11, 3);
  const std::size_t n = 100000;
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = g.normal(k, 0), b = g.normal(k, 1);
    s0 += a;
    s1 += b;
    s00 += a * a;
    s11 += b * b;
    s01 += a * b;
  }
  const double dn = static_cast<double>(n);
  const double se_mean = 3.0 / std::sqrt(dn);
  const double se_var = 3.0 * std::sqrt(2.0 / dn);
  EXPECT_LT(std::abs(s0 / dn), se_mean);
  EXPECT_LT(std::abs(s1 / dn), se_mean);
  EXPECT_LT(std::abs(s00 / dn - 1.0), se_var);
  EXPECT_LT(std::abs(s11 / dn - 1.0), se_var);
  EXPECT_LT(std::abs(s01 / dn), se_mean);
}

TEST(GaussianStream, PureFunctionOfKey) {
  const GaussianStream a(5, 0), b(5, 0), c(5, 1), d(6, 0);
  std::vector<double> fa(5), fb(5);
  a.fill(42, fa);
  b.fill(42, fb);
  EXPECT_EQ(fa, fb);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(fa[i], a.normal(42, i));
  EXPECT_NE(a.normal(42, 0), c.normal(42, 0));
  EXPECT_NE(a.normal(42, 0), d.normal(42, 0));
  EXPECT_NE(a.normal(42, 0), a.normal(43, 0));
  EXPECT_NE(hash_key({1, 2}), hash_key({2, 1}));
}

TEST(TailAverage, Examples) {
  EXPECT_EQ(tail_average(1, 2.5, 0.0), 2.5);
  EXPECT_DOUBLE_EQ(tail_average(10, 2.0, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(tail_average(11, 1.0, 1.0), 1.0);
}

TEST(Sim, RecordingPoints) {
  const PlantFamily f = build_platoon();
  const Strategy s = make(StrategyKind::OptimalFullInfo, f, *f.nominal);
  SimConfig cfg;
  cfg.horizon = 10;
  cfg.record_stride = 4;
  EXPECT_EQ(run_closed_loop(*f.nominal, s, cfg).k, (std::vector<std::size_t>{4, 5, 8, 10}));
  cfg.horizon = 1;
  const SimTrace one = run_closed_loop(*f.nominal, s, cfg);
  ASSERT_EQ(one.k, (std::vector<std::size_t>{1}));
  EXPECT_EQ(one.running_cost[0], 0.0);  // x(0) = 0 and u(0) = 0
  EXPECT_EQ(one.tail_cost, one.final_cost);
}

TEST(Sim, ZeroNoiseHasZeroCost) {
  const PlantFamily f = build_platoon();
  SimConfig cfg;
  cfg.horizon = 200;
  cfg.noise_scale = 0.0;
  for (StrategyKind k : {StrategyKind::OptimalFullInfo, StrategyKind::ModifiedCK, StrategyKind::Deadbeat}) {
    const SimTrace tr = run_closed_loop(*f.nominal, make(k, f, *f.nominal), cfg);
    EXPECT_FALSE(tr.failed);
    for (double v : tr.running_cost) EXPECT_EQ(v, 0.0);
    for (double v : tr.moment4) EXPECT_EQ(v, 0.0);
  }
}

TEST(Sim, RunningCostMatchesIndependentRecomputation) {
  const PlantFamily f = build_platoon();
  const PlantInstance& p = *f.nominal;
  const Strategy s = make(StrategyKind::OptimalFullInfo, f, p);
  SimConfig cfg;
  cfg.horizon = 3000;
  cfg.seed = 21;
  cfg.trajectory = 4;
  cfg.record_stride = 1000;
  const SimTrace tr = run_closed_loop(p, s, cfg);

  const Eigen::MatrixXd a = oracle::to_eigen(p.a), b = oracle::to_eigen(p.b);
  const Eigen::MatrixXd q = oracle::to_eigen(p.q), r = oracle::to_eigen(p.r);
  const Eigen::MatrixXd k = oracle::to_eigen(s.static_gain());
  const GaussianStream g(21, 4);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  double sum = 0.0;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    const Eigen::VectorXd u = k * x;
    sum += x.dot(q * x) + u.dot(r * u);
    Eigen::VectorXd w(3);
    for (int i = 0; i < 3; ++i) w[i] = g.normal(t, i);
    x = a * x + b * u + w;
    const auto it = std::find(tr.k.begin(), tr.k.end(), t + 1);
    const auto idx = static_cast<std::size_t>(it - tr.k.begin());
    if (it != tr.k.end()) EXPECT_NEAR(tr.running_cost[idx], sum / static_cast<double>(t + 1), 1e-10 * sum / (t + 1));
  }
  EXPECT_NEAR(tr.final_cost, sum / cfg.horizon, 1e-10 * sum / cfg.horizon);
  EXPECT_EQ(tr.k, (std::vector<std::size_t>{1000, 1500, 2000, 3000}));
  EXPECT_EQ(tr.index_of(2000), 2u);
  EXPECT_THROW((void)tr.index_of(1), Error);
}

TEST(Sim, ScalarGoldenOptimalCost) {
  const PlantInstance p = scalar_plant(1, 1);
  PlantFamily f = scalar_box(1, 1, 1, 1);
  const Strategy s = make(StrategyKind::OptimalFullInfo, f, p);
  SimConfig cfg;
  cfg.horizon = 100000;
  cfg.record_stride = 10000;
  std::vector<std::uint64_t> traj(20);
  std::iota(traj.begin(), traj.end(), 0);
  const auto runs = run_ensemble(p, s, cfg, traj, ExecPolicy::Parallel);
  double mean = 0.0;
  for (const auto& tr : runs) mean += tr.final_cost / 20.0;
  EXPECT_NEAR(runs[0].trace_x, (1 + std::sqrt(5.0)) / 2, 1e-9);
  EXPECT_LT(std::abs(mean / runs[0].trace_x - 1.0), 0.05);
}

TEST(Sim, NonUnitNoiseScalesCost) {
  // A = 0 and K = 0: J = E‖w‖² = trace H.
  const PlantInstance p = scalar_plant(0, 1);
  const PlantFamily f = scalar_box(0, 0, 1, 1);
  const Strategy s = make(StrategyKind::OptimalFullInfo, f, p);
  SimConfig cfg;
  cfg.horizon = 100000;
  cfg.record_stride = 10000;
  cfg.noise.covariances = {Mat{{4}}};
  const SimTrace tr = run_closed_loop(p, s, cfg);
  EXPECT_LT(std::abs(tr.final_cost / 4.0 - 1.0), 0.03);
  EXPECT_NEAR(tr.trace_x, 4.0, 1e-9);
  EXPECT_NEAR(optimal_cost(p, cfg.noise), 4.0, 1e-9);
  EXPECT_NEAR(optimal_cost(p), 1.0, 1e-12);
}

TEST(Sim, DeadbeatMatchesLyapunovCost) {
  const PlantFamily f = build_platoon();
  const PlantInstance& p = *f.nominal;
  const Strategy s = make(StrategyKind::Deadbeat, f, p);
  const double analytic = lyapunov_cost(p, s.static_gain());
  SimConfig cfg;
  cfg.horizon = 100000;
  cfg.record_stride = 10000;
  const SimTrace tr = run_closed_loop(p, s, cfg);
  EXPECT_LT(std::abs(tr.final_cost / analytic - 1.0), 0.05);
}

TEST(LyapunovCost, Examples) {
  const PlantInstance golden = scalar_plant(1, 1);
  EXPECT_NEAR(lyapunov_cost(golden, optimal_full_info(golden)), (1 + std::sqrt(5.0)) / 2, 1e-8);
  const PlantInstance zero = scalar_plant(0, 1);
  EXPECT_DOUBLE_EQ(lyapunov_cost(zero, Mat{{0}}), 1.0);

  const PlantFamily f = build_platoon();
  const PlantInstance& p = *f.nominal;
  EXPECT_NEAR(lyapunov_cost(p, optimal_full_info(p)), solve_dare(p.a, p.b, p.q, p.r).x.trace(), 1e-8);
  // Deadbeat: closed loop C is nilpotent of order two, so Σ = I + CCᵀ.
  const Mat g = deadbeat_platoon(p);
  const Eigen::MatrixXd c = oracle::to_eigen(p.a + p.b * g);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(3, 3) + c * c.transpose();
  const Eigen::MatrixXd kk = oracle::to_eigen(g);
  const double want = (sigma * (oracle::to_eigen(p.q) + kk.transpose() * oracle::to_eigen(p.r) * kk)).trace();
  EXPECT_NEAR(lyapunov_cost(p, g), want, 1e-10 * want);

  try {
    lyapunov_cost(scalar_plant(2, 1), Mat{{0}});
    ADD_FAILURE() << "expected UnstableClosedLoop";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnstableClosedLoop);
  }
}

TEST(MomentTracker, StationaryFourthMoment) {
  // x(k+1) = c x + w with c = 1 + L: E x⁴ = 3σ⁴, E u⁴ = L⁴·3σ⁴.
  const PlantInstance p = scalar_plant(1, 1);
  const Strategy s = make(StrategyKind::OptimalFullInfo, scalar_box(1, 1, 1, 1), p);
  const double l = s.static_gain()(0, 0);
  const double c = 1 + l;
  const double var = 1.0 / (1.0 - c * c);
  const double want = 3 * var * var * (1 + std::pow(l, 4));
  SimConfig cfg;
  cfg.horizon = 200000;
  cfg.record_stride = 10000;
  std::vector<std::uint64_t> traj{0, 1, 2, 3};
  double mean = 0.0;
  for (const auto& tr : run_ensemble(p, s, cfg, traj, ExecPolicy::Parallel)) {
    const MomentReport rep = moment_tracker(tr, 10 * want);
    EXPECT_TRUE(rep.within_bound);
    EXPECT_EQ(rep.final_running, tr.moment4.back());
    EXPECT_GE(rep.sup_running, rep.final_running);
    mean += rep.final_running / 4.0;
  }
  EXPECT_LT(std::abs(mean / want - 1.0), 0.05);
  SimTrace tiny;
  tiny.moment4 = Vec{1.0, 3.0, 2.0};
  EXPECT_EQ(moment_tracker(tiny, 2.5).sup_running, 3.0);
  EXPECT_FALSE(moment_tracker(tiny, 2.5).within_bound);
}

TEST(Sim, UnstableLoopOverflowsAndFails) {
  // Huge update period: the midpoint gain is applied forever and does not
  // stabilize the true plant.
  const PlantFamily f = scalar_box(0, 2.5, 0.5, 1.5);
  const PlantInstance truth = scalar_plant(2.4, 0.5);
  AdaptiveOptions o;
  o.update_period = 1u << 30;
  const Strategy s = make(StrategyKind::CentralizedCK, f, truth, o);
  const double mid_gain = lqr_gain(Mat{{1.25}}, Mat{{1.0}}, truth.q, truth.r)(0, 0);
  ASSERT_GT(std::abs(2.4 + 0.5 * mid_gain), 1.0);
  SimConfig cfg;
  cfg.horizon = 100000;
  const SimTrace tr = run_closed_loop(truth, s, cfg);
  EXPECT_TRUE(tr.failed);
  EXPECT_GT(tr.failed_at, 0u);
  EXPECT_LT(tr.failed_at, 1000u);
  EXPECT_TRUE(std::isinf(tr.final_cost));
  EXPECT_TRUE(std::isinf(tr.tail_cost));
  EXPECT_FALSE(moment_tracker(tr).within_bound);
}

TEST(Sim, EnsembleSerialEqualsParallel) {
  const PlantFamily f = build_platoon();
  const Strategy s = make(StrategyKind::ModifiedCK, f, *f.nominal);
  SimConfig cfg;
  cfg.horizon = 300;
  cfg.seed = 8;
  cfg.record_stride = 50;
  const std::vector<std::uint64_t> traj{0, 1, 2, 3};
  const auto a = run_ensemble(*f.nominal, s, cfg, traj, ExecPolicy::Serial);
  const auto b = run_ensemble(*f.nominal, s, cfg, traj, ExecPolicy::Parallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].trajectory, traj[j]);
    EXPECT_EQ(a[j].running_cost, b[j].running_cost);
    EXPECT_EQ(a[j].gain_error, b[j].gain_error);
    EXPECT_EQ(a[j].estimate_errors, b[j].estimate_errors);
  }
  EXPECT_NE(a[0].running_cost, a[1].running_cost);
}

TEST(Sim, DiagnosticsShapes) {
  const PlantFamily f = build_platoon();
  const Strategy s = make(StrategyKind::ModifiedCK, f, *f.nominal);
  SimConfig cfg;
  cfg.horizon = 100;
  cfg.record_stride = 10;
  const SimTrace tr = run_closed_loop(*f.nominal, s, cfg);
  ASSERT_EQ(tr.k.size(), 10u);
  EXPECT_EQ(tr.estimate_labels.size(), tr.estimate_errors.size());
  EXPECT_EQ(tr.estimate_errors.size(), 4u);
  EXPECT_EQ(tr.gain_violations.size(), 2u);
  EXPECT_EQ(tr.wdelta_visits.size(), 2u);
  for (const auto& v : tr.gain_violations) {
    ASSERT_EQ(v.size(), tr.k.size());
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    EXPECT_LE(v.back(), 100u);
  }
  for (const auto& v : tr.estimate_errors)
    for (double e : v) EXPECT_GE(e, 0.0);
  EXPECT_NEAR(tr.trace_x, 8.18409568537769, 1e-9);
}
