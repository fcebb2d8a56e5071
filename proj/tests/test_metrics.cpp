#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "adaptlqr/metrics.hpp"
#include "adaptlqr/platoon.hpp"

using namespace adaptlqr;

namespace {

PlantFamily scalar_box(double a_lo, double a_hi, double b_lo, double b_hi) {
  PlantFamily f;
  f.info = make_info({1}, {1}, {{1}}, {{1}});
  f.a_spec = {a_lo == a_hi ? EntrySpec::fixed(a_lo) : EntrySpec::free(a_lo, a_hi)};
  f.b_spec = {b_lo == b_hi ? EntrySpec::fixed(b_lo) : EntrySpec::free(b_lo, b_hi)};
  f.q = Mat{{1}};
  f.r = Mat{{1}};
  return f;
}

void expect_same(const RatioEstimate& a, const RatioEstimate& b) {
  EXPECT_EQ(a.r_ave_hat, b.r_ave_hat);
  EXPECT_EQ(a.r_sup_hat, b.r_sup_hat);
  ASSERT_EQ(a.per_plant.size(), b.per_plant.size());
  for (std::size_t i = 0; i < a.per_plant.size(); ++i) {
    EXPECT_EQ(a.per_plant[i].free_values, b.per_plant[i].free_values);
    EXPECT_EQ(a.per_plant[i].ratio, b.per_plant[i].ratio);
  }
}

}  // namespace

TEST(Seeds, DistinctPerPlantAndTrajectory) {
  EXPECT_NE(plant_seed(0, 0), plant_seed(0, 1));
  EXPECT_NE(plant_seed(0, 0), plant_seed(1, 0));
  EXPECT_NE(trajectory_seed(0, 0, 0), trajectory_seed(0, 0, 1));
  EXPECT_NE(trajectory_seed(0, 0, 0), trajectory_seed(0, 1, 0));
  EXPECT_EQ(trajectory_seed(3, 4, 5), trajectory_seed(3, 4, 5));
}

TEST(Ratios, OptimalIsExactlyOne) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 50;
  const RatioEstimate est = estimate_ratios(f, StrategySpec{StrategyKind::OptimalFullInfo, {}}, o);
  EXPECT_EQ(est.numerator, "analytic");
  EXPECT_EQ(est.skipped, 0u);
  for (const PlantRatio& p : est.per_plant) EXPECT_EQ(p.ratio, 1.0);
  EXPECT_EQ(est.r_ave_hat, 1.0);
  EXPECT_EQ(est.r_sup_hat, 1.0);
}

TEST(Ratios, DeadbeatExceedsOneOnGrid) {
  const PlantFamily f = build_platoon();
  const RatioEstimate est = analytic_ratio_static(f, StrategySpec{StrategyKind::Deadbeat, {}}, 10);
  EXPECT_EQ(est.per_plant.size(), 10000u);
  EXPECT_EQ(est.skipped, 0u);
  EXPECT_GT(est.r_sup_hat, 1.0);
  EXPECT_GE(est.r_sup_hat, est.r_ave_hat);
  for (const PlantRatio& p : est.per_plant) EXPECT_GE(p.ratio, 1.0 - 1e-9);
  // Corners of the box are grid points.
  EXPECT_EQ(est.per_plant.front().free_values, (Vec{0.0, 0.5, 0.0, 0.5}));
  EXPECT_EQ(est.per_plant.back().free_values, (Vec{1.0, 1.5, 1.0, 1.5}));
}

TEST(Ratios, AverageBelowSupremumAndDeterministic) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 40;
  o.master_seed = 7;
  const StrategySpec db{StrategyKind::Deadbeat, {}};
  const RatioEstimate a = estimate_ratios(f, db, o);
  EXPECT_LE(a.r_ave_hat, a.r_sup_hat);
  EXPECT_GT(a.r_ave_hat, 1.0);
  expect_same(a, estimate_ratios(f, db, o));
  o.policy = ExecPolicy::Serial;
  expect_same(a, estimate_ratios(f, db, o));
  o.master_seed = 8;
  EXPECT_NE(estimate_ratios(f, db, o).r_ave_hat, a.r_ave_hat);
}

TEST(Ratios, SimulatedSerialEqualsParallel) {
  const PlantFamily f = scalar_box(0.5, 1.2, 0.6, 1.4);
  RatioOptions o;
  o.n_plants = 3;
  o.seeds_per_plant = 2;
  o.horizon = 400;
  o.record_stride = 100;
  const StrategySpec s{StrategyKind::ModifiedCK, {}};
  const RatioEstimate par = estimate_ratios(f, s, o);
  EXPECT_EQ(par.numerator, "simulated");
  EXPECT_EQ(par.skipped, 0u);
  for (const PlantRatio& p : par.per_plant) EXPECT_TRUE(std::isfinite(p.ratio) && p.ratio > 0.0);
  o.policy = ExecPolicy::Serial;
  expect_same(par, estimate_ratios(f, s, o));
}

TEST(Ratios, SinglePointFamily) {
  const PlantFamily f = scalar_box(1, 1, 1, 1);
  const RatioEstimate grid = analytic_ratio_static(f, StrategySpec{StrategyKind::OptimalFullInfo, {}}, 5);
  ASSERT_EQ(grid.per_plant.size(), 1u);
  EXPECT_EQ(grid.r_ave_hat, 1.0);
  RatioOptions o;
  o.n_plants = 4;
  o.horizon = 50000;
  o.record_stride = 5000;
  o.numerator = NumeratorMode::Simulated;
  const RatioEstimate sim = estimate_ratios(f, StrategySpec{StrategyKind::OptimalFullInfo, {}}, o);
  for (const PlantRatio& p : sim.per_plant) {
    EXPECT_TRUE(p.free_values.empty());
    EXPECT_NEAR(p.j_optimal, (1 + std::sqrt(5.0)) / 2, 1e-9);
  }
  EXPECT_LT(std::abs(sim.r_ave_hat - 1.0), 0.05);
}

TEST(Ratios, AnalyticAgreesWithSimulatedDeadbeat) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 3;
  o.horizon = 100000;
  o.record_stride = 10000;
  const StrategySpec db{StrategyKind::Deadbeat, {}};
  const RatioEstimate an = estimate_ratios(f, db, o);
  o.numerator = NumeratorMode::Simulated;
  const RatioEstimate sim = estimate_ratios(f, db, o);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(std::abs(sim.per_plant[i].ratio / an.per_plant[i].ratio - 1.0), 0.05);
}

TEST(Ratios, ArgumentErrors) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 0;
  EXPECT_THROW(estimate_ratios(f, StrategySpec{StrategyKind::Deadbeat, {}}, o), Error);
  o.n_plants = 1;
  o.numerator = NumeratorMode::Analytic;
  EXPECT_THROW(estimate_ratios(f, StrategySpec{StrategyKind::ModifiedCK, {}}, o), Error);
  EXPECT_THROW(analytic_ratio_static(f, StrategySpec{StrategyKind::ModifiedCK, {}}, 3), Error);
  EXPECT_THROW(analytic_ratio_static(f, StrategySpec{StrategyKind::Deadbeat, {}}, 0), Error);
}

TEST(Ratios, Serialization) {
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 4;
  const RatioEstimate est = estimate_ratios(f, StrategySpec{StrategyKind::Deadbeat, {}}, o);
  EXPECT_EQ(est.parameter_labels, (std::vector<std::string>{"A_1_1", "B_1_1", "A_3_3", "B_3_2"}));
  std::ostringstream csv;
  write_ratio_csv(csv, est);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "index,A_1_1,B_1_1,A_3_3,B_3_2,j_strategy,j_optimal,ratio,weight,ok");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
  }
  EXPECT_EQ(rows, 4u);
  const nlohmann::json doc = ratio_to_json(est);
  EXPECT_EQ(doc["per_plant"].size(), 4u);
  EXPECT_EQ(doc["r_sup_hat"].get<double>(), est.r_sup_hat);
  EXPECT_EQ(doc["per_plant"][2]["ratio"].get<double>(), est.per_plant[2].ratio);
}
