#include "adaptlqr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>

#include "adaptlqr/noise.hpp"
#include "adaptlqr/trace_io.hpp"

namespace adaptlqr {

using nlohmann::json;

std::uint64_t plant_seed(std::uint64_t master, std::size_t plant) { return hash_key({master, 0x706c616e74ULL, plant}); }

std::uint64_t trajectory_seed(std::uint64_t master, std::size_t plant, std::size_t trajectory) {
  return hash_key({master, 0x7472616aULL, plant, trajectory});
}

std::vector<std::string> free_parameter_labels(const PlantFamily& family) {
  std::vector<std::string> labels;
  const std::size_t n = family.n();
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n + family.m(); ++col)
      if (family.entry(row, col).kind == EntrySpec::Kind::Free) {
        const bool is_a = col < n;
        labels.push_back(std::string(is_a ? "A_" : "B_") + std::to_string(row + 1) + "_" +
                         std::to_string((is_a ? col : col - n) + 1));
      }
  return labels;
}

namespace {

void reduce(RatioEstimate& est) {
  double wsum = 0.0;
  double acc = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  est.skipped = 0;
  for (const PlantRatio& p : est.per_plant) {
    if (!p.ok) {
      ++est.skipped;
      continue;
    }
    wsum += p.weight;
    acc += p.weight * p.ratio;
    best = std::max(best, p.ratio);
  }
  if (wsum > 0.0) {
    est.r_ave_hat = acc / wsum;
    est.r_sup_hat = best;
  } else {
    est.r_ave_hat = std::numeric_limits<double>::quiet_NaN();
    est.r_sup_hat = std::numeric_limits<double>::quiet_NaN();
  }
}

template <typename Body>
void for_each_index(std::size_t count, ExecPolicy policy, Body body) {
  std::vector<std::exception_ptr> errors(count);
  const long long total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::Parallel)
  for (long long ii = 0; ii < total; ++ii) {
    try {
      body(static_cast<std::size_t>(ii));
    } catch (...) {
      errors[static_cast<std::size_t>(ii)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

RatioEstimate estimate_ratios(const PlantFamily& family, const StrategySpec& strategy, const RatioOptions& opts) {
  validate_family(family);
  if (opts.n_plants == 0) throw Error(ErrorKind::InvalidArgument, "n_plants must be >= 1");
  if (opts.seeds_per_plant == 0) throw Error(ErrorKind::InvalidArgument, "seeds_per_plant must be >= 1");
  if (opts.horizon == 0) throw Error(ErrorKind::InvalidArgument, "horizon must be >= 1");

  RatioEstimate est;
  est.strategy = std::string(to_string(strategy.kind));
  est.n_plants = opts.n_plants;
  est.horizon = opts.horizon;
  est.seeds_per_plant = opts.seeds_per_plant;
  est.parameter_labels = free_parameter_labels(family);
  est.per_plant.resize(opts.n_plants);
  const bool static_kind = strategy.kind == StrategyKind::OptimalFullInfo || strategy.kind == StrategyKind::Deadbeat;
  const bool analytic = opts.numerator == NumeratorMode::Analytic || (opts.numerator == NumeratorMode::Auto && static_kind);
  if (analytic && !static_kind) throw Error(ErrorKind::InvalidArgument, "analytic numerators need a static strategy");
  est.numerator = analytic ? "analytic" : "simulated";

  for_each_index(opts.n_plants, opts.policy, [&](std::size_t i) {
    PlantRatio& pr = est.per_plant[i];
    pr.index = i;
    try {
      const PlantInstance plant = sample_plant(family, plant_seed(opts.master_seed, i));
      pr.free_values = free_values(family, plant.a, plant.b);
      pr.weight = density_weight(family, plant);
      pr.j_optimal = lyapunov_cost(plant, optimal_full_info(plant));
      const Strategy s(strategy, family, plant);
      if (analytic) {
        pr.j_strategy = lyapunov_cost(plant, s.static_gain());
      } else {
        double acc = 0.0;
        for (std::size_t j = 0; j < opts.seeds_per_plant; ++j) {
          SimConfig cfg;
          cfg.horizon = opts.horizon;
          cfg.seed = trajectory_seed(opts.master_seed, i, j);
          cfg.record_stride = opts.record_stride;
          const SimTrace tr = run_closed_loop(plant, s, cfg);
          if (tr.failed) throw Error(ErrorKind::NumericOverflow, "trajectory " + std::to_string(j) + ": " + tr.failure);
          acc += tr.tail_cost;
        }
        pr.j_strategy = acc / static_cast<double>(opts.seeds_per_plant);
      }
      pr.ratio = pr.j_strategy / pr.j_optimal;
      if (!(pr.ratio > 0.0) || !std::isfinite(pr.ratio)) throw Error(ErrorKind::NumericOverflow, "non-finite ratio");
    } catch (const Error& e) {
      pr.ok = false;
      pr.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });
  reduce(est);
  return est;
}

RatioEstimate analytic_ratio_static(const PlantFamily& family, const StrategySpec& strategy, std::size_t n_grid,
                                    ExecPolicy policy) {
  validate_family(family);
  if (strategy.kind != StrategyKind::OptimalFullInfo && strategy.kind != StrategyKind::Deadbeat)
    throw Error(ErrorKind::InvalidArgument, "analytic_ratio_static needs a static strategy");
  if (n_grid == 0) throw Error(ErrorKind::InvalidArgument, "n_grid must be >= 1");

  const std::size_t n = family.n();
  const std::size_t m = family.m();
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n + m; ++col)
      if (family.entry(row, col).kind == EntrySpec::Kind::Free) coords.emplace_back(row, col);
  std::size_t total = 1;
  for (std::size_t j = 0; j < coords.size(); ++j) total *= n_grid;

  RatioEstimate est;
  est.strategy = std::string(to_string(strategy.kind));
  est.numerator = "analytic";
  est.n_plants = total;
  est.parameter_labels = free_parameter_labels(family);
  est.per_plant.resize(total);

  for_each_index(total, policy, [&](std::size_t idx) {
    PlantRatio& pr = est.per_plant[idx];
    pr.index = idx;
    Mat a(n, n);
    Mat b(n, m);
    for (std::size_t row = 0; row < n; ++row)
      for (std::size_t col = 0; col < n + m; ++col) {
        const EntrySpec& e = family.entry(row, col);
        if (e.kind == EntrySpec::Kind::Fixed) (col < n ? a(row, col) : b(row, col - n)) = e.value;
      }
    pr.free_values.resize(coords.size());
    std::size_t rem = idx;
    for (std::size_t j = coords.size(); j-- > 0;) {
      const std::size_t g = rem % n_grid;
      rem /= n_grid;
      const auto [row, col] = coords[j];
      const EntrySpec& e = family.entry(row, col);
      const double v = n_grid == 1 ? 0.5 * (e.lo + e.hi)
                                   : e.lo + (e.hi - e.lo) * static_cast<double>(g) / static_cast<double>(n_grid - 1);
      pr.free_values[j] = v;
      (col < n ? a(row, col) : b(row, col - n)) = v;
    }
    try {
      const PlantInstance plant = make_plant(a, b, family.q, family.r, family.info);
      pr.weight = density_weight(family, plant);
      pr.j_optimal = lyapunov_cost(plant, optimal_full_info(plant));
      const Strategy s(strategy, family, plant);
      pr.j_strategy = lyapunov_cost(plant, s.static_gain());
      pr.ratio = pr.j_strategy / pr.j_optimal;
    } catch (const Error& e) {
      pr.ok = false;
      pr.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });
  reduce(est);
  return est;
}

json ratio_to_json(const RatioEstimate& est) {
  json doc;
  doc["strategy"] = est.strategy;
  doc["numerator"] = est.numerator;
  doc["r_ave_hat"] = est.r_ave_hat;
  doc["r_sup_hat"] = est.r_sup_hat;
  doc["r_sup_note"] = "sample maximum over evaluated plants; a lower bound on the essential supremum";
  doc["n_plants"] = est.n_plants;
  doc["horizon"] = est.horizon;
  doc["seeds_per_plant"] = est.seeds_per_plant;
  doc["skipped"] = est.skipped;
  doc["parameter_labels"] = est.parameter_labels;
  json rows = json::array();
  for (const PlantRatio& p : est.per_plant) {
    json r;
    r["index"] = p.index;
    r["parameters"] = p.free_values;
    r["ok"] = p.ok;
    if (p.ok) {
      r["j_strategy"] = p.j_strategy;
      r["j_optimal"] = p.j_optimal;
      r["ratio"] = p.ratio;
      r["weight"] = p.weight;
    } else {
      r["error"] = p.error;
    }
    rows.push_back(std::move(r));
  }
  doc["per_plant"] = std::move(rows);
  return doc;
}

void write_ratio_csv(std::ostream& out, const RatioEstimate& est) {
  out << "index";
  for (const auto& l : est.parameter_labels) out << ',' << l;
  out << ",j_strategy,j_optimal,ratio,weight,ok\n";
  for (const PlantRatio& p : est.per_plant) {
    out << p.index;
    for (double v : p.free_values) out << ',' << fmt17(v);
    for (std::size_t j = p.free_values.size(); j < est.parameter_labels.size(); ++j) out << ',';
    if (p.ok)
      out << ',' << fmt17(p.j_strategy) << ',' << fmt17(p.j_optimal) << ',' << fmt17(p.ratio) << ',' << fmt17(p.weight) << ",1\n";
    else
      out << ",,,,,0\n";
  }
}

}  // namespace adaptlqr
