#include "adaptlqr/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "adaptlqr/family_json.hpp"
#include "adaptlqr/sim.hpp"
#include "adaptlqr/svg.hpp"
#include "adaptlqr/trace_io.hpp"

namespace adaptlqr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

std::size_t positive(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 1) config_error(std::string(what) + " must be an integer >= 1");
  return j.get<std::size_t>();
}

std::size_t non_negative(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0) config_error(std::string(what) + " must be an integer >= 0");
  return j.get<std::size_t>();
}

double finite_number(const json& j, const char* what) {
  if (!j.is_number() || !std::isfinite(j.get<double>())) config_error(std::string(what) + " must be a finite number");
  return j.get<double>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
      config_error(where + ": unknown key '" + key + "'");
}

PlatoonParams platoon_params(const json& j) {
  if (!j.is_object()) config_error("platoon must be an object");
  reject_unknown(j,
                 {"alpha1", "beta1", "mass1", "alpha2", "beta2", "mass2", "delta_t", "d_star", "v_star", "q_d", "q_v",
                  "r_weight"},
                 "platoon");
  PlatoonParams p;
  auto take = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = finite_number(j[key], key);
  };
  take("alpha1", p.alpha1);
  take("beta1", p.beta1);
  take("mass1", p.mass1);
  take("alpha2", p.alpha2);
  take("beta2", p.beta2);
  take("mass2", p.mass2);
  take("delta_t", p.delta_t);
  take("d_star", p.d_star);
  take("v_star", p.v_star);
  take("q_d", p.q_d);
  take("q_v", p.q_v);
  take("r_weight", p.r_weight);
  return p;
}

std::vector<StrategyKind> parse_strategy_list(const std::string& csv) {
  std::vector<StrategyKind> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(parse_strategy(item));
  }
  if (out.empty()) config_error("at least one strategy is required");
  return out;
}

MuSchedule mu_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) config_error("mu must be {\"kind\": ...}");
  const std::string kind = j["kind"];
  if (kind == "sqrt_log") {
    reject_unknown(j, {"kind"}, "mu");
    return MuSchedule::sqrt_log();
  }
  if (kind != "custom") config_error("mu.kind must be sqrt_log or custom");
  reject_unknown(j, {"kind", "table"}, "mu");
  if (!j.contains("table") || !j["table"].is_array() || j["table"].empty()) config_error("mu.table must be a non-empty array");
  std::vector<std::pair<std::size_t, double>> table;
  for (const json& row : j["table"]) {
    if (!row.is_array() || row.size() != 2) config_error("mu.table rows are [k, mu]");
    table.emplace_back(non_negative(row[0], "mu.table k"), finite_number(row[1], "mu.table mu"));
  }
  try {
    return MuSchedule::custom(std::move(table));
  } catch (const Error& e) {
    config_error(std::string("mu: ") + e.what());
  }
}

NumeratorMode numerator_from(const std::string& s) {
  if (s == "auto") return NumeratorMode::Auto;
  if (s == "analytic") return NumeratorMode::Analytic;
  if (s == "simulated") return NumeratorMode::Simulated;
  config_error("ratio.numerator must be auto, analytic or simulated");
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) config_error("scenario must be a JSON object");
  reject_unknown(doc,
                 {"family", "platoon", "plant", "strategies", "horizon", "trajectories", "record_stride", "mu",
                  "update_period", "noise", "ratio", "svg", "out"},
                 "scenario");
  ScenarioConfig cfg;
  try {
    const json family = doc.value("family", json("platoon2"));
    if (family.is_string() && family.get<std::string>() == "platoon2") {
      cfg.family = build_platoon(doc.contains("platoon") ? platoon_params(doc["platoon"]) : PlatoonParams{});
      cfg.family_name = "platoon2";
    } else if (family.is_string()) {
      if (doc.contains("platoon")) config_error("platoon parameters only apply to the builtin platoon2 family");
      fs::path p = family.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      if (!fs::exists(p)) config_error("family file not found: " + p.string());
      cfg.family = load_family(p);
      cfg.family_name = p.string();
    } else if (family.is_object()) {
      cfg.family = family_from_json(family);
      cfg.family_name = "inline";
    } else {
      config_error("family must be \"platoon2\", a file path or an object");
    }

    if (doc.contains("plant")) {
      const json& pj = doc["plant"];
      if (!pj.is_object() || !pj.contains("A") || !pj.contains("B")) config_error("plant must be {\"A\": ..., \"B\": ...}");
      Mat a = mat_from_json(pj["A"], "plant.A");
      Mat b = mat_from_json(pj["B"], "plant.B");
      if (!family_contains(cfg.family, a, b, 1e-9)) config_error("plant is not a member of the family");
      cfg.plant = make_plant(std::move(a), std::move(b), cfg.family.q, cfg.family.r, cfg.family.info);
    }

    if (doc.contains("strategies")) {
      const json& s = doc["strategies"];
      if (s.is_string()) {
        cfg.strategies = parse_strategy_list(s.get<std::string>());
      } else if (s.is_array()) {
        cfg.strategies.clear();
        for (const json& e : s) {
          if (!e.is_string()) config_error("strategies must be names");
          cfg.strategies.push_back(parse_strategy(e.get<std::string>()));
        }
        if (cfg.strategies.empty()) config_error("at least one strategy is required");
      } else {
        config_error("strategies must be a list of names");
      }
    }
    if (doc.contains("horizon")) cfg.horizon = positive(doc["horizon"], "horizon");
    if (doc.contains("trajectories")) cfg.trajectories = positive(doc["trajectories"], "trajectories");
    if (doc.contains("record_stride")) cfg.record_stride = positive(doc["record_stride"], "record_stride");
    if (doc.contains("mu")) cfg.adaptive.mu = mu_from_json(doc["mu"]);
    if (doc.contains("update_period")) cfg.adaptive.update_period = positive(doc["update_period"], "update_period");

    if (doc.contains("noise")) {
      const json& nj = doc["noise"];
      if (!nj.is_object()) config_error("noise must be an object");
      reject_unknown(nj, {"covariances"}, "noise");
      if (nj.contains("covariances")) {
        const json& cs = nj["covariances"];
        if (!cs.is_array() || cs.size() != cfg.family.info.n_subsystems())
          config_error("noise.covariances needs one matrix per subsystem");
        for (std::size_t i = 0; i < cs.size(); ++i) {
          Mat h = mat_from_json(cs[i], "noise covariance");
          const std::size_t d = cfg.family.info.state_dims[i];
          if (h.rows() != d || h.cols() != d || !is_symmetric(h) || !is_positive_definite(h))
            config_error("noise covariance " + std::to_string(i + 1) + " must be a symmetric PD " + std::to_string(d) +
                         "x" + std::to_string(d) + " matrix");
          cfg.noise.covariances.push_back(std::move(h));
        }
      }
    }

    if (doc.contains("ratio")) {
      const json& rj = doc["ratio"];
      if (!rj.is_object()) config_error("ratio must be an object");
      reject_unknown(rj, {"n_plants", "seeds_per_plant", "numerator", "analytic_grid"}, "ratio");
      if (rj.contains("n_plants")) cfg.ratio_plants = positive(rj["n_plants"], "ratio.n_plants");
      if (rj.contains("seeds_per_plant")) cfg.ratio_seeds = positive(rj["seeds_per_plant"], "ratio.seeds_per_plant");
      if (rj.contains("numerator")) {
        if (!rj["numerator"].is_string()) config_error("ratio.numerator must be a string");
        cfg.ratio_numerator = numerator_from(rj["numerator"].get<std::string>());
      }
      if (rj.contains("analytic_grid")) cfg.analytic_grid = non_negative(rj["analytic_grid"], "ratio.analytic_grid");
    }
    if (doc.contains("svg")) {
      if (!doc["svg"].is_boolean()) config_error("svg must be true or false");
      cfg.svg = doc["svg"].get<bool>();
    }
    if (doc.contains("out")) {
      if (!doc["out"].is_string()) config_error("out must be a path");
      cfg.out = doc["out"].get<std::string>();
    }
  } catch (const json::exception& e) {
    config_error(std::string("scenario: ") + e.what());
  } catch (const Error& e) {
    // Invalid platoon parameters, bad plants etc. are all configuration problems here.
    if (exit_code_for(e.kind()) == 2) throw;
    config_error(e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    config_error(path.string() + ": " + e.what());
  }
  return scenario_from_json(doc, path.parent_path());
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
    case ErrorKind::InvalidParams:
    case ErrorKind::InvalidArgument:
    case ErrorKind::WrongFamily:
      return 2;
    default:
      return 3;
  }
}

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> horizon;
  std::optional<std::string> out;
  std::optional<std::string> strategies;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, Flags& f, bool seed_required) {
  cmd->add_option("--config", f.config, "Scenario JSON")->check(CLI::ExistingFile);
  auto* seed = cmd->add_option("--seed", f.seed, "Master seed");
  if (seed_required) seed->required();
  cmd->add_option("--horizon", f.horizon, "Horizon T")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--strategies", f.strategies, "Comma-separated strategy list");
  cmd->add_option("--format", f.format, "Summary format")->check(CLI::IsMember({"csv", "json"}));
}

ScenarioConfig resolve(const Flags& f) {
  ScenarioConfig cfg = f.config.empty() ? scenario_from_json(json::object(), fs::current_path()) : load_scenario(f.config);
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.out) cfg.out = *f.out;
  if (f.strategies) cfg.strategies = parse_strategy_list(*f.strategies);
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string());
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

PlantInstance scenario_plant(const ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.plant) return *cfg.plant;
  if (cfg.family.nominal) return *cfg.family.nominal;
  return sample_plant(cfg.family, plant_seed(seed, 0));
}

const char* color_of(StrategyKind k) {
  switch (k) {
    case StrategyKind::OptimalFullInfo: return "#1f77b4";
    case StrategyKind::ModifiedCK: return "#d62728";
    case StrategyKind::CentralizedCK: return "#2ca02c";
    case StrategyKind::Deadbeat: return "#9467bd";
  }
  return "black";
}

std::string display_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::OptimalFullInfo: return "K* (full information)";
    case StrategyKind::ModifiedCK: return "modified Campi-Kumar";
    case StrategyKind::CentralizedCK: return "centralized Campi-Kumar";
    case StrategyKind::Deadbeat: return "deadbeat";
  }
  return "?";
}

void write_plots(const fs::path& dir, const std::vector<std::pair<StrategyKind, SimTrace>>& runs, double trace_x) {
  SvgPlot cost{"Running cost", "k", "J_k", true, false, {}, {{trace_x, "trace X"}}};
  for (const auto& [kind, tr] : runs) {
    if (tr.k.empty()) continue;
    SvgSeries s{display_name(kind), {}, tr.running_cost, color_of(kind), ""};
    for (std::size_t k : tr.k) s.x.push_back(static_cast<double>(k));
    cost.series.push_back(std::move(s));
  }
  write_file(dir / "running_cost.svg", render_svg(cost));

  SvgPlot est{"Estimation error", "k", "|estimate - true|", true, true, {}, {}};
  const char* dashes[] = {"", "6 3", "2 2", "8 3 2 3"};
  for (const auto& [kind, tr] : runs) {
    for (std::size_t c = 0; c < tr.estimate_labels.size(); ++c) {
      SvgSeries s{std::string(to_string(kind)) + " " + tr.estimate_labels[c].substr(4), {}, tr.estimate_errors[c],
                  color_of(kind), dashes[c % 4]};
      for (std::size_t k : tr.k) s.x.push_back(static_cast<double>(k));
      est.series.push_back(std::move(s));
    }
  }
  if (!est.series.empty()) write_file(dir / "estimate_error.svg", render_svg(est));
}

json summary_json(const std::vector<SummaryRow>& rows, const PlantInstance& plant, double trace_x) {
  json out{{"trace_x", trace_x}, {"plant", {{"A", mat_to_json(plant.a)}, {"B", mat_to_json(plant.b)}}}, {"runs", json::array()}};
  for (const SummaryRow& r : rows) {
    json row{{"strategy", r.strategy}, {"seed", r.seed}, {"trajectory", r.trajectory}, {"horizon", r.horizon},
             {"failed", r.failed}};
    // JSON has no infinity; failed runs carry null costs.
    row["final_cost"] = std::isfinite(r.final_cost) ? json(r.final_cost) : json(nullptr);
    row["tail_cost"] = std::isfinite(r.tail_cost) ? json(r.tail_cost) : json(nullptr);
    out["runs"].push_back(row);
  }
  return out;
}

int cmd_simulate(const ScenarioConfig& cfg, std::uint64_t seed, const std::string& format) {
  const PlantInstance plant = scenario_plant(cfg, seed);
  const double trace_x = optimal_cost(plant, cfg.noise);
  ensure_dir(cfg.out);

  SimConfig sim;
  sim.horizon = cfg.horizon;
  sim.seed = seed;
  sim.noise = cfg.noise;
  sim.record_stride = cfg.record_stride;
  std::vector<std::uint64_t> trajectories(cfg.trajectories);
  for (std::size_t j = 0; j < trajectories.size(); ++j) trajectories[j] = j;

  std::vector<SummaryRow> rows;
  std::vector<std::pair<StrategyKind, SimTrace>> first;
  bool any_failed = false;
  std::printf("optimal cost trace(XH) = %.10g\n", trace_x);
  for (StrategyKind kind : cfg.strategies) {
    const Strategy strategy(StrategySpec{kind, cfg.adaptive}, cfg.family, plant);
    std::vector<SimTrace> traces = run_ensemble(plant, strategy, sim, trajectories, ExecPolicy::Parallel);
    for (const SimTrace& tr : traces) {
      std::ostringstream csv;
      write_trace_csv(csv, tr, plant);
      write_file(cfg.out / ("trace_" + tr.strategy + "_s" + std::to_string(seed) + "_t" + std::to_string(tr.trajectory) + ".csv"),
                 csv.str());
      rows.push_back(summarize(tr));
      any_failed = any_failed || tr.failed;
      std::printf("%-15s t%-3llu tail %.6f  final %.6f%s\n", tr.strategy.c_str(),
                  static_cast<unsigned long long>(tr.trajectory), rows.back().tail_cost, rows.back().final_cost,
                  tr.failed ? ("  FAILED: " + tr.failure).c_str() : "");
    }
    first.emplace_back(kind, std::move(traces.front()));
  }

  if (format == "json") {
    write_file(cfg.out / "summary.json", summary_json(rows, plant, trace_x).dump(2) + "\n");
  } else {
    std::ostringstream csv;
    write_summary_csv(csv, rows);
    write_file(cfg.out / "summary.csv", csv.str());
  }
  if (cfg.svg) write_plots(cfg.out, first, trace_x);
  if (any_failed) {
    std::fprintf(stderr, "error: at least one trajectory failed numerically\n");
    return 3;
  }
  return 0;
}

int cmd_ratio(const ScenarioConfig& cfg, std::uint64_t seed, const std::string& format) {
  // Ratios are defined on the whitened family; a covariance here would be silently ignored.
  if (!cfg.noise.is_unit()) config_error("ratio assumes unit noise covariance; whiten the family first");
  ensure_dir(cfg.out);
  int status = 0;
  for (StrategyKind kind : cfg.strategies) {
    const StrategySpec spec{kind, cfg.adaptive};
    RatioEstimate est;
    const bool is_static = kind == StrategyKind::OptimalFullInfo || kind == StrategyKind::Deadbeat;
    if (cfg.analytic_grid > 0 && is_static && cfg.ratio_numerator != NumeratorMode::Simulated) {
      est = analytic_ratio_static(cfg.family, spec, cfg.analytic_grid);
    } else {
      RatioOptions opts;
      opts.n_plants = cfg.ratio_plants;
      opts.seeds_per_plant = cfg.ratio_seeds;
      opts.horizon = cfg.horizon;
      opts.master_seed = seed;
      opts.numerator = cfg.ratio_numerator;
      opts.record_stride = std::max<std::size_t>(cfg.record_stride, 1);
      est = estimate_ratios(cfg.family, spec, opts);
    }
    const std::string stem = "ratio_" + std::string(to_string(kind));
    if (format == "json") {
      write_file(cfg.out / (stem + ".json"), ratio_to_json(est).dump(2) + "\n");
    } else {
      std::ostringstream csv;
      write_ratio_csv(csv, est);
      write_file(cfg.out / (stem + ".csv"), csv.str());
    }
    std::printf("%-15s %-9s r_ave %.6f  r_sup %.6f  plants %zu  skipped %zu\n", est.strategy.c_str(),
                est.numerator.c_str(), est.r_ave_hat, est.r_sup_hat, est.n_plants, est.skipped);
    if (est.skipped == est.per_plant.size()) {
      std::fprintf(stderr, "error: every plant evaluation failed for %s\n", est.strategy.c_str());
      status = 3;
    }
  }
  return status;
}

void print_family_report(const PlantFamily& family, const std::string& name) {
  const InfoStructure& info = family.info;
  std::printf("family: %s\n", name.c_str());
  std::printf("  n = %zu, m = %zu, subsystems = %zu, free parameters = %zu\n", family.n(), family.m(),
              info.n_subsystems(), family.free_count());
  const auto labels = free_parameter_labels(family);
  std::printf("  free:");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& l = labels[i];
    const bool in_a = l[0] == 'A';
    const std::size_t r = std::stoul(l.substr(2)) - 1;
    const std::size_t c = std::stoul(l.substr(l.rfind('_') + 1)) - 1;
    const EntrySpec& e = in_a ? family.a_entry(r, c) : family.b_entry(r, c);
    std::printf(" %s[%g,%g]", l.c_str(), e.lo, e.hi);
  }
  std::printf("\n");
  for (std::size_t i = 0; i < info.n_subsystems(); ++i) {
    const KnownMask mask = known_mask(family, i);
    std::printf("  subsystem %zu: dims (%zu,%zu), knows %zu entries, estimates %zu\n", i + 1, info.state_dims[i],
                info.input_dims[i], mask.count(EntryClass::Known), mask.count(EntryClass::Free));
  }
  if (family.nominal) {
    const PlantInstance& p = *family.nominal;
    const double tx = solve_dare(p.a, p.b, p.q, p.r).x.trace();
    std::printf("  nominal plant: in box, trace X = %.10g\n", tx);
  } else {
    std::printf("  nominal plant: none\n");
  }
  const PlantInstance sample = sample_plant(family, 0);
  std::printf("  sample draw: ok, trace X = %.10g\n", solve_dare(sample.a, sample.b, sample.q, sample.r).x.trace());
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Adaptive LQR under limited model information"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "adaptlqr 0.1");

  Flags sim_f, ratio_f, demo_f, vf_f;
  std::string family_arg;
  auto* sim = app.add_subcommand("simulate", "Closed-loop runs of each strategy on one plant");
  add_common(sim, sim_f, true);
  auto* ratio = app.add_subcommand("ratio", "Monte-Carlo competitive ratios over the plant family");
  add_common(ratio, ratio_f, true);
  auto* demo = app.add_subcommand("platoon-demo", "Two-truck platoon with all four controllers");
  add_common(demo, demo_f, false);
  auto* vf = app.add_subcommand("validate-family", "Check a family file and print its structure");
  vf->add_option("family", family_arg, "Family JSON file or 'platoon2'");
  vf->add_option("--config", vf_f.config, "Scenario JSON whose family is checked")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed())
    return guarded([&] { return cmd_simulate(resolve(sim_f), *sim_f.seed, sim_f.format); });
  if (ratio->parsed())
    return guarded([&] { return cmd_ratio(resolve(ratio_f), *ratio_f.seed, ratio_f.format); });
  if (demo->parsed())
    return guarded([&] {
      ScenarioConfig cfg = resolve(demo_f);
      if (demo_f.config.empty() && !demo_f.out) cfg.out = "platoon_demo";
      if (cfg.family_name != "platoon2") config_error("platoon-demo needs the builtin platoon2 family");
      const PlantInstance& p = *cfg.family.nominal;
      std::printf("platoon: a11 = %.4f, b11 = %.4f, a22 = %.4f, b22 = %.4f\n", p.a(0, 0), p.b(0, 0), p.a(2, 2),
                  p.b(2, 1));
      return cmd_simulate(cfg, demo_f.seed.value_or(1), demo_f.format);
    });
  return guarded([&] {
    if (!family_arg.empty() && !vf_f.config.empty()) config_error("give either a family file or --config, not both");
    if (family_arg.empty() && vf_f.config.empty()) config_error("validate-family needs a family file or --config");
    if (!vf_f.config.empty()) {
      const ScenarioConfig cfg = load_scenario(vf_f.config);
      print_family_report(cfg.family, cfg.family_name);
      return 0;
    }
    const json doc{{"family", family_arg}};
    const ScenarioConfig cfg = scenario_from_json(doc, fs::current_path());
    print_family_report(cfg.family, cfg.family_name);
    return 0;
  });
}

}  // namespace adaptlqr
