// Acceptance harness: one PASS/FAIL line per criterion, tolerances pinned here.
//
//   adaptlqr_acceptance [--only 1,2,...] [--seeds 20]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "adaptlqr/controllers.hpp"
#include "adaptlqr/estimator.hpp"
#include "adaptlqr/metrics.hpp"
#include "adaptlqr/platoon.hpp"
#include "adaptlqr/sim.hpp"
#include "../oracle.hpp"

using namespace adaptlqr;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome dare_correctness() {
  const auto t0 = Clock::now();
  const double phi = (1 + std::sqrt(5.0)) / 2;
  const double scalar_err = std::abs(solve_dare(Mat{{1}}, Mat{{1}}, Mat{{1}}, Mat{{1}}).x(0, 0) - phi);

  std::mt19937_64 rng(1);
  double worst_residual = 0.0, worst_rho = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 6, m = 1 + (t / 6) % 3;
    const oracle::System s = oracle::random_system(rng, n, m);
    const DareSolution sol = solve_dare(s.a, s.b, s.q, s.r);
    // Residual of the Riccati map evaluated in Eigen, independent of the library.
    const Eigen::MatrixXd a = oracle::to_eigen(s.a), b = oracle::to_eigen(s.b);
    const Eigen::MatrixXd q = oracle::to_eigen(s.q), r = oracle::to_eigen(s.r), x = oracle::to_eigen(sol.x);
    const Eigen::MatrixXd ric =
        a.transpose() * x * a - a.transpose() * x * b * (b.transpose() * x * b + r).ldlt().solve(b.transpose() * x * a) + q;
    worst_residual = std::max(worst_residual, (ric - x).norm() / std::max(1.0, x.norm()));
    worst_rho = std::max(worst_rho, oracle::spectral_radius(a + b * oracle::to_eigen(sol.gain)));
  }
  const double secs = seconds_since(t0);
  return {scalar_err <= 1e-10 && worst_residual <= 1e-9 && worst_rho < 1.0 && secs < 5.0,
          fmt("scalar |x-phi| = %.1e (<= 1e-10); 200 systems: max residual %.1e (<= 1e-9), max rho(A+BL) %.4f (< 1); "
              "%.2f s (< 5 s)",
              scalar_err, worst_residual, worst_rho, secs)};
}

// ---------------------------------------------------------------- 2
Outcome norm_bound_suite() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  int raw = 0, raw_matrix = 0, beyond_rounding = 0;
  double worst_excess = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 1 + t % 5;
    const Mat x = oracle::random_mat(rng, n, n), p = oracle::random_mat(rng, n, n), y = oracle::random_mat(rng, n, n);
    const Lemma3Bound b = lemma3_bound(x, p, y);
    if (b.lhs > b.rhs) {
      ++raw;
      raw_matrix += n > 1;
      worst_excess = std::max(worst_excess, (b.lhs - b.rhs) / b.rhs);
    }
    // The bound is attained with equality for same-sign scalars, so a
    // comparison of two floating-point evaluations needs a rounding allowance.
    if (b.lhs > b.rhs * (1.0 + 1e-12)) ++beyond_rounding;
  }
  const double secs = seconds_since(t0);
  return {beyond_rounding == 0 && secs < 5.0,
          fmt("10^4 triples: %d violations beyond 1e-12 relative rounding (raw lhs>rhs: %d, %d of them "
              "non-scalar, worst excess %.1e); %.2f s (< 5 s)",
              beyond_rounding, raw, raw_matrix, worst_excess, secs)};
}

// ---------------------------------------------------------------- 3
Outcome deadbeat_structure() {
  const PlantFamily f = build_platoon();
  double worst_sq = 0.0, worst_cost = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PlantInstance p = sample_plant(f, seed);
    const Mat g = deadbeat_platoon(p);
    const Eigen::MatrixXd c = oracle::to_eigen(p.a + p.b * g);
    worst_sq = std::max(worst_sq, oracle::spectral_norm(c * c));
    // Two-term Neumann series: Σ = I + CCᵀ, cost = trace M + trace CᵀMC, M = Q + ΓᵀRΓ.
    const Eigen::MatrixXd k = oracle::to_eigen(g);
    const Eigen::MatrixXd m = oracle::to_eigen(p.q) + k.transpose() * oracle::to_eigen(p.r) * k;
    const double want = m.trace() + (c.transpose() * m * c).trace();
    worst_cost = std::max(worst_cost, std::abs(lyapunov_cost(p, g) - want));
  }
  return {worst_sq <= 1e-12 && worst_cost <= 1e-8,
          fmt("100 plants: max ||(A+B*Gd)^2|| = %.1e (<= 1e-12), max |cost - Neumann oracle| = %.1e (<= 1e-8)", worst_sq,
              worst_cost)};
}

// ------------------------------------------------------- 4, 5, 7, 8
constexpr std::size_t kEnsembleHorizon = 50000;
constexpr std::size_t kStride = 100;

struct EnsembleRuns {
  double trace_x = 0.0;
  std::map<StrategyKind, std::vector<SimTrace>> runs;
  double seconds = 0.0;
};

EnsembleRuns run_shared_ensemble(std::size_t n_seeds) {
  const auto t0 = Clock::now();
  const PlantFamily f = build_platoon();
  const PlantInstance& p = *f.nominal;
  EnsembleRuns out;
  out.trace_x = solve_dare(p.a, p.b, p.q, p.r).x.trace();
  SimConfig cfg;
  cfg.horizon = kEnsembleHorizon;
  cfg.seed = 2024;
  cfg.record_stride = kStride;
  std::vector<std::uint64_t> traj(n_seeds);
  std::iota(traj.begin(), traj.end(), 0);
  for (StrategyKind kind : {StrategyKind::OptimalFullInfo, StrategyKind::ModifiedCK, StrategyKind::CentralizedCK}) {
    const auto ts = Clock::now();
    const Strategy s(StrategySpec{kind, {}}, f, p);
    out.runs[kind] = run_ensemble(p, s, cfg, traj, ExecPolicy::Parallel);
    std::fprintf(stderr, "  [ensemble] %-15s %zu trajectories x T=%zu in %.1f s\n", std::string(to_string(kind)).c_str(),
                 n_seeds, kEnsembleHorizon, seconds_since(ts));
  }
  out.seconds = seconds_since(t0);
  return out;
}

bool any_failed(const std::vector<SimTrace>& v) {
  return std::any_of(v.begin(), v.end(), [](const SimTrace& t) { return t.failed; });
}

Outcome cost_convergence(const EnsembleRuns& r) {
  std::string detail = fmt("trace X = %.6f;", r.trace_x);
  bool pass = true;
  for (const auto& [kind, traces] : r.runs) {
    double mean = 0.0, worst = 0.0;
    for (const SimTrace& t : traces) {
      mean += t.tail_cost / static_cast<double>(traces.size());
      worst = std::max(worst, std::abs(t.tail_cost / r.trace_x - 1.0));
    }
    const double dev = std::abs(mean / r.trace_x - 1.0);
    pass = pass && !any_failed(traces) && dev <= 0.10;
    detail += fmt(" %s mean tail %.4f (%+.2f%%, worst seed %.2f%%);", std::string(to_string(kind)).c_str(), mean,
                  100 * (mean / r.trace_x - 1.0), 100 * worst);
  }
  detail += fmt(" tolerance 10%%; %zu seeds, T=%zu; ensemble %.0f s (target < 600 s: %s)", r.runs.begin()->second.size(),
                kEnsembleHorizon, r.seconds, r.seconds < 600 ? "met" : "MISSED");
  return {pass, detail};
}

Outcome cost_ordering(const EnsembleRuns& r) {
  // A run truncated at T = 10⁴ is the causal prefix of the longer run, so its
  // tail average is read from the records at 5·10³ and 10⁴.
  auto mean_tail = [](const std::vector<SimTrace>& traces) {
    double m = 0.0;
    for (const SimTrace& t : traces) {
      const double j_t = t.running_cost[t.index_of(10000)];
      const double j_h = t.running_cost[t.index_of(5000)];
      m += tail_average(10000, j_t, j_h) / static_cast<double>(traces.size());
    }
    return m;
  };
  const double k = mean_tail(r.runs.at(StrategyKind::OptimalFullInfo));
  const double g = mean_tail(r.runs.at(StrategyKind::ModifiedCK));
  const double c = mean_tail(r.runs.at(StrategyKind::CentralizedCK));
  const bool pass = k <= g * 1.02 && g <= c * 1.02;
  return {pass, fmt("T=10^4 mean tail: K* %.4f <= modified %.4f <= centralized %.4f (2%% slack)", k, g, c)};
}

Outcome violation_decay(const EnsembleRuns& r) {
  const auto& traces = r.runs.at(StrategyKind::ModifiedCK);
  const AdaptiveOptions opt;
  const std::size_t k1 = 5000, k2 = 20000, half = kEnsembleHorizon / 2;
  const std::size_t n_sub = traces.front().gain_violations.size();
  std::vector<double> early(n_sub, 0.0), late(n_sub, 0.0);
  std::size_t improving = 0;
  for (const SimTrace& t : traces) {
    bool all = true;
    for (std::size_t i = 0; i < n_sub; ++i) {
      const auto& v = t.gain_violations[i];
      early[i] += static_cast<double>(v[t.index_of(k1)]) / opt.mu(k1) / static_cast<double>(traces.size());
      late[i] += static_cast<double>(v[t.index_of(k2)]) / opt.mu(k2) / static_cast<double>(traces.size());
      const auto first = v[t.index_of(half)];
      const auto second = v.back() - first;
      // Both halves free of violations also satisfies the claim.
      all = all && (second < first || (first == 0 && second == 0));
    }
    improving += all;
  }
  bool pass = any_failed(traces) ? false : true;
  std::string detail = "rho=0.1;";
  for (std::size_t i = 0; i < n_sub; ++i) {
    pass = pass && late[i] <= early[i];
    detail += fmt(" subsystem %zu mean count/mu: k=5e3 %.2f -> k=2e4 %.2f;", i + 1, early[i], late[i]);
  }
  const double share = static_cast<double>(improving) / static_cast<double>(traces.size());
  pass = pass && share >= 0.8;
  detail += fmt(" last-half violation fraction below first-half in %zu/%zu seeds (>= 80%%)", improving, traces.size());
  return {pass, detail};
}

Outcome moment_bound(const EnsembleRuns& r) {
  const auto& opt = r.runs.at(StrategyKind::OptimalFullInfo);
  const auto& ada = r.runs.at(StrategyKind::ModifiedCK);
  double worst = 0.0;
  bool pass = !any_failed(ada);
  for (std::size_t j = 0; j < ada.size(); ++j)
    for (std::size_t q = 0; q < ada[j].moment4.size(); ++q) {
      const double ratio = ada[j].moment4[q] / opt[j].moment4[q];
      worst = std::max(worst, ratio);
      pass = pass && ada[j].moment4[q] <= 10.0 * opt[j].moment4[q];
    }
  return {pass, fmt("max over seeds and k (every %zu steps) of running E||x||^4+||u||^4 ratio modified/K* = %.3f (<= 10)",
                    kStride, worst)};
}

// ---------------------------------------------------------------- 6
Outcome ratio_bounds() {
  const auto t0 = Clock::now();
  const PlantFamily f = build_platoon();
  RatioOptions o;
  o.n_plants = 20;
  o.horizon = 50000;
  o.master_seed = 6;
  const RatioEstimate ada = estimate_ratios(f, StrategySpec{StrategyKind::ModifiedCK, {}}, o);
  const RatioEstimate db = analytic_ratio_static(f, StrategySpec{StrategyKind::Deadbeat, {}}, 10);
  const bool pass = ada.skipped == 0 && 0.98 <= ada.r_ave_hat && ada.r_ave_hat <= ada.r_sup_hat && ada.r_sup_hat <= 1.15 &&
                    db.r_sup_hat > 1.01;
  return {pass, fmt("modified: r_ave %.4f, r_sup %.4f over %zu plants (skipped %zu), T=5e4 (0.98 <= r_ave <= r_sup <= 1.15); "
                    "deadbeat 10^4-point grid r_sup %.4f (> 1.01); %.0f s",
                    ada.r_ave_hat, ada.r_sup_hat, ada.n_plants, ada.skipped, db.r_sup_hat, seconds_since(t0))};
}

// ---------------------------------------------------------------- 9
History excite(const PlantInstance& p, std::size_t steps, std::uint64_t seed, double noise_sd) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> w(0.0, 1.0);
  History h(p.a.rows(), p.b.cols());
  Vec x(p.a.rows(), 0.0);
  h.reset(x);
  for (std::size_t k = 0; k < steps; ++k) {
    Vec in(p.b.cols());
    for (double& v : in) v = u(rng);
    Vec next = p.a * x;
    const Vec bu = p.b * in;
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += bu[i] + noise_sd * w(rng);
    h.append(in, next);
    x = next;
  }
  return h;
}

Outcome estimator_oracles() {
  const PlantFamily f = build_platoon();
  const PlantInstance truth = *f.nominal;
  double ls_err = 0.0;
  bool grid_ok = true;
  double grid_gap = 0.0;
  for (std::size_t sub = 0; sub < 2; ++sub) {
    const EstimationProblem prob(f, known_mask(f, sub), truth);
    // Noiseless: μ = 0 reduces the objective to least squares on the unknown row.
    const History h = excite(truth, 200, 40 + sub, 0.0);
    const std::size_t row = prob.coord(0).first;
    const std::size_t a_col = prob.coord(0).second;
    const std::size_t b_col = prob.coord(1).second - truth.a.rows();
    Eigen::MatrixXd phi(200, 2);
    Eigen::VectorXd y(200);
    for (int t = 0; t < 200; ++t) {
      phi(t, 0) = h.states()[t][a_col];
      phi(t, 1) = h.inputs()[t][b_col];
      y(t) = h.states()[t + 1][row];
    }
    const Eigen::VectorXd want = phi.colPivHouseholderQr().solve(y);
    const LocalEstimate est = cbml_minimize(prob, 0.0, h, nullptr, 9);
    ls_err = std::max({ls_err, std::abs(est.theta[0] - want(0)), std::abs(est.theta[1] - want(1))});

    // Large μ: the estimate approaches the trace-X minimizer over the box.
    const History few = excite(truth, 5, 50 + sub, 1.0);
    double best = INFINITY;
    Vec arg(2);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        const Vec th{prob.lo()[0] + (prob.hi()[0] - prob.lo()[0]) * i / 49.0,
                     prob.lo()[1] + (prob.hi()[1] - prob.lo()[1]) * j / 49.0};
        const double v = prob.trace_x(th);
        if (v < best) best = v, arg = th;
      }
    const LocalEstimate big = cbml_minimize(prob, 1e6, few, nullptr, 3);
    for (int c = 0; c < 2; ++c) {
      const double cell = (prob.hi()[c] - prob.lo()[c]) / 49.0;
      grid_gap = std::max(grid_gap, std::abs(big.theta[c] - arg[c]) / cell);
      grid_ok = grid_ok && std::abs(big.theta[c] - arg[c]) <= cell;
    }
    grid_ok = grid_ok && prob.trace_x(big.theta) <= best + 1e-9;
  }
  return {ls_err <= 1e-6 && grid_ok,
          fmt("noiseless mu=0 vs closed-form LS: max |diff| %.1e (<= 1e-6); mu=1e6 vs 50x50 grid argmin of trace X: "
              "max distance %.2f cells (<= 1)",
              ls_err, grid_gap)};
}

// ---------------------------------------------------------------- 10
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "adaptlqr_acceptance_det";
  fs::remove_all(base);
  const fs::path a = base / "a", b = base / "b";
  for (const fs::path& d : {a, b}) {
    const std::string cmd = std::string("\"") + ADAPTLQR_CLI + "\" simulate --seed 7 --out \"" + d.string() + "\" > \"" +
                            (base / "log.txt").string() + "\" 2>&1";
    fs::create_directories(base);
    if (std::system(cmd.c_str()) != 0) return {false, "simulate --seed 7 exited non-zero: " + cmd};
  }
  std::size_t csv = 0, differing = 0, files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / e.path().filename();
    const bool same = fs::exists(other) && slurp(e.path()) == slurp(other);
    if (e.path().extension() == ".csv") {
      ++csv;
      differing += !same;
    } else if (!same) {
      ++differing;
    }
  }
  const std::size_t files_b = static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator()));
  return {csv > 0 && differing == 0 && files == files_b,
          fmt("two runs of `simulate --seed 7`: %zu files (%zu CSV), %zu differ", files, csv, differing)};
}

const char* kTitles[] = {"",
                         "DARE correctness",
                         "Norm-bound property suite",
                         "Deadbeat structure",
                         "Adaptive cost reaches trace X",
                         "Running-cost ordering",
                         "Competitive ratios",
                         "Gain-violation occurrences",
                         "Fourth-moment boundedness",
                         "Estimator oracle equivalence",
                         "Determinism"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::size_t n_seeds = 20;
  app.add_option("--only", only, "Criteria to run")->delimiter(',')->check(CLI::Range(1, 10));
  app.add_option("--seeds", n_seeds, "Paired seeds for the shared ensemble")->check(CLI::Range(10, 1000));
  CLI11_PARSE(app, argc, argv);
  std::set<int> want(only.begin(), only.end());
  if (want.empty())
    for (int i = 1; i <= 10; ++i) want.insert(i);

  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& body) {
    if (!want.count(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, kTitles[id], o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, dare_correctness);
  report(2, norm_bound_suite);
  report(3, deadbeat_structure);
  if (want.count(4) || want.count(5) || want.count(7) || want.count(8)) {
    const EnsembleRuns runs = run_shared_ensemble(n_seeds);
    report(4, [&] { return cost_convergence(runs); });
    report(5, [&] { return cost_ordering(runs); });
    report(7, [&] { return violation_decay(runs); });
    report(8, [&] { return moment_bound(runs); });
  }
  report(6, ratio_bounds);
  report(9, estimator_oracles);
  report(10, determinism);
  return failures == 0 ? 0 : 1;
}
