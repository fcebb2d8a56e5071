#include "adaptlqr/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace adaptlqr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// History

History::History(std::size_t n, std::size_t m, bool keep_series)
    : n_(n), m_(m), keep_series_(keep_series), last_state_(n, 0.0), phi_phi_(n + m, n + m), x_phi_(n, n + m), x_sq_(n, 0.0) {
  if (keep_series_) states_.push_back(last_state_);
}

void History::reset(std::span<const double> x0) {
  if (x0.size() != n_) throw Error(ErrorKind::DimensionMismatch, "History::reset");
  samples_ = 0;
  last_state_.assign(x0.begin(), x0.end());
  states_.clear();
  inputs_.clear();
  if (keep_series_) states_.push_back(last_state_);
  phi_phi_ = Mat(n_ + m_, n_ + m_);
  x_phi_ = Mat(n_, n_ + m_);
  x_sq_.assign(n_, 0.0);
}

void History::append(std::span<const double> u, std::span<const double> x_next) {
  if (u.size() != m_ || x_next.size() != n_) throw Error(ErrorKind::DimensionMismatch, "History::append");
  const std::size_t p = n_ + m_;
  double phi[64];
  double* ph = phi;
  Vec heap;
  if (p > 64) {
    heap.resize(p);
    ph = heap.data();
  }
  for (std::size_t i = 0; i < n_; ++i) ph[i] = last_state_[i];
  for (std::size_t i = 0; i < m_; ++i) ph[n_ + i] = u[i];
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) phi_phi_(i, j) += ph[i] * ph[j];
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t j = 0; j < p; ++j) x_phi_(r, j) += x_next[r] * ph[j];
    x_sq_[r] += x_next[r] * x_next[r];
  }
  last_state_.assign(x_next.begin(), x_next.end());
  if (keep_series_) {
    inputs_.emplace_back(u.begin(), u.end());
    states_.push_back(last_state_);
  }
  ++samples_;
}

History History::recomputed() const {
  if (!keep_series_) throw Error(ErrorKind::InvalidArgument, "History::recomputed needs the stored series");
  History h(n_, m_, true);
  h.reset(states_.front());
  for (std::size_t t = 0; t < inputs_.size(); ++t) h.append(inputs_[t], states_[t + 1]);
  return h;
}

double naive_residual_sum(const History& hist, const Mat& a, const Mat& b) {
  if (!hist.keeps_series()) throw Error(ErrorKind::InvalidArgument, "naive_residual_sum needs the stored series");
  double s = 0.0;
  for (std::size_t t = 1; t < hist.states().size(); ++t) {
    const Vec ax = a * std::span<const double>(hist.states()[t - 1]);
    const Vec bu = b * std::span<const double>(hist.inputs()[t - 1]);
    for (std::size_t i = 0; i < ax.size(); ++i) {
      const double e = hist.states()[t][i] - ax[i] - bu[i];
      s += e * e;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// MuSchedule

double MuSchedule::operator()(std::size_t k) const {
  if (kind == Kind::SqrtLog) return std::sqrt(std::log(static_cast<double>(k) + std::numbers::e));
  double mu = table.empty() ? 0.0 : table.front().second;
  for (const auto& [kj, v] : table) {
    if (kj > k) break;
    mu = v;
  }
  return mu;
}

MuSchedule MuSchedule::custom(std::vector<std::pair<std::size_t, double>> table) {
  if (table.empty()) throw Error(ErrorKind::InvalidArgument, "custom mu table is empty");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!std::isfinite(table[i].second) || table[i].second < 0.0)
      throw Error(ErrorKind::InvalidArgument, "mu values must be finite and nonnegative");
    if (i > 0 && (table[i].first <= table[i - 1].first || table[i].second < table[i - 1].second))
      throw Error(ErrorKind::InvalidArgument, "mu table must be increasing in k and nondecreasing in mu");
  }
  return {Kind::Custom, std::move(table)};
}

// ---------------------------------------------------------------------------
// EstimationProblem

EstimationProblem::EstimationProblem(const PlantFamily& family, const KnownMask& mask, const PlantInstance& truth,
                                     const EstimatorOptions& opts)
    : n_(family.n()), m_(family.m()), base_(n_, n_ + m_), q_(family.q), r_(family.r) {
  if (mask.n != n_ || mask.m != m_) throw Error(ErrorKind::DimensionMismatch, "mask does not match family");
  if (truth.a.rows() != n_ || truth.b.cols() != m_) throw Error(ErrorKind::DimensionMismatch, "truth does not match family");
  for (std::size_t row = 0; row < n_; ++row) {
    for (std::size_t col = 0; col < n_ + m_; ++col) {
      const EntrySpec& e = family.entry(row, col);
      switch (mask.at(row, col)) {
        case EntryClass::ZeroByGraph:
          break;
        case EntryClass::Known:
          base_(row, col) = e.kind == EntrySpec::Kind::Fixed ? e.value
                            : col < n_                       ? truth.a(row, col)
                                                             : truth.b(row, col - n_);
          break;
        case EntryClass::Free:
          if (e.kind != EntrySpec::Kind::Free) throw Error(ErrorKind::InvalidArgument, "mask marks a non-box entry Free");
          coords_.emplace_back(row, col);
          lo_.push_back(e.lo);
          hi_.push_back(e.hi);
          break;
      }
    }
  }
  q_pd_ = is_positive_definite(q_);

  const std::size_t d = coords_.size();
  const std::size_t per_axis = opts.grid_points_per_axis;
  if (d > 0 && d <= opts.grid_max_dim && per_axis >= 2) {
    std::size_t total = 1;
    for (std::size_t j = 0; j < d; ++j) total *= per_axis;
    grid_.reserve(total);
    grid_trace_x_.reserve(total);
    Vec theta(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (std::size_t j = d; j-- > 0;) {
        const std::size_t g = rem % per_axis;
        rem /= per_axis;
        theta[j] = lo_[j] + (hi_[j] - lo_[j]) * static_cast<double>(g) / static_cast<double>(per_axis - 1);
      }
      grid_.push_back(theta);
      grid_trace_x_.push_back(trace_x(theta));
    }
  }
}

Vec EstimationProblem::midpoint() const {
  Vec mid(dim());
  for (std::size_t j = 0; j < dim(); ++j) mid[j] = 0.5 * (lo_[j] + hi_[j]);
  return mid;
}

Vec EstimationProblem::clamp(Vec theta) const {
  for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = std::clamp(theta[j], lo_[j], hi_[j]);
  return theta;
}

std::pair<Mat, Mat> EstimationProblem::assemble(std::span<const double> theta) const {
  if (theta.size() != dim()) throw Error(ErrorKind::DimensionMismatch, "theta has the wrong length");
  Mat a(n_, n_);
  Mat b(n_, m_);
  for (std::size_t row = 0; row < n_; ++row) {
    for (std::size_t col = 0; col < n_; ++col) a(row, col) = base_(row, col);
    for (std::size_t col = 0; col < m_; ++col) b(row, col) = base_(row, n_ + col);
  }
  for (std::size_t j = 0; j < dim(); ++j) {
    const auto [row, col] = coords_[j];
    (col < n_ ? a(row, col) : b(row, col - n_)) = theta[j];
  }
  return {std::move(a), std::move(b)};
}

Vec EstimationProblem::theta_of(const Mat& a, const Mat& b) const {
  Vec theta(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    const auto [row, col] = coords_[j];
    theta[j] = col < n_ ? a(row, col) : b(row, col - n_);
  }
  return theta;
}

double EstimationProblem::trace_x(std::span<const double> theta) const { return trace_x(theta, nullptr); }

double EstimationProblem::trace_x(std::span<const double> theta, Mat* warm) const {
  const auto [a, b] = assemble(theta);
  DareOptions opts;
  // With Q ≻ 0 a converged iteration is the stabilizing solution; divergence
  // flags unstabilizable points, so the PBH precheck can be skipped.
  opts.check = !q_pd_;
  // Inside the search the objective is compared at ~1e-9 relative spread; a
  // tighter Riccati tolerance there only adds iterations.
  if (warm != nullptr) opts.tol = 1e-9;
  // Warm starts are only sound when the precheck is skipped for that reason.
  if (warm != nullptr && q_pd_ && !warm->empty()) opts.initial = warm;
  try {
    DareSolution sol = solve_dare(a, b, q_, r_, opts);
    const double tx = sol.x.trace();
    if (warm != nullptr) *warm = std::move(sol.x);
    return tx;
  } catch (const Error&) {
    return kInf;
  }
}

double EstimationProblem::Quadratic::operator()(std::span<const double> theta) const {
  double v = c;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    v += 2.0 * g[i] * theta[i];
    double hi = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) hi += h(i, j) * theta[j];
    v += theta[i] * hi;
  }
  return v;
}

EstimationProblem::Quadratic EstimationProblem::residual_quadratic(const History& hist) const {
  if (hist.n() != n_ || hist.m() != m_) throw Error(ErrorKind::DimensionMismatch, "history does not match problem");
  const std::size_t p = n_ + m_;
  const Mat& s = hist.phi_phi();
  const Mat& cx = hist.x_phi();
  Quadratic quad{Mat(dim(), dim()), Vec(dim(), 0.0), 0.0};

  // Row r contributes Σ (x_r(t+1) − Θ_r φ(t))² = xsq_r − 2Θ_r·C_r + Θ_r S Θ_rᵀ.
  for (std::size_t r = 0; r < n_; ++r) {
    double base_s_base = 0.0;
    double base_c = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      base_c += base_(r, i) * cx(r, i);
      double si = 0.0;
      for (std::size_t j = 0; j < p; ++j) si += s(i, j) * base_(r, j);
      base_s_base += base_(r, i) * si;
    }
    quad.c += hist.x_sq()[r] - 2.0 * base_c + base_s_base;
  }
  for (std::size_t a = 0; a < dim(); ++a) {
    const auto [ra, ca] = coords_[a];
    double base_s = 0.0;
    for (std::size_t j = 0; j < p; ++j) base_s += base_(ra, j) * s(j, ca);
    quad.g[a] = base_s - cx(ra, ca);
    for (std::size_t b = 0; b < dim(); ++b) {
      const auto [rb, cb] = coords_[b];
      quad.h(a, b) = ra == rb ? s(ca, cb) : 0.0;
    }
  }
  return quad;
}

// ---------------------------------------------------------------------------
// Objective and solvers

double cbml_objective(std::span<const double> theta, const EstimationProblem& problem, double mu_k,
                      const History& hist) {
  const double tx = problem.trace_x(theta);
  if (!std::isfinite(tx)) return kInf;
  return mu_k * tx + problem.residual_quadratic(hist)(theta);
}

Vec pure_ls_start(const EstimationProblem& problem, const History& hist) {
  const std::size_t d = problem.dim();
  Vec theta = problem.midpoint();
  if (d == 0 || hist.samples() == 0) return theta;
  const auto quad = problem.residual_quadratic(hist);

  double hmax = 0.0;
  for (std::size_t j = 0; j < d; ++j) hmax = std::max(hmax, std::abs(quad.h(j, j)));
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < d; ++j)
    if (quad.h(j, j) > 1e-14 * hmax) active.push_back(j);

  // Normal equations on the excited coordinates, inactive ones held at the midpoint.
  const std::size_t na = active.size();
  if (na > 0) {
    Mat ha(na, na);
    Vec rhs(na);
    for (std::size_t a = 0; a < na; ++a) {
      double v = -quad.g[active[a]];
      for (std::size_t j = 0; j < d; ++j)
        if (std::find(active.begin(), active.end(), j) == active.end()) v -= quad.h(active[a], j) * theta[j];
      rhs[a] = v;
      for (std::size_t b = 0; b < na; ++b) ha(a, b) = quad.h(active[a], active[b]);
    }
    const SymEigen es = sym_eigen(ha);
    const double lmax = es.values.back();
    Vec sol(na, 0.0);
    for (std::size_t k = 0; k < na; ++k) {
      const double lam = es.values[k];
      if (!(lam > 1e-12 * lmax)) continue;
      double proj = 0.0;
      for (std::size_t i = 0; i < na; ++i) proj += es.vectors(i, k) * rhs[i];
      for (std::size_t i = 0; i < na; ++i) sol[i] += es.vectors(i, k) * proj / lam;
    }
    for (std::size_t a = 0; a < na; ++a) theta[active[a]] = sol[a];
  }
  return problem.clamp(std::move(theta));
}

LocalEstimate initial_estimate(const EstimationProblem& problem) {
  LocalEstimate est;
  est.theta = problem.midpoint();
  std::tie(est.a_hat, est.b_hat) = problem.assemble(est.theta);
  est.objective = problem.trace_x(est.theta);
  return est;
}

LocalEstimate cbml_minimize(const EstimationProblem& problem, double mu_k, const History& hist,
                            const LocalEstimate* warm_start, std::uint64_t rng_seed, const EstimatorOptions& opts) {
  const std::size_t d = problem.dim();
  const auto quad = problem.residual_quadratic(hist);
  auto objective = [&](std::span<const double> theta) {
    const double tx = problem.trace_x(theta);
    if (!std::isfinite(tx)) return kInf;
    return mu_k * tx + quad(theta);
  };
  // Each run carries its own Riccati warm start: simplex points are close, so
  // the iteration restarts from the last solution instead of from Q.
  auto run_objective = [&](Mat& warm) {
    return [&](std::span<const double> theta) {
      const double tx = problem.trace_x(theta, &warm);
      if (!std::isfinite(tx)) return kInf;
      return mu_k * tx + quad(theta);
    };
  };

  LocalEstimate out;
  if (d == 0) {
    out.objective = objective(out.theta);
    if (!std::isfinite(out.objective)) throw Error(ErrorKind::AllStartsInfeasible, "fully known model is infeasible");
    std::tie(out.a_hat, out.b_hat) = problem.assemble(out.theta);
    out.report.starts_used = 1;
    return out;
  }

  std::vector<Vec> starts;
  starts.push_back(warm_start && warm_start->theta.size() == d ? problem.clamp(warm_start->theta) : problem.midpoint());
  starts.push_back(pure_ls_start(problem, hist));
  starts.push_back(problem.midpoint());
  std::mt19937_64 rng(rng_seed);
  for (std::size_t s = 0; s < opts.random_starts; ++s) {
    Vec theta(d);
    for (std::size_t j = 0; j < d; ++j)
      theta[j] = std::uniform_real_distribution<double>(problem.lo()[j], problem.hi()[j])(rng);
    starts.push_back(std::move(theta));
  }
  if (!problem.grid().empty()) {
    std::size_t best = 0;
    double best_f = kInf;
    for (std::size_t g = 0; g < problem.grid().size(); ++g) {
      const double tx = problem.grid_trace_x()[g];
      if (!std::isfinite(tx)) continue;
      const double f = mu_k * tx + quad(problem.grid()[g]);
      if (f < best_f) {
        best_f = f;
        best = g;
      }
    }
    if (std::isfinite(best_f)) starts.push_back(problem.grid()[best]);
  }

  // Identical starts share one run.
  const std::size_t n_starts = starts.size();
  std::vector<std::size_t> source(n_starts);
  for (std::size_t s = 0; s < n_starts; ++s) {
    source[s] = s;
    for (std::size_t t = 0; t < s; ++t)
      if (starts[t] == starts[s]) {
        source[s] = t;
        break;
      }
  }

  std::vector<NelderMeadResult> runs(n_starts);
  const long long n_runs = static_cast<long long>(n_starts);
#pragma omp parallel for schedule(dynamic) if (opts.parallel_starts)
  for (long long s = 0; s < n_runs; ++s) {
    const auto su = static_cast<std::size_t>(s);
    if (source[su] != su) continue;
    Mat warm;
    runs[su] = nelder_mead_box(run_objective(warm), starts[su], problem.lo(), problem.hi(), opts.nelder_mead);
  }

  std::size_t best = 0;
  std::size_t iterations = 0;
  for (std::size_t s = 0; s < n_starts; ++s) {
    if (source[s] != s) continue;
    iterations += runs[s].iterations;
    if (runs[s].f < runs[best].f) best = s;
  }
  const double fmin = runs[best].f;
  if (!std::isfinite(fmin)) throw Error(ErrorKind::AllStartsInfeasible, "every start is infeasible");
  if (best != 0 && runs[0].f <= fmin + 1e-12 * std::max(1.0, std::abs(fmin))) best = 0;

  out.theta = runs[best].x;
  out.objective = runs[best].f;
  std::tie(out.a_hat, out.b_hat) = problem.assemble(out.theta);
  out.report = {n_starts, best, iterations};
  return out;
}

}  // namespace adaptlqr
