#include "adaptlqr/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace adaptlqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void clamp_into(Vec& x, std::span<const double> lo, std::span<const double> hi) {
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], lo[j], hi[j]);
}

}  // namespace

NelderMeadResult nelder_mead_box(const Objective& f, Vec x0, std::span<const double> lo,
                                 std::span<const double> hi, const NelderMeadOptions& opts) {
  const std::size_t d = x0.size();
  NelderMeadResult res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
  };

  clamp_into(x0, lo, hi);
  if (d == 0) {
    res.f = eval(x0);
    res.x = std::move(x0);
    return res;
  }

  std::vector<Vec> simplex(d + 1, x0);
  std::vector<double> fv(d + 1);
  fv[0] = eval(simplex[0]);
  for (std::size_t j = 0; j < d; ++j) {
    const double step = opts.initial_step * (hi[j] - lo[j]);
    Vec& v = simplex[j + 1];
    v[j] = x0[j] + step <= hi[j] ? x0[j] + step : x0[j] - step;
    clamp_into(v, lo, hi);
    fv[j + 1] = eval(v);
  }

  std::vector<std::size_t> order(d + 1);
  Vec centroid(d), xr(d), xe(d), xc(d);
  for (; res.iterations < opts.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[d - 1];

    if (!std::isfinite(fv[best])) break;
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] <= opts.ftol * std::max(1.0, std::abs(fv[best]))) break;
    double diameter = 0.0;
    for (std::size_t k = 0; k <= d; ++k)
      for (std::size_t j = 0; j < d; ++j) diameter = std::max(diameter, std::abs(simplex[k][j] - simplex[best][j]));
    if (diameter <= 1e-15) break;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[order[k]][j];
    for (double& c : centroid) c /= static_cast<double>(d);

    for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    clamp_into(xr, lo, hi);
    const double fr = eval(xr);

    if (fr < fv[best]) {
      for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + 2.0 * (xr[j] - centroid[j]);
      clamp_into(xe, lo, hi);
      const double fe = eval(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }

    bool accepted = false;
    if (fr < fv[worst]) {
      for (std::size_t j = 0; j < d; ++j) xc[j] = centroid[j] + 0.5 * (xr[j] - centroid[j]);
      const double fc = eval(xc);
      if (fc <= fr) {
        simplex[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) xc[j] = centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
      const double fc = eval(xc);
      if (fc < fv[worst]) {
        simplex[worst] = xc;
        fv[worst] = fc;
        accepted = true;
      }
    }
    if (!accepted) {
      for (std::size_t k = 0; k <= d; ++k) {
        if (k == best) continue;
        for (std::size_t j = 0; j < d; ++j) simplex[k][j] = simplex[best][j] + 0.5 * (simplex[k][j] - simplex[best][j]);
        fv[k] = eval(simplex[k]);
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k <= d; ++k)
    if (fv[k] < fv[best]) best = k;
  res.x = simplex[best];
  res.f = fv[best];
  return res;
}

}  // namespace adaptlqr
