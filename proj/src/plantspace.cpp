#include "adaptlqr/plantspace.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace adaptlqr {

std::size_t InfoStructure::n() const { return std::accumulate(state_dims.begin(), state_dims.end(), std::size_t{0}); }
std::size_t InfoStructure::m() const { return std::accumulate(input_dims.begin(), input_dims.end(), std::size_t{0}); }

std::size_t InfoStructure::state_offset(std::size_t i) const {
  return std::accumulate(state_dims.begin(), state_dims.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
}

std::size_t InfoStructure::input_offset(std::size_t i) const {
  return std::accumulate(input_dims.begin(), input_dims.begin() + static_cast<std::ptrdiff_t>(i), std::size_t{0});
}

std::size_t InfoStructure::state_owner(std::size_t row) const {
  std::size_t acc = 0;
  for (std::size_t i = 0; i < state_dims.size(); ++i) {
    acc += state_dims[i];
    if (row < acc) return i;
  }
  throw Error(ErrorKind::IndexOutOfRange, "state row " + std::to_string(row));
}

std::size_t InfoStructure::input_owner(std::size_t col) const {
  std::size_t acc = 0;
  for (std::size_t i = 0; i < input_dims.size(); ++i) {
    acc += input_dims[i];
    if (col < acc) return i;
  }
  throw Error(ErrorKind::IndexOutOfRange, "input column " + std::to_string(col));
}

namespace {

void check_adjacency(const Adjacency& adj, std::size_t n, const char* name) {
  if (adj.size() != n) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be N x N");
  for (const auto& row : adj) {
    if (row.size() != n) throw Error(ErrorKind::InvalidArgument, std::string(name) + " must be N x N");
    for (int v : row)
      if (v != 0 && v != 1) throw Error(ErrorKind::InvalidArgument, std::string(name) + " entries must be 0 or 1");
  }
}

bool graph_zero_a(const InfoStructure& info, std::size_t row, std::size_t col) {
  return info.plant_adj[info.state_owner(row)][info.state_owner(col)] == 0;
}

bool graph_zero_b(const InfoStructure& info, std::size_t row, std::size_t col) {
  return info.plant_adj[info.state_owner(row)][info.input_owner(col)] == 0;
}

}  // namespace

InfoStructure make_info(std::vector<std::size_t> state_dims, std::vector<std::size_t> input_dims,
                        Adjacency plant_adj, Adjacency design_adj, bool self_knowledge) {
  const std::size_t n_sub = state_dims.size();
  if (n_sub == 0) throw Error(ErrorKind::InvalidArgument, "at least one subsystem required");
  if (input_dims.size() != n_sub) throw Error(ErrorKind::InvalidArgument, "input_dims length must equal N");
  for (std::size_t d : state_dims)
    if (d == 0) throw Error(ErrorKind::InvalidArgument, "state dimensions must be positive");
  check_adjacency(plant_adj, n_sub, "plant_adj");
  check_adjacency(design_adj, n_sub, "design_adj");
  if (self_knowledge)
    for (std::size_t i = 0; i < n_sub; ++i) design_adj[i][i] = 1;
  return {std::move(state_dims), std::move(input_dims), std::move(plant_adj), std::move(design_adj)};
}

Adjacency all_ones(std::size_t n) { return Adjacency(n, std::vector<int>(n, 1)); }

Adjacency identity_adj(std::size_t n) {
  Adjacency a(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1;
  return a;
}

PlantInstance make_plant(Mat a, Mat b, Mat q, Mat r, InfoStructure info) {
  const std::size_t n = info.n();
  const std::size_t m = info.m();
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != m || q.rows() != n || q.cols() != n ||
      r.rows() != m || r.cols() != m)
    throw Error(ErrorKind::DimensionMismatch, "plant matrices do not match the subsystem dimensions");
  if (!a.all_finite() || !b.all_finite()) throw Error(ErrorKind::InvalidArgument, "non-finite plant entry");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0 && graph_zero_a(info, i, j))
        throw Error(ErrorKind::InvalidArgument, "A violates the plant graph sparsity");
    for (std::size_t j = 0; j < m; ++j)
      if (b(i, j) != 0.0 && graph_zero_b(info, i, j))
        throw Error(ErrorKind::InvalidArgument, "B violates the plant graph sparsity");
  }
  if (!is_symmetric(r) || !is_positive_definite(r)) throw Error(ErrorKind::SingularR, "R must be symmetric PD");
  if (!is_symmetric(q)) throw Error(ErrorKind::InvalidArgument, "Q must be symmetric");
  const StabDetect sd = stab_detect_check(a, b, q);
  if (!sd.stabilizable) throw Error(ErrorKind::NotStabilizable, "(A, B) is not stabilizable");
  if (!sd.detectable) throw Error(ErrorKind::NotDetectable, "(A, Q^1/2) is not detectable");
  return {std::move(a), std::move(b), std::move(q), std::move(r), std::move(info)};
}

const EntrySpec& PlantFamily::entry(std::size_t row, std::size_t col) const {
  return col < n() ? a_entry(row, col) : b_entry(row, col - n());
}

std::size_t PlantFamily::free_count() const {
  std::size_t c = 0;
  for (const auto& e : a_spec) c += e.kind == EntrySpec::Kind::Free;
  for (const auto& e : b_spec) c += e.kind == EntrySpec::Kind::Free;
  return c;
}

void validate_family(const PlantFamily& f) {
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  if (f.a_spec.size() != n * n) throw Error(ErrorKind::InvalidArgument, "A spec must have n x n entries");
  if (f.b_spec.size() != n * m) throw Error(ErrorKind::InvalidArgument, "B spec must have n x m entries");
  if (f.q.rows() != n || f.q.cols() != n || f.r.rows() != m || f.r.cols() != m)
    throw Error(ErrorKind::InvalidArgument, "Q/R dimensions");
  if (!is_symmetric(f.q)) throw Error(ErrorKind::InvalidArgument, "Q must be symmetric");
  for (double v : sym_eigen(f.q).values)
    if (v < -1e-10 * std::max(1.0, f.q.max_abs())) throw Error(ErrorKind::InvalidArgument, "Q must be PSD");
  if (!is_symmetric(f.r) || !is_positive_definite(f.r)) throw Error(ErrorKind::InvalidArgument, "R must be PD");

  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n + m; ++col) {
      const EntrySpec& e = f.entry(row, col);
      const bool gz = col < n ? graph_zero_a(f.info, row, col) : graph_zero_b(f.info, row, col - n);
      const std::string where = (col < n ? "A(" : "B(") + std::to_string(row) + "," +
                                std::to_string(col < n ? col : col - n) + ")";
      if (gz && e.kind != EntrySpec::Kind::ZeroByGraph)
        throw Error(ErrorKind::InvalidArgument, where + " lies in a graph-zero block and must be zero");
      if (!gz && e.kind == EntrySpec::Kind::ZeroByGraph)
        throw Error(ErrorKind::InvalidArgument, where + " is marked zero-by-graph outside a graph-zero block");
      if (e.kind == EntrySpec::Kind::Free) {
        if (!std::isfinite(e.lo) || !std::isfinite(e.hi)) throw Error(ErrorKind::InvalidArgument, where + " box must be finite");
        if (!(e.lo < e.hi)) throw Error(ErrorKind::InvalidArgument, where + " needs lo < hi");
      }
      if (e.kind == EntrySpec::Kind::Fixed && !std::isfinite(e.value))
        throw Error(ErrorKind::InvalidArgument, where + " fixed value must be finite");
    }
  }
  if (!f.density.is_uniform() && f.density.weights.size() != f.free_count())
    throw Error(ErrorKind::InvalidArgument, "density needs one weight function per free entry");
}

bool family_contains(const PlantFamily& f, const Mat& a, const Mat& b, double tol) {
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != m) return false;
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n + m; ++col) {
      const EntrySpec& e = f.entry(row, col);
      const double v = col < n ? a(row, col) : b(row, col - n);
      switch (e.kind) {
        case EntrySpec::Kind::ZeroByGraph:
          if (v != 0.0) return false;
          break;
        case EntrySpec::Kind::Fixed:
          if (std::abs(v - e.value) > tol) return false;
          break;
        case EntrySpec::Kind::Free:
          if (v < e.lo - tol || v > e.hi + tol) return false;
          break;
      }
    }
  return true;
}

Vec free_values(const PlantFamily& f, const Mat& a, const Mat& b) {
  const std::size_t n = f.n();
  Vec out;
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n + f.m(); ++col)
      if (f.entry(row, col).kind == EntrySpec::Kind::Free) out.push_back(col < n ? a(row, col) : b(row, col - n));
  return out;
}

PlantInstance sample_plant(const PlantFamily& f, std::uint64_t rng_seed) {
  validate_family(f);
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  std::mt19937_64 rng(rng_seed);
  constexpr int kMaxRejections = 1000;
  for (int attempt = 0; attempt <= kMaxRejections; ++attempt) {
    Mat a(n, n);
    Mat b(n, m);
    for (std::size_t row = 0; row < n; ++row)
      for (std::size_t col = 0; col < n + m; ++col) {
        const EntrySpec& e = f.entry(row, col);
        double v = 0.0;
        if (e.kind == EntrySpec::Kind::Fixed) {
          v = e.value;
        } else if (e.kind == EntrySpec::Kind::Free) {
          v = std::uniform_real_distribution<double>(e.lo, e.hi)(rng);
        }
        (col < n ? a(row, col) : b(row, col - n)) = v;
      }
    const StabDetect sd = stab_detect_check(a, b, f.q);
    if (sd.stabilizable && sd.detectable) return {std::move(a), std::move(b), f.q, f.r, f.info};
  }
  throw Error(ErrorKind::RejectionLimitExceeded, "no stabilizable/detectable plant after 1000 rejections");
}

double density_weight(const PlantFamily& f, const PlantInstance& plant) {
  if (f.density.is_uniform()) return 1.0;
  const Vec theta = free_values(f, plant.a, plant.b);
  double w = 1.0;
  for (std::size_t k = 0; k < theta.size(); ++k) w *= f.density.weights[k](theta[k]);
  return w;
}

namespace {

Mat block_diag_transform(const InfoStructure& info, const NoiseModel& noise, bool inverse) {
  const std::size_t n = info.n();
  Mat t = Mat::identity(n);
  if (noise.is_unit()) return t;
  if (noise.covariances.size() != info.n_subsystems())
    throw Error(ErrorKind::DimensionMismatch, "one covariance per subsystem required");
  for (std::size_t i = 0; i < info.n_subsystems(); ++i) {
    const Mat& h = noise.covariances[i];
    if (h.rows() != info.state_dims[i] || h.cols() != info.state_dims[i])
      throw Error(ErrorKind::DimensionMismatch, "covariance " + std::to_string(i));
    if (!is_symmetric(h) || !is_positive_definite(h))
      throw Error(ErrorKind::NotPositiveDefinite, "covariance " + std::to_string(i) + " must be symmetric PD");
    t.set_block(info.state_offset(i), info.state_offset(i), inverse ? inv_sqrt_pd(h) : sqrt_psd(h));
  }
  return t;
}

}  // namespace

Mat noise_sqrt(const InfoStructure& info, const NoiseModel& noise) {
  return block_diag_transform(info, noise, false);
}

PlantInstance whiten(const PlantInstance& p, const NoiseModel& noise) {
  if (noise.is_unit()) return p;
  const Mat half = block_diag_transform(p.info, noise, false);
  const Mat inv_half = block_diag_transform(p.info, noise, true);
  return {inv_half * p.a * half, inv_half * p.b, symmetrized(half * p.q * half), p.r, p.info};
}

PlantInstance unwhiten(const PlantInstance& p, const NoiseModel& noise) {
  if (noise.is_unit()) return p;
  const Mat half = block_diag_transform(p.info, noise, false);
  const Mat inv_half = block_diag_transform(p.info, noise, true);
  return {half * p.a * inv_half, half * p.b, symmetrized(inv_half * p.q * inv_half), p.r, p.info};
}

std::size_t KnownMask::count(EntryClass c) const {
  std::size_t k = 0;
  for (EntryClass e : cls) k += e == c;
  return k;
}

KnownMask known_mask(const PlantFamily& f, std::size_t subsystem) {
  if (subsystem >= f.info.n_subsystems())
    throw Error(ErrorKind::IndexOutOfRange, "subsystem " + std::to_string(subsystem));
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  KnownMask mask{n, m, std::vector<EntryClass>(n * (n + m))};
  for (std::size_t row = 0; row < n; ++row) {
    const bool row_known = f.info.design_adj[subsystem][f.info.state_owner(row)] != 0;
    for (std::size_t col = 0; col < n + m; ++col) {
      const EntrySpec& e = f.entry(row, col);
      EntryClass c = EntryClass::Known;
      if (e.kind == EntrySpec::Kind::ZeroByGraph) {
        c = EntryClass::ZeroByGraph;
      } else if (e.kind == EntrySpec::Kind::Free && !row_known) {
        c = EntryClass::Free;
      }
      mask.cls[row * (n + m) + col] = c;
    }
  }
  return mask;
}

KnownMask centralized_mask(const PlantFamily& f) {
  const std::size_t n = f.n();
  const std::size_t m = f.m();
  KnownMask mask{n, m, std::vector<EntryClass>(n * (n + m))};
  for (std::size_t row = 0; row < n; ++row)
    for (std::size_t col = 0; col < n + m; ++col) {
      const EntrySpec& e = f.entry(row, col);
      mask.cls[row * (n + m) + col] = e.kind == EntrySpec::Kind::ZeroByGraph ? EntryClass::ZeroByGraph
                                      : e.kind == EntrySpec::Kind::Free      ? EntryClass::Free
                                                                             : EntryClass::Known;
    }
  return mask;
}

}  // namespace adaptlqr
