#include "adaptlqr/matlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace adaptlqr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotSquare: return "NotSquare";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::SingularR: return "SingularR";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotStabilizable: return "NotStabilizable";
    case ErrorKind::NotDetectable: return "NotDetectable";
    case ErrorKind::RejectionLimitExceeded: return "RejectionLimitExceeded";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorKind::AllStartsInfeasible: return "AllStartsInfeasible";
    case ErrorKind::EstimateInfeasible: return "EstimateInfeasible";
    case ErrorKind::WrongFamily: return "WrongFamily";
    case ErrorKind::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorKind::NumericOverflow: return "NumericOverflow";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void require_square(const Mat& a, const char* op) {
  if (!a.is_square()) throw Error(ErrorKind::NotSquare, op);
}

}  // namespace

// ---------------------------------------------------------------------------
// Mat

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  a_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged initializer");
    a_.insert(a_.end(), r.begin(), r.end());
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(std::span<const double> d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Mat Mat::column(std::span<const double> v) {
  Mat m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.a_.begin());
  return m;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_) throw Error(ErrorKind::IndexOutOfRange, "block");
  Mat b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat& b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) throw Error(ErrorKind::IndexOutOfRange, "set_block");
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

double Mat::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double Mat::frobenius_norm() const {
  double s = 0.0;
  for (double v : a_) s += v * v;
  return std::sqrt(s);
}

double Mat::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

bool Mat::all_finite() const {
  return std::all_of(a_.begin(), a_.end(), [](double v) { return std::isfinite(v); });
}

Mat& Mat::operator+=(const Mat& b) {
  require_same_shape(*this, b, "operator+");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += b.a_[i];
  return *this;
}

Mat& Mat::operator-=(const Mat& b) {
  require_same_shape(*this, b, "operator-");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= b.a_[i];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "operator*");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vec operator*(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Mat transpose_mul(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "transpose_mul");
  Mat c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

Mat hstack(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "hstack");
  Mat c(a.rows(), a.cols() + b.cols());
  c.set_block(0, 0, a);
  c.set_block(0, a.cols(), b);
  return c;
}

Mat vstack(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::DimensionMismatch, "vstack");
  Mat c(a.rows() + b.rows(), a.cols());
  c.set_block(0, 0, a);
  c.set_block(a.rows(), 0, b);
  return c;
}

Mat symmetrized(const Mat& a) {
  require_square(a, "symmetrized");
  Mat s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool is_symmetric(const Mat& a, double rel_tol) {
  if (!a.is_square()) return false;
  const double scale = std::max(1.0, a.max_abs());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

bool is_positive_definite(const Mat& a) {
  if (!a.is_square()) return false;
  const std::size_t n = a.rows();
  Mat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

Mat solve(const Mat& a, const Mat& b) {
  require_square(a, "solve");
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "solve");
  const std::size_t n = a.rows();
  Mat lu = a;
  Mat x = b;
  const double scale = a.max_abs();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (!(std::abs(lu(piv, k)) > 1e-14 * scale)) throw Error(ErrorKind::Singular, "solve: singular matrix");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = x(kk, j);
      for (std::size_t c = kk + 1; c < n; ++c) s -= lu(kk, c) * x(c, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

Mat inverse(const Mat& a) { return solve(a, Mat::identity(a.rows())); }

// ---------------------------------------------------------------------------
// Eigenvalues

SymEigen sym_eigen(const Mat& input) {
  require_square(input, "sym_eigen");
  const std::size_t n = input.rows();
  Mat a = symmetrized(input);
  Mat v = Mat::identity(n);

  const double total = a.frobenius_norm();
  for (int sweep = 0; sweep < 100 && total > 0.0; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-17 * total) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymEigen out{Vec(n), Mat(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

namespace {

Mat spectral_function(const Mat& a, double (*fn)(double), bool allow_zero) {
  const SymEigen es = sym_eigen(a);
  const double scale = std::max(1e-300, std::abs(es.values.empty() ? 0.0 : es.values.back()));
  const std::size_t n = a.rows();
  Mat out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    double lam = es.values[k];
    if (lam < 0.0) {
      if (allow_zero && lam >= -1e-10 * scale) {
        lam = 0.0;
      } else {
        throw Error(ErrorKind::NotPositiveDefinite, "negative eigenvalue " + std::to_string(lam));
      }
    }
    if (!allow_zero && !(lam > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "zero eigenvalue");
    const double f = fn(lam);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out(i, j) += f * es.vectors(i, k) * es.vectors(j, k);
  }
  return out;
}

double sqrt_fn(double x) { return std::sqrt(x); }
double inv_sqrt_fn(double x) { return 1.0 / std::sqrt(x); }

// Householder reduction to upper Hessenberg form, in place.
void hessenberg(Mat& h) {
  const std::size_t n = h.rows();
  if (n < 3) return;
  Vec v(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double xnorm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) xnorm += h(i, k) * h(i, k);
    xnorm = std::sqrt(xnorm);
    if (xnorm == 0.0) continue;
    const double alpha = h(k + 1, k) > 0.0 ? -xnorm : xnorm;
    const std::size_t len = n - k - 1;
    for (std::size_t i = 0; i < len; ++i) v[i] = h(k + 1 + i, k);
    v[0] -= alpha;
    double vtv = 0.0;
    for (std::size_t i = 0; i < len; ++i) vtv += v[i] * v[i];
    if (vtv == 0.0) continue;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += v[i] * h(k + 1 + i, j);
      s *= 2.0 / vtv;
      for (std::size_t i = 0; i < len; ++i) h(k + 1 + i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < len; ++j) s += h(i, k + 1 + j) * v[j];
      s *= 2.0 / vtv;
      for (std::size_t j = 0; j < len; ++j) h(i, k + 1 + j) -= s * v[j];
    }
    h(k + 1, k) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr layout).
std::vector<std::complex<double>> hessenberg_qr(Mat a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::complex<double>> wri(static_cast<std::size_t>(n));
  const double eps = std::numeric_limits<double>::epsilon();
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        wri[nn--] = x + t;
      } else {
        double y = a(nn - 1, nn - 1);
        double w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wri[nn - 1] = wri[nn] = x + z;
            if (z != 0.0) wri[nn] = x - w / z;
          } else {
            wri[nn] = std::complex<double>(x + p, -z);
            wri[nn - 1] = std::conj(wri[nn]);
          }
          nn -= 2;
        } else {
          if (its == 60) throw Error(ErrorKind::NonConvergence, "eigenvalue QR iteration");
          if (its == 10 || its == 20 || its == 40) {
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m;
          double p = 0, q = 0, r = 0, z;
          for (m = nn - 2; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l + 1 < nn);
  }
  return wri;
}

}  // namespace

Mat sqrt_psd(const Mat& a) { return spectral_function(a, sqrt_fn, true); }

Mat inv_sqrt_pd(const Mat& a) { return spectral_function(a, inv_sqrt_fn, false); }

std::vector<std::complex<double>> eigenvalues(const Mat& a) {
  require_square(a, "eigenvalues");
  if (!a.all_finite()) throw Error(ErrorKind::InvalidArgument, "eigenvalues: non-finite entry");
  if (a.rows() == 0) return {};
  Mat h = a;
  hessenberg(h);
  return hessenberg_qr(std::move(h));
}

double spectral_radius(const Mat& m) {
  require_square(m, "spectral_radius");
  double r = 0.0;
  for (const auto& lam : eigenvalues(m)) r = std::max(r, std::abs(lam));
  return r;
}

double spectral_norm(const Mat& m) {
  if (m.empty()) return 0.0;
  const Mat g = m.rows() < m.cols() ? m * m.transpose() : transpose_mul(m, m);
  const SymEigen es = sym_eigen(g);
  return std::sqrt(std::max(0.0, es.values.back()));
}

// ---------------------------------------------------------------------------
// LQR kernels

namespace {

bool pbh_full_rank(const Mat& a, const Mat& b, std::complex<double> lam) {
  const std::size_t n = a.rows();
  const double alpha = lam.real();
  const double beta = lam.imag();
  Mat d = a;
  for (std::size_t i = 0; i < n; ++i) d(i, i) -= alpha;
  // [D − iβI, B][D − iβI, B]ᴴ = (DDᵀ + β²I + BBᵀ) + i·β(D − Dᵀ)
  Mat re = d * d.transpose() + b * b.transpose();
  for (std::size_t i = 0; i < n; ++i) re(i, i) += beta * beta;
  Mat im = beta * (d - d.transpose());
  Mat emb(2 * n, 2 * n);
  emb.set_block(0, 0, re);
  emb.set_block(n, n, re);
  emb.set_block(0, n, -1.0 * im);
  emb.set_block(n, 0, im);
  const SymEigen es = sym_eigen(emb);
  const double smax = std::sqrt(std::max(0.0, es.values.back()));
  const double smin = std::sqrt(std::max(0.0, es.values.front()));
  return smin > 1e-8 * smax;
}

}  // namespace

bool pbh_stabilizable(const Mat& a, const Mat& b) {
  require_square(a, "pbh_stabilizable");
  if (b.rows() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "pbh_stabilizable");
  for (const auto& lam : eigenvalues(a)) {
    if (std::abs(lam) < 1.0 - 1e-10) continue;
    if (!pbh_full_rank(a, b, lam)) return false;
  }
  return true;
}

StabDetect stab_detect_check(const Mat& a, const Mat& b, const Mat& q) {
  require_square(a, "stab_detect_check");
  if (q.rows() != a.rows() || q.cols() != a.cols())
    throw Error(ErrorKind::DimensionMismatch, "stab_detect_check: q");
  StabDetect out;
  out.stabilizable = pbh_stabilizable(a, b);
  out.detectable = pbh_stabilizable(a.transpose(), sqrt_psd(q));
  return out;
}

Mat riccati_map(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& x) {
  const Mat btx = transpose_mul(b, x);
  const Mat s = btx * b + r;
  const Mat g = btx * a;
  return transpose_mul(a, x * a) - transpose_mul(g, solve(s, g)) + q;
}

namespace {

constexpr std::size_t kDareMax = 16;

// One Riccati step on raw row-major arrays. Writes next = AᵀXA − Gᵀ(S⁻¹G) + Q
// and kt = S⁻¹G with S = BᵀXB + R, G = BᵀXA. Returns false if S is not PD.
// N, M > 0 fix the dimensions at compile time so the small cases unroll.
template <std::size_t N, std::size_t M>
bool riccati_step(const double* a, const double* b, const double* q, const double* r, std::size_t n_rt,
                  std::size_t m_rt, const double* x, double* next, double* kt) {
  const std::size_t n = N > 0 ? N : n_rt;
  const std::size_t m = M > 0 ? M : m_rt;
  double xa[kDareMax * kDareMax];
  double xb[kDareMax * kDareMax];
  double s[kDareMax * kDareMax];
  double g[kDareMax * kDareMax];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t l = 0; l < n; ++l) v += x[i * n + l] * a[l * n + j];
      xa[i * n + j] = v;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      for (std::size_t l = 0; l < n; ++l) v += x[i * n + l] * b[l * m + j];
      xb[i * m + j] = v;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double v = r[i * m + j];
      for (std::size_t l = 0; l < n; ++l) v += b[l * m + i] * xb[l * m + j];
      s[i * m + j] = v;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t l = 0; l < n; ++l) v += b[l * m + i] * xa[l * n + j];
      g[i * n + j] = v;
    }
  }
  // Cholesky S = LLᵀ in place (lower triangle), then kt = S⁻¹G.
  double smax = 0.0;
  for (std::size_t i = 0; i < m; ++i) smax = std::max(smax, std::abs(s[i * m + i]));
  for (std::size_t j = 0; j < m; ++j) {
    double d = s[j * m + j];
    for (std::size_t l = 0; l < j; ++l) d -= s[j * m + l] * s[j * m + l];
    if (!(d > 1e-14 * smax)) return false;
    d = std::sqrt(d);
    s[j * m + j] = d;
    for (std::size_t i = j + 1; i < m; ++i) {
      double v = s[i * m + j];
      for (std::size_t l = 0; l < j; ++l) v -= s[i * m + l] * s[j * m + l];
      s[i * m + j] = v / d;
    }
  }
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      double v = g[i * n + c];
      for (std::size_t l = 0; l < i; ++l) v -= s[i * m + l] * kt[l * n + c];
      kt[i * n + c] = v / s[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
      double v = kt[i * n + c];
      for (std::size_t l = i + 1; l < m; ++l) v -= s[l * m + i] * kt[l * n + c];
      kt[i * n + c] = v / s[i * m + i];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = q[i * n + j];
      for (std::size_t l = 0; l < n; ++l) v += a[l * n + i] * xa[l * n + j];
      for (std::size_t l = 0; l < m; ++l) v -= g[l * n + i] * kt[l * n + j];
      next[i * n + j] = v;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) next[i * n + j] = next[j * n + i];
  return true;
}

using RiccatiStep = bool (*)(const double*, const double*, const double*, const double*, std::size_t, std::size_t,
                            const double*, double*, double*);

template <std::size_t N>
RiccatiStep pick_step_m(std::size_t m) {
  switch (m) {
    case 1: return riccati_step<N, 1>;
    case 2: return riccati_step<N, 2>;
    case 3: return riccati_step<N, 3>;
    default: return riccati_step<0, 0>;
  }
}

RiccatiStep pick_step(std::size_t n, std::size_t m) {
  switch (n) {
    case 1: return pick_step_m<1>(m);
    case 2: return pick_step_m<2>(m);
    case 3: return pick_step_m<3>(m);
    case 4: return pick_step_m<4>(m);
    case 5: return pick_step_m<5>(m);
    case 6: return pick_step_m<6>(m);
    default: return riccati_step<0, 0>;
  }
}

}  // namespace

DareSolution solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const DareOptions& opts) {
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  if (!a.is_square()) throw Error(ErrorKind::NotSquare, "solve_dare: a");
  if (b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m)
    throw Error(ErrorKind::DimensionMismatch, "solve_dare");
  if (n > kDareMax || m > kDareMax) throw Error(ErrorKind::InvalidArgument, "solve_dare: n and m are limited to 16");

  if (opts.check) {
    if (!is_symmetric(r) || !is_positive_definite(r)) throw Error(ErrorKind::SingularR, "r must be symmetric PD");
    if (!is_symmetric(q)) throw Error(ErrorKind::InvalidArgument, "q must be symmetric");
    const StabDetect sd = stab_detect_check(a, b, q);  // throws NotPositiveDefinite if q is indefinite
    if (!sd.stabilizable) throw Error(ErrorKind::NotStabilizable, "(a, b) is not stabilizable");
    if (!sd.detectable) throw Error(ErrorKind::NotDetectable, "(a, q^1/2) is not detectable");
  }

  const Mat& start = opts.initial != nullptr ? *opts.initial : q;
  if (start.rows() != n || start.cols() != n) throw Error(ErrorKind::DimensionMismatch, "solve_dare: initial iterate");
  double buf_x[kDareMax * kDareMax];
  double buf_next[kDareMax * kDareMax];
  double kt[kDareMax * kDareMax];
  double* x = buf_x;
  double* next = buf_next;
  std::copy(start.data().begin(), start.data().end(), x);

  const RiccatiStep step = pick_step(n, m);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    if (!step(a.data().data(), b.data().data(), q.data().data(), r.data().data(), n, m, x, next, kt))
      throw Error(ErrorKind::NonConvergence, "solve_dare: bᵀXb + r became singular");
    double xnorm2 = 0.0;
    double diff2 = 0.0;
    double next_max = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) {
      xnorm2 += x[i] * x[i];
      diff2 += (next[i] - x[i]) * (next[i] - x[i]);
      next_max = std::max(next_max, std::abs(next[i]));
    }
    const double residual = std::sqrt(diff2) / std::max(1.0, std::sqrt(xnorm2));
    if (!std::isfinite(residual) || !(next_max <= 1e15))
      throw Error(ErrorKind::NonConvergence, "solve_dare: iteration diverged");
    if (residual <= opts.tol) {
      DareSolution sol{Mat(n, n), Mat(m, n), it, residual};
      std::copy(x, x + n * n, sol.x.data().begin());
      for (std::size_t i = 0; i < m * n; ++i) sol.gain.data()[i] = -kt[i];
      if (opts.check && spectral_radius(a + b * sol.gain) >= 1.0)
        throw Error(ErrorKind::NonConvergence, "solve_dare: solution is not stabilizing");
      return sol;
    }
    std::swap(x, next);
  }
  throw Error(ErrorKind::NonConvergence, "solve_dare: max_iter reached");
}

Mat lqr_gain(const Mat& a, const Mat& b, const Mat& q, const Mat& r) { return solve_dare(a, b, q, r).gain; }

Lemma3Bound lemma3_bound(const Mat& x, const Mat& p, const Mat& y) {
  if (!x.is_square() || !p.is_square() || !y.is_square() || x.rows() != p.rows() || y.rows() != p.rows())
    throw Error(ErrorKind::DimensionMismatch, "lemma3_bound: all matrices must be n x n");
  const Mat lhs = transpose_mul(x, p * x) - transpose_mul(y, p * y);
  return {spectral_norm(lhs), spectral_norm(p) * spectral_norm(x - y) * (spectral_norm(x) + spectral_norm(y))};
}

Mat solve_stein(const Mat& c, const Mat& w, double tol, std::size_t max_iter) {
  require_square(c, "solve_stein");
  if (w.rows() != c.rows() || w.cols() != c.cols()) throw Error(ErrorKind::DimensionMismatch, "solve_stein");
  if (spectral_radius(c) >= 1.0) throw Error(ErrorKind::UnstableClosedLoop, "closed loop spectral radius >= 1");
  Mat sigma = w;
  const Mat ct = c.transpose();
  for (std::size_t it = 0; it < max_iter; ++it) {
    Mat next = c * sigma * ct + w;
    const double change = (next - sigma).frobenius_norm();
    sigma = std::move(next);
    if (change <= tol * std::max(1.0, sigma.frobenius_norm())) return sigma;
  }
  throw Error(ErrorKind::NonConvergence, "solve_stein: max_iter reached");
}

}  // namespace adaptlqr
