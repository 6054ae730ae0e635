#pragma once

// Dense linear algebra used by every other module: a row-major matrix type,
// one-sided Jacobi SVD, Householder QR, null vectors and power iteration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liesym/error.hpp"
#include "liesym/rng.hpp"

namespace liesym {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, Vector row_major)
      : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    if (data_.size() != rows_ * cols_)
      throw InputError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

inline double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

/// y = A x
inline Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

/// x = A^T y
inline Vector multiply_transposed(const DenseMatrix& a, std::span<const double> y) {
  Vector x(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) x[j] += r[j] * yi;
  }
  return x;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InputError("matrix product dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

struct SvdResult {
  DenseMatrix u;   // m x k, k = min(m, n)
  Vector sigma;    // k values, nonincreasing
  DenseMatrix vt;  // k x n
};

namespace detail {

// Hestenes one-sided Jacobi for m >= n. Columns are stored contiguously.
inline SvdResult jacobi_svd_tall(const DenseMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<Vector> w(n, Vector(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) w[j][i] = a(i, j);
  std::vector<Vector> v(n, Vector(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  const double tol = std::numeric_limits<double>::epsilon() * std::sqrt(static_cast<double>(m));
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(w[p], w[p]);
        const double beta = dot(w[q], w[q]);
        const double gamma = dot(w[p], w[q]);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w[p][i];
          const double wq = w[q][i];
          w[p][i] = c * wp - s * wq;
          w[q][i] = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i];
          const double vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(w[j]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult r{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    r.sigma[k] = norms[j];
    for (std::size_t i = 0; i < n; ++i) r.vt(k, i) = v[j][i];
    if (norms[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) r.u(i, k) = w[j][i] / norms[j];
      filled[k] = true;
    }
  }
  // Zero singular values leave U columns undetermined; complete them to an
  // orthonormal set with Gram-Schmidt on the standard basis.
  std::size_t next_basis = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    while (next_basis < m) {
      Vector e(m, 0.0);
      e[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t c = 0; c < n; ++c) {
          if (!filled[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += r.u(i, c) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= proj * r.u(i, c);
        }
      const double ne = norm2(e);
      if (ne > 0.5) {
        for (std::size_t i = 0; i < m; ++i) r.u(i, k) = e[i] / ne;
        filled[k] = true;
        break;
      }
    }
  }
  return r;
}

// First clearly nonzero component of every right singular vector is positive.
inline void normalize_signs(SvdResult& r) {
  for (std::size_t k = 0; k < r.vt.rows(); ++k) {
    const auto row = r.vt.row(k);
    double scale = 0.0;
    for (double x : row) scale = std::max(scale, std::abs(x));
    for (double x : row) {
      if (std::abs(x) <= 1e-12 * scale) continue;
      if (x < 0.0) {
        for (double& y : r.vt.row(k)) y = -y;
        for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, k) = -r.u(i, k);
      }
      break;
    }
  }
}

}  // namespace detail

inline void require_finite(const DenseMatrix& a, const char* what) {
  if (!a.all_finite()) throw InputError(std::string(what) + ": matrix has non-finite entries");
}

/// Thin SVD. Deterministic; ties in sigma keep the Jacobi column order.
inline SvdResult svd(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw InputError("svd: empty matrix");
  require_finite(a, "svd");
  SvdResult r;
  if (a.rows() >= a.cols()) {
    r = detail::jacobi_svd_tall(a);
  } else {
    SvdResult t = detail::jacobi_svd_tall(a.transposed());
    r.u = t.vt.transposed();
    r.sigma = std::move(t.sigma);
    r.vt = t.u.transposed();
  }
  detail::normalize_signs(r);
  return r;
}

inline Vector singular_values(const DenseMatrix& a) { return svd(a).sigma; }

/// Right singular vector of the smallest singular value (unit norm, first
/// nonzero entry positive). Wide matrices are padded with zero rows.
inline Vector null_vector(const DenseMatrix& a) {
  if (a.cols() < 2) throw InputError("null_vector: need at least 2 columns");
  const DenseMatrix* src = &a;
  DenseMatrix padded;
  if (a.rows() < a.cols()) {
    padded = DenseMatrix(a.cols(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) padded(i, j) = a(i, j);
    src = &padded;
  }
  const SvdResult r = svd(*src);
  const auto last = r.vt.row(r.vt.rows() - 1);
  return Vector(last.begin(), last.end());
}

/// lambda_max(A^T A) by power iteration from a fixed seed.
inline double spectral_norm_sq(const DenseMatrix& a, int max_iterations = 20000) {
  require_finite(a, "spectral_norm_sq");
  if (a.empty() || frobenius_norm(a) == 0.0) return 0.0;
  Rng rng(0x5eedULL);
  Vector v(a.cols());
  for (double& x : v) x = rng.normal();
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  double lambda = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector w = multiply_transposed(a, multiply(a, v));
    lambda = std::max(lambda, dot(v, w));
    const double nw = norm2(w);
    if (nw == 0.0) return lambda;
    // Residual of the eigen-equation bounds the Rayleigh quotient error.
    double res = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) res += (w[i] - lambda * v[i]) * (w[i] - lambda * v[i]);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = w[i] / nw;
    if (std::sqrt(res) <= 1e-9 * lambda) break;
  }
  const Vector w = multiply_transposed(a, multiply(a, v));
  return std::max(lambda, dot(v, w));
}

/// Householder QR. Returns the min(m,n) x n upper-triangular factor and, if
/// rhs is given, overwrites it with Q^T rhs.
inline DenseMatrix qr_r_factor(const DenseMatrix& a, Vector* rhs = nullptr) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix w = a;
  const std::size_t k = std::min(m, n);
  Vector hv(m);
  for (std::size_t j = 0; j < k; ++j) {
    double alpha = 0.0;
    for (std::size_t i = j; i < m; ++i) alpha += w(i, j) * w(i, j);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (w(j, j) > 0.0) alpha = -alpha;
    for (std::size_t i = j; i < m; ++i) hv[i] = w(i, j);
    hv[j] -= alpha;
    double hn = 0.0;
    for (std::size_t i = j; i < m; ++i) hn += hv[i] * hv[i];
    if (hn == 0.0) continue;
    for (std::size_t c = j; c < n; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += hv[i] * w(i, c);
      s = 2.0 * s / hn;
      for (std::size_t i = j; i < m; ++i) w(i, c) -= s * hv[i];
    }
    if (rhs) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += hv[i] * (*rhs)[i];
      s = 2.0 * s / hn;
      for (std::size_t i = j; i < m; ++i) (*rhs)[i] -= s * hv[i];
    }
  }
  DenseMatrix r(k, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < n; ++j) r(i, j) = w(i, j);
  return r;
}

struct LeastSquaresResult {
  Vector x;
  bool rank_deficient = false;
  double condition = 0.0;  // sigma_max / sigma_min of A
};

/// Minimum-norm least squares via QR followed by an SVD of the small factor.
/// Singular values below rcond * sigma_max are treated as zero.
inline LeastSquaresResult least_squares(const DenseMatrix& a, std::span<const double> y,
                                        double rcond = 1e-10) {
  if (a.rows() < a.cols()) throw InputError("least_squares: fewer rows than unknowns");
  Vector qty(y.begin(), y.end());
  const DenseMatrix r = qr_r_factor(a, &qty);
  const SvdResult s = svd(r);
  const std::size_t n = a.cols();
  LeastSquaresResult out{Vector(n, 0.0)};
  const double smax = s.sigma.front();
  const double smin = s.sigma.back();
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (s.sigma[k] <= rcond * smax || s.sigma[k] == 0.0) {
      out.rank_deficient = true;
      continue;
    }
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += s.u(i, k) * qty[i];
    c /= s.sigma[k];
    for (std::size_t j = 0; j < n; ++j) out.x[j] += c * s.vt(k, j);
  }
  return out;
}

}  // namespace liesym
