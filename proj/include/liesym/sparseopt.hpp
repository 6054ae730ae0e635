#pragma once

// L1 and nuclear-norm machinery: soft thresholding, Landweber/ISTA with a
// Bregman add-back wrapper, singular value thresholding, and matrix denoising
// through pseudo-random projections of the column-stacked matrix.
//
// Convention: every solver minimises  mu * ||y - A x||^2 + ||x||  (L1 or
// nuclear norm), i.e. ||y - A x||^2 + lambda ||x|| with lambda = 1 / mu. With a
// Landweber step 1/a the per-step shrinkage threshold is 1 / (2 a mu).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liesym/error.hpp"
#include "liesym/linalg.hpp"
#include "liesym/rng.hpp"

namespace liesym {

struct DenoiseConfig {
  double mu = 50.0;               // Lagrange weight on the data term
  std::size_t projections_p = 0;  // 0: min(mn, 4 (m + n) (n - 1))
  double step_a = 0.0;            // 0: 1.01 * lambda_max(A^T A)
  int max_outer = 100;
  int max_inner = 500;
  double tol = 1e-8;
  double eps_rank = 1e-4;
  std::uint64_t seed = 0;
  bool orthonormal_projections = true;

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("denoise config: mu must be > 0");
    if (!(tol > 0.0)) throw InputError("denoise config: tol must be > 0");
    if (!(eps_rank > 0.0)) throw InputError("denoise config: eps_rank must be > 0");
    if (step_a < 0.0) throw InputError("denoise config: step_a must be >= 0 (0 = auto)");
    if (max_outer < 1 || max_inner < 1)
      throw InputError("denoise config: iteration caps must be >= 1");
  }
};

/// Linear measurement y = A x, either a dense matrix or a selection of entries.
class MeasurementOperator {
 public:
  enum class Kind { dense, entry_sampling };

  static MeasurementOperator dense(DenseMatrix a) {
    require_finite(a, "measurement operator");
    MeasurementOperator op;
    op.kind_ = Kind::dense;
    op.in_dim_ = a.cols();
    op.out_dim_ = a.rows();
    op.matrix_ = std::move(a);
    return op;
  }

  static MeasurementOperator entry_sampling(std::vector<std::size_t> indices, std::size_t in_dim) {
    for (std::size_t i : indices)
      if (i >= in_dim) throw InputError("entry sampling index out of range");
    MeasurementOperator op;
    op.kind_ = Kind::entry_sampling;
    op.in_dim_ = in_dim;
    op.out_dim_ = indices.size();
    op.indices_ = std::move(indices);
    return op;
  }

  /// p x n matrix of seeded N(0, 1/p) entries; optionally with orthonormalised rows.
  static MeasurementOperator gaussian(std::size_t p, std::size_t n, std::uint64_t seed,
                                      bool orthonormal) {
    if (p == 0 || p > n)
      throw InputError("gaussian projections: need 1 <= p <= " + std::to_string(n) + ", got " +
                       std::to_string(p));
    Rng rng(splitmix64(seed));
    DenseMatrix r(p, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    for (double& v : r.data()) v = scale * rng.normal();
    if (orthonormal) {
      for (std::size_t i = 0; i < p; ++i) {
        auto ri = r.row(i);
        for (int pass = 0; pass < 2; ++pass)
          for (std::size_t k = 0; k < i; ++k) {
            const double c = dot(r.row(k), ri);
            const auto rk = r.row(k);
            for (std::size_t j = 0; j < n; ++j) ri[j] -= c * rk[j];
          }
        const double nr = norm2(ri);
        for (double& v : ri) v /= nr;
      }
    }
    return dense(std::move(r));
  }

  Kind kind() const { return kind_; }
  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  const DenseMatrix& matrix() const { return matrix_; }
  const std::vector<std::size_t>& indices() const { return indices_; }

  Vector apply(std::span<const double> x) const {
    if (x.size() != in_dim_) throw InputError("measurement operator: input dimension mismatch");
    if (kind_ == Kind::dense) return multiply(matrix_, x);
    Vector y(out_dim_);
    for (std::size_t i = 0; i < out_dim_; ++i) y[i] = x[indices_[i]];
    return y;
  }

  Vector adjoint(std::span<const double> y) const {
    if (y.size() != out_dim_) throw InputError("measurement operator: output dimension mismatch");
    if (kind_ == Kind::dense) return multiply_transposed(matrix_, y);
    Vector x(in_dim_, 0.0);
    for (std::size_t i = 0; i < out_dim_; ++i) x[indices_[i]] += y[i];
    return x;
  }

  /// lambda_max(A^T A)
  double norm_sq() const {
    if (kind_ == Kind::entry_sampling) return indices_.empty() ? 0.0 : 1.0;
    return spectral_norm_sq(matrix_);
  }

 private:
  Kind kind_ = Kind::dense;
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  DenseMatrix matrix_;
  std::vector<std::size_t> indices_;
};

inline double soft_threshold(double q, double tau) {
  const double m = std::abs(q) - tau;
  return m > 0.0 ? std::copysign(m, q) : 0.0;
}

/// sgn(q_i) max(0, |q_i| - tau), elementwise.
inline Vector soft_threshold(std::span<const double> q, double tau) {
  if (tau < 0.0) throw InputError("soft_threshold: tau must be >= 0");
  Vector x(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) x[i] = soft_threshold(q[i], tau);
  return x;
}

/// Maximum a-posteriori estimate of a Laplacian-distributed signal (scale
/// sigma_l) observed through Gaussian noise (std sigma_g).
inline double map_shrinkage(double x, double sigma_g, double sigma_l) {
  if (!(sigma_g > 0.0) || !(sigma_l > 0.0))
    throw InputError("map_shrinkage: sigma_g and sigma_l must be > 0");
  const double tau = std::sqrt(2.0) * sigma_g * sigma_g / sigma_l;
  return std::copysign(std::max(0.0, std::abs(x) - tau), x) + 0.0;
}

/// x + (1/a) A^T (y - A x)
inline Vector landweber_step(const MeasurementOperator& op, std::span<const double> y,
                             std::span<const double> x, double a) {
  if (!(a > 0.0)) throw InputError("landweber_step: a must be > 0");
  const Vector ax = op.apply(x);
  const Vector g = op.adjoint(subtract(y, ax));
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i] / a;
  return out;
}

struct SolveResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  bool stagnated = false;
  std::vector<double> objective;  // mu ||y - A x||^2 + ||x||_1 per iterate
};

inline double resolve_step(const MeasurementOperator& op, const DenoiseConfig& cfg) {
  return cfg.step_a > 0.0 ? cfg.step_a : 1.01 * op.norm_sq();
}

inline double l1_objective(const MeasurementOperator& op, std::span<const double> y,
                           std::span<const double> x, double mu) {
  const Vector r = subtract(y, op.apply(x));
  return mu * dot(r, r) + norm1(x);
}

/// Iterative soft thresholding: Landweber step followed by shrinkage 1/(2 a mu).
inline SolveResult ista_solve(const MeasurementOperator& op, std::span<const double> y,
                              const DenoiseConfig& cfg, const Vector* warm_start = nullptr) {
  cfg.validate();
  if (y.size() != op.out_dim()) throw InputError("ista_solve: y has wrong length");
  SolveResult res;
  res.x = warm_start ? *warm_start : Vector(op.in_dim(), 0.0);
  const double a = resolve_step(op, cfg);
  if (a == 0.0) {
    res.x.assign(op.in_dim(), 0.0);
    res.converged = true;
    return res;
  }
  const double tau = 1.0 / (2.0 * a * cfg.mu);
  res.objective.push_back(l1_objective(op, y, res.x, cfg.mu));
  for (int it = 0; it < cfg.max_inner; ++it) {
    Vector next = soft_threshold(landweber_step(op, y, res.x, a), tau);
    const double change = norm2(subtract(next, res.x));
    const double ref = std::max(1.0, norm2(res.x));
    res.x = std::move(next);
    res.iterations = it + 1;
    res.objective.push_back(l1_objective(op, y, res.x, cfg.mu));
    if (change <= cfg.tol * ref) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Bregman add-back around ista_solve; drives A x = y to a hard constraint.
inline SolveResult bregman_solve(const MeasurementOperator& op, std::span<const double> y,
                                 const DenoiseConfig& cfg) {
  cfg.validate();
  SolveResult res;
  res.x.assign(op.in_dim(), 0.0);
  const double ny = norm2(y);
  if (ny == 0.0) {
    res.converged = true;
    return res;
  }
  Vector yk(y.begin(), y.end());
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    SolveResult inner = ista_solve(op, yk, cfg, &res.x);
    res.x = std::move(inner.x);
    res.iterations = outer + 1;
    const Vector r = subtract(y, op.apply(res.x));
    const double rn = norm2(r);
    res.objective.push_back(rn);
    if (rn <= cfg.tol * ny) {
      res.converged = true;
      break;
    }
    if (rn < best) {
      best = rn;
      since_best = 0;
    } else if (++since_best >= 5) {
      res.stagnated = true;
      break;
    }
    for (std::size_t i = 0; i < yk.size(); ++i) yk[i] += r[i];
  }
  return res;
}

/// U diag(max(sigma - tau, 0)) V^T
inline DenseMatrix svt(const DenseMatrix& m, double tau) {
  if (tau < 0.0) throw InputError("svt: tau must be >= 0");
  const SvdResult s = svd(m);
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    const double shrunk = s.sigma[k] - tau;
    if (shrunk <= 0.0) continue;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double ui = s.u(i, k) * shrunk;
      if (ui == 0.0) continue;
      for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) += ui * s.vt(k, j);
    }
  }
  return out;
}

inline double nuclear_norm(const DenseMatrix& m) {
  double s = 0.0;
  for (double v : singular_values(m)) s += v;
  return s;
}

/// Column-stacked vectorisation (index j * rows + i).
inline Vector vectorize(const DenseMatrix& m) {
  Vector v(m.size());
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v[j * m.rows() + i] = m(i, j);
  return v;
}

inline DenseMatrix unvectorize(std::span<const double> v, std::size_t rows, std::size_t cols) {
  DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[j * rows + i];
  return m;
}

struct DenoiseResult {
  DenseMatrix matrix;
  int iterations = 0;
  bool converged = false;
  double relative_change = 0.0;
  std::size_t projections = 0;
  double threshold = 0.0;  // per-step SVT threshold on the sigma_1-normalised problem
  double scale = 0.0;      // sigma_1 of the input
};

namespace detail {

// Proximal gradient on mu ||r - R b||^2 + ||B||_*, starting from b.
inline void nuclear_prox_gradient(const MeasurementOperator& op, std::span<const double> r,
                                  std::size_t m, std::size_t n, double a, double tau, Vector& b,
                                  int max_iterations, double tol, DenoiseResult& res) {
  res.converged = false;
  for (int it = 0; it < max_iterations; ++it) {
    const Vector g = landweber_step(op, r, b, a);
    Vector next = vectorize(svt(unvectorize(g, m, n), tau));
    const double change = norm2(subtract(next, b));
    const double ref = std::max(norm2(b), std::numeric_limits<double>::min());
    b = std::move(next);
    ++res.iterations;
    res.relative_change = change / ref;
    if (change <= tol * ref || norm2(b) == 0.0) {
      res.converged = true;
      return;
    }
  }
}

}  // namespace detail

inline std::size_t default_projection_count(std::size_t m, std::size_t n) {
  const std::size_t r_guess = std::max<std::size_t>(1, n > 0 ? n - 1 : 1);
  return std::min(m * n, 4 * (m + n) * r_guess);
}

/// Nuclear-norm denoising of B from p random projections of vec(B). The
/// problem is solved on B / sigma_1(B) so mu is scale free; the result is
/// rescaled. Iterates until the relative change is <= tol or max_outer.
inline DenoiseResult matrix_denoise(const DenseMatrix& b, const DenoiseConfig& cfg) {
  cfg.validate();
  require_finite(b, "matrix_denoise");
  const std::size_t m = b.rows();
  const std::size_t n = b.cols();
  const std::size_t mn = m * n;
  const std::size_t p = cfg.projections_p ? cfg.projections_p : default_projection_count(m, n);
  if (p > mn)
    throw InputError("matrix_denoise: projections_p=" + std::to_string(p) + " exceeds m*n=" +
                     std::to_string(mn));
  DenoiseResult res;
  res.projections = p;
  res.scale = std::sqrt(spectral_norm_sq(b));
  if (res.scale == 0.0) {
    res.matrix = DenseMatrix(m, n);
    res.converged = true;
    return res;
  }
  Vector b0 = vectorize(b);
  for (double& v : b0) v /= res.scale;
  const auto op = MeasurementOperator::gaussian(p, mn, cfg.seed, cfg.orthonormal_projections);
  const Vector r = op.apply(b0);
  const double a = resolve_step(op, cfg);
  res.threshold = 1.0 / (2.0 * a * cfg.mu);
  Vector est = b0;
  detail::nuclear_prox_gradient(op, r, m, n, a, res.threshold, est, cfg.max_outer, cfg.tol, res);
  for (double& v : est) v *= res.scale;
  res.matrix = unvectorize(est, m, n);
  return res;
}

/// Low-rank completion from the entries listed in `known`: Bregman add-back
/// (max_outer rounds) around the proximal-gradient denoiser (max_inner steps),
/// enforcing agreement with the known entries as a hard constraint.
inline DenoiseResult complete_low_rank(const DenseMatrix& observed,
                                       const std::vector<std::size_t>& known,
                                       const DenoiseConfig& cfg) {
  cfg.validate();
  require_finite(observed, "complete_low_rank");
  const std::size_t m = observed.rows();
  const std::size_t n = observed.cols();
  DenoiseResult res;
  res.projections = known.size();
  const auto op = MeasurementOperator::entry_sampling(known, m * n);
  Vector full = vectorize(observed);
  Vector r = op.apply(full);
  // Unknown entries start at zero.
  Vector b = op.adjoint(r);
  res.scale = std::sqrt(spectral_norm_sq(unvectorize(b, m, n)));
  if (res.scale == 0.0 || known.empty()) {
    res.matrix = unvectorize(b, m, n);
    res.converged = true;
    return res;
  }
  for (double& v : r) v /= res.scale;
  for (double& v : b) v /= res.scale;
  const double a = resolve_step(op, cfg);
  res.threshold = 1.0 / (2.0 * a * cfg.mu);
  const double nr = norm2(r);
  Vector rk = r;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    DenoiseResult inner;
    detail::nuclear_prox_gradient(op, rk, m, n, a, res.threshold, b, cfg.max_inner, cfg.tol,
                                  inner);
    res.iterations += inner.iterations;
    const Vector resid = subtract(r, op.apply(b));
    const double rn = norm2(resid);
    res.relative_change = rn / nr;
    if (rn <= cfg.tol * nr) {
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < rk.size(); ++i) rk[i] += resid[i];
  }
  for (double& v : b) v *= res.scale;
  res.matrix = unvectorize(b, m, n);
  return res;
}

}  // namespace liesym
