#pragma once

// Symmetry detection from jet samples. Each sample contributes one row of the
// determining system B eta = 0, where eta holds the coefficients of the two
// tangent-field expansions
//
//   xi_t(t, x) = sum_ab eta_ab t^a x^b      (t_basis, first block of columns)
//   xi_x(t, x) = sum_cd eta_cd t^c x^d      (x_basis, second block)
//
// and the row is the scalar product of the prolonged field with grad F for
// F = xdot - f(t, x). The basis grows degree by degree until the denoised
// spectrum of B is rank deficient; the generator is then read off the raw B.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "liesym/basis.hpp"
#include "liesym/error.hpp"
#include "liesym/jetspace.hpp"
#include "liesym/linalg.hpp"
#include "liesym/rng.hpp"
#include "liesym/sparseopt.hpp"

namespace liesym {

struct DeterminingSystem {
  DenseMatrix b;    // conditioned: raw * transform
  DenseMatrix raw;  // rows as assembled
  BasisSpec t_basis;
  BasisSpec x_basis;
  std::vector<std::size_t> sample_index;  // row -> input sample
  DenseMatrix transform;                  // block diagonal, n x n
  std::size_t skipped_rows = 0;           // samples lost to poles

  std::size_t cols() const { return t_basis.size() + x_basis.size(); }

  /// Basis coefficients (unit norm, first significant entry positive) of a
  /// vector given in the conditioned columns of b.
  Vector coefficients(std::span<const double> conditioned) const;
};

/// One unscaled determining-equation row (times sqrt(weight)); nullopt when a
/// monomial or partial hits a pole at this sample.
inline std::optional<Vector> row_for_sample(const JetSample& s, const BasisSpec& t_basis,
                                            const BasisSpec& x_basis) {
  const double f_t = -s.f_t;  // F_t
  const double f_x = -s.f_x;  // F_x
  const double xd = s.xdot;
  const double w = std::sqrt(s.weight);
  Vector row;
  row.reserve(t_basis.size() + x_basis.size());
  try {
    for (const auto& idx : t_basis.indices) {
      const double m = eval_monomial(idx, s.t, s.x);
      const auto p = eval_partials(idx, s.t, s.x);
      row.push_back(w * (f_t * m - xd * p.d_dt - xd * xd * p.d_dx));
    }
    for (const auto& idx : x_basis.indices) {
      const double m = eval_monomial(idx, s.t, s.x);
      const auto p = eval_partials(idx, s.t, s.x);
      row.push_back(w * (f_x * m + p.d_dt + xd * p.d_dx));
    }
  } catch (const PoleError&) {
    return std::nullopt;
  }
  for (double v : row)
    if (!std::isfinite(v)) return std::nullopt;
  return row;
}

inline constexpr double kWhiteningFloor = 1e-10;

struct AssembleOptions {
  std::size_t max_rows = 2000;  // seeded uniform subsample above this
  std::uint64_t seed = 0;
};

inline DeterminingSystem assemble(std::span<const JetSample> samples, const BasisSpec& t_basis,
                                  const BasisSpec& x_basis, const AssembleOptions& opts = {}) {
  DeterminingSystem sys;
  sys.t_basis = t_basis;
  sys.x_basis = x_basis;
  const std::size_t n = sys.cols();
  if (t_basis.size() == 0 || x_basis.size() == 0)
    throw InputError("assemble: both bases must be nonempty");

  std::vector<Vector> rows;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto r = row_for_sample(samples[i], t_basis, x_basis);
    if (!r) {
      ++sys.skipped_rows;
      continue;
    }
    rows.push_back(std::move(*r));
    index.push_back(i);
  }
  const std::size_t need = 5 * n;
  if (rows.size() < need)
    throw InputError("assemble: need at least " + std::to_string(need) + " usable rows for " +
                     std::to_string(n) + " columns, have " + std::to_string(rows.size()));

  std::vector<std::size_t> keep(rows.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  if (opts.max_rows > 0 && rows.size() > std::max(opts.max_rows, need)) {
    const std::size_t target = std::max(opts.max_rows, need);
    Rng rng(derive_seed(opts.seed, "subsample"));
    for (std::size_t i = 0; i < target; ++i)
      std::swap(keep[i], keep[i + rng.below(keep.size() - i)]);
    keep.resize(target);
    std::sort(keep.begin(), keep.end());
  }

  sys.b = DenseMatrix(keep.size(), n);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const Vector& src = rows[keep[r]];
    std::copy(src.begin(), src.end(), sys.b.row(r).begin());
    sys.sample_index.push_back(index[keep[r]]);
  }
  sys.raw = sys.b;
  // Each expansion block is whitened against the empirical Gram matrix of
  // its monomials (weighted by the sample weights) and then scaled to unit
  // RMS entry. The map is invertible, so null vectors carry over exactly, and
  // the near-collinearity of t^a x^b on a narrow window no longer shows up as
  // spuriously small singular values.
  const std::size_t nt = t_basis.size();
  sys.transform = DenseMatrix(n, n);
  const std::size_t m = keep.size();
  for (const auto [lo, hi] : {std::pair{std::size_t{0}, nt}, std::pair{nt, n}}) {
    const std::size_t nb = hi - lo;
    const BasisSpec& basis = lo == 0 ? t_basis : x_basis;
    DenseMatrix design(m, nb);
    for (std::size_t r = 0; r < m; ++r) {
      const JetSample& s = samples[sys.sample_index[r]];
      for (std::size_t j = 0; j < nb; ++j)
        design(r, j) = std::sqrt(s.weight) * eval_monomial(basis[j], s.t, s.x);
    }
    const SvdResult sv = svd(design);
    DenseMatrix w(nb, nb);
    for (std::size_t q = 0; q < nb; ++q) {
      const double sq = std::max(sv.sigma[q], kWhiteningFloor * sv.sigma.front());
      for (std::size_t j = 0; j < nb; ++j) w(j, q) = sq > 0.0 ? sv.vt(q, j) / sq : (j == q);
    }
    double ss = 0.0;
    DenseMatrix blk(m, nb);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t q = 0; q < nb; ++q) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nb; ++j) acc += sys.raw(r, lo + j) * w(j, q);
        blk(r, q) = acc;
        ss += acc * acc;
      }
    const double rms = std::sqrt(ss / static_cast<double>(m * nb));
    const double c = rms > 0.0 ? rms : 1.0;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t q = 0; q < nb; ++q) sys.b(r, lo + q) = blk(r, q) / c;
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t q = 0; q < nb; ++q) sys.transform(lo + j, lo + q) = w(j, q) / c;
  }
  return sys;
}

struct RankTest {
  bool deficient = false;         // sigma_n <= eps sigma_1 after denoising
  bool deficient_by_one = false;  // ... and sigma_{n-1} > eps sigma_1
  bool raw_deficient = false;     // the same gate applied to the raw spectrum
  bool degenerate = false;        // denoised matrix is zero
  bool converged = true;
  int iterations = 0;
  std::size_t null_dimension = 0;
  double gap = 0.0;  // sigma_{n-1} / sigma_n of the denoised spectrum; may be inf
  Vector raw_sigma;
  Vector denoised_sigma;
};

/// Rank decision for the columns of b. The square triangular factor of b has
/// the same singular values and is what gets denoised.
inline RankTest rank_deficiency_test(const DenseMatrix& b, const DenoiseConfig& cfg) {
  cfg.validate();
  require_finite(b, "rank_deficiency_test");
  if (b.cols() < 2) throw InputError("rank_deficiency_test: need at least 2 columns");
  const DenseMatrix r = b.rows() > b.cols() ? qr_r_factor(b) : b;
  RankTest out;
  out.raw_sigma = singular_values(b);
  const double eps = cfg.eps_rank;
  const auto count_small = [eps](const Vector& s) {
    std::size_t k = 0;
    for (double v : s)
      if (v <= eps * s.front()) ++k;
    return k;
  };
  out.raw_deficient = b.rows() < b.cols() ||
                      (out.raw_sigma.front() > 0.0 && count_small(out.raw_sigma) > 0);

  const DenoiseResult den = matrix_denoise(r, cfg);
  out.iterations = den.iterations;
  out.converged = den.converged;
  out.denoised_sigma = singular_values(den.matrix);
  const Vector& s = out.denoised_sigma;
  const std::size_t n = s.size();
  if (s.front() == 0.0) {
    out.degenerate = true;
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  out.gap = s[n - 1] > 0.0 ? s[n - 2] / s[n - 1] : std::numeric_limits<double>::infinity();
  if (!out.converged) return out;
  out.null_dimension = count_small(s);
  out.deficient = out.null_dimension > 0;
  out.deficient_by_one = out.null_dimension == 1;
  return out;
}

inline RankTest rank_deficiency_test(const DeterminingSystem& sys, const DenoiseConfig& cfg) {
  return rank_deficiency_test(sys.b, cfg);
}

/// sum_k coeffs[k] * basis[k](t, x)
inline double eval_expansion(const BasisSpec& basis, std::span<const double> coeffs, double t,
                             double x) {
  double s = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k)
    if (coeffs[k] != 0.0) s += coeffs[k] * eval_monomial(basis[k], t, x);
  return s;
}

struct DegreeTrace {
  int degree = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double raw_ratio = 0.0;       // sigma_n / sigma_1 of raw B
  double raw_gap = 0.0;         // sigma_{n-1} / sigma_n of raw B
  double denoised_ratio = 0.0;  // same for B_inf
  bool raw_deficient = false;
  bool deficient = false;
  bool converged = true;
  int iterations = 0;
};

struct SymmetryResult {
  bool found = false;
  int basis_degree = 0;
  BasisSpec t_basis;
  BasisSpec x_basis;
  Vector eta_t;
  Vector eta_x;
  Vector sigma;           // raw (equilibrated) B at the reported degree
  Vector denoised_sigma;  // B_inf at the reported degree
  double gap = 0.0;      // sigma_{n-1} / sigma_n of B_inf
  double raw_gap = 0.0;  // raw gap at the null-space boundary
  double alignment = 0.0;
  bool alignment_degenerate = false;  // xi_t ~ 0 at every sample
  std::size_t multiplicity = 0;       // numerical null-space dimension
  bool evolution_selected = false;    // picked the evolution-aligned vector
  double residual_ratio = 0.0;        // ||B eta|| / (||eta|| sigma_{n-k}), k = multiplicity
  std::size_t rows = 0;
  std::size_t skipped_rows = 0;
  bool converged = true;
  std::uint64_t seed = 0;
  std::string message;
  std::vector<DegreeTrace> trace;
};

struct DetectOptions {
  int min_degree = 1;
  int max_degree = 3;
  bool allow_negative = false;
  std::size_t max_rows = 2000;
  double alignment_threshold = 0.99;
  double min_gap = 8.0;  // raw sigma ratio required across the null-space boundary

  void validate() const {
    if (!(min_gap >= 1.0)) throw InputError("detect: min_gap must be >= 1");
    if (min_degree < 0 || max_degree < min_degree)
      throw InputError("detect: need 0 <= min_degree <= max_degree");
    if (max_degree > 8) throw InputError("detect: max_degree above 8 is not supported");
    if (!(alignment_threshold >= -1.0 && alignment_threshold <= 1.0))
      throw InputError("detect: alignment_threshold must be in [-1, 1]");
  }
};

struct Alignment {
  double score = 0.0;
  bool degenerate = false;
  std::size_t used = 0;
};

/// Weighted correlation of xi_x / xi_t with xdot over samples where xi_t is
/// not negligible.
inline Alignment alignment_score(const BasisSpec& t_basis, std::span<const double> eta_t,
                                 const BasisSpec& x_basis, std::span<const double> eta_x,
                                 std::span<const JetSample> samples) {
  Alignment out;
  std::vector<double> xt(samples.size(), 0.0), ratio(samples.size(), 0.0);
  std::vector<char> ok(samples.size(), 0);
  double max_xt = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      xt[i] = eval_expansion(t_basis, eta_t, samples[i].t, samples[i].x);
      ratio[i] = eval_expansion(x_basis, eta_x, samples[i].t, samples[i].x);
      ok[i] = std::isfinite(xt[i]) && std::isfinite(ratio[i]);
    } catch (const PoleError&) {
      ok[i] = 0;
    }
    if (ok[i]) max_xt = std::max(max_xt, std::abs(xt[i]));
  }
  double sw = 0.0, mr = 0.0, md = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!ok[i] || max_xt == 0.0 || std::abs(xt[i]) <= 1e-8 * max_xt) {
      ok[i] = 0;
      continue;
    }
    ratio[i] /= xt[i];
    const double w = samples[i].weight;
    sw += w;
    mr += w * ratio[i];
    md += w * samples[i].xdot;
    ++out.used;
  }
  if (out.used == 0) {
    out.degenerate = true;
    return out;
  }
  mr /= sw;
  md /= sw;
  double crr = 0.0, cdd = 0.0, crd = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!ok[i]) continue;
    const double w = samples[i].weight;
    const double a = ratio[i] - mr;
    const double b = samples[i].xdot - md;
    crr += w * a * a;
    cdd += w * b * b;
    crd += w * a * b;
  }
  const double scale = std::max({1.0, std::abs(mr), std::abs(md)});
  const double tiny = 1e-16 * scale * scale * sw;
  if (crr <= tiny || cdd <= tiny) {
    // Constant field: correlation is undefined, compare levels instead.
    out.score = (crr <= tiny && cdd <= tiny && std::abs(mr - md) <= 1e-8 * scale) ? 1.0 : 0.0;
    return out;
  }
  out.score = std::clamp(crd / std::sqrt(crr * cdd), -1.0, 1.0);
  return out;
}

inline Alignment alignment_score(const SymmetryResult& r, std::span<const JetSample> samples) {
  return alignment_score(r.t_basis, r.eta_t, r.x_basis, r.eta_x, samples);
}

namespace detail {

// Unit vector, first significant entry positive.
inline void normalize_direction(Vector& v) {
  const double nv = norm2(v);
  if (nv == 0.0) return;
  double vmax = 0.0;
  for (double& e : v) {
    e /= nv;
    vmax = std::max(vmax, std::abs(e));
  }
  for (double e : v) {
    if (std::abs(e) > 1e-12 * vmax) {
      if (e < 0.0)
        for (double& f : v) f = -f;
      break;
    }
  }
}

// Vector in span(basis) (conditioned coordinates) minimising the
// characteristic xi_x - xdot xi_t over the rows of sys.
inline Vector evolution_aligned(const DeterminingSystem& sys, const std::vector<Vector>& basis,
                                std::span<const JetSample> samples) {
  const std::size_t nt = sys.t_basis.size();
  const std::size_t n = sys.cols();
  const std::size_t k = basis.size();
  std::vector<Vector> coeffs;
  for (const auto& v : basis) coeffs.push_back(multiply(sys.transform, v));
  DenseMatrix c(sys.sample_index.size(), k);
  Vector row(n);
  for (std::size_t r = 0; r < sys.sample_index.size(); ++r) {
    const JetSample& s = samples[sys.sample_index[r]];
    const double w = std::sqrt(s.weight);
    for (std::size_t j = 0; j < n; ++j)
      row[j] = w * (j < nt ? -s.xdot * eval_monomial(sys.t_basis[j], s.t, s.x)
                           : eval_monomial(sys.x_basis[j - nt], s.t, s.x));
    for (std::size_t q = 0; q < k; ++q) c(r, q) = dot(row, coeffs[q]);
  }
  const Vector coef = null_vector(c);
  Vector out(n, 0.0);
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t j = 0; j < n; ++j) out[j] += coef[q] * basis[q][j];
  return out;
}

}  // namespace detail

inline Vector DeterminingSystem::coefficients(std::span<const double> conditioned) const {
  Vector eta = multiply(transform, conditioned);
  detail::normalize_direction(eta);
  return eta;
}

/// Grows both bases from min_degree to max_degree and stops at the first
/// degree whose denoised B is rank deficient and whose raw spectrum shows a
/// gap of at least min_gap at the null-space boundary.
inline SymmetryResult detect(std::span<const JetSample> samples, const DetectOptions& opts,
                             const DenoiseConfig& cfg) {
  opts.validate();
  cfg.validate();
  SymmetryResult res;
  res.seed = cfg.seed;
  for (int d = opts.min_degree; d <= opts.max_degree; ++d) {
    const BasisSpec t_basis = enumerate_basis(d, opts.allow_negative);
    const BasisSpec x_basis = enumerate_basis(d, opts.allow_negative);
    DeterminingSystem sys;
    try {
      sys = assemble(samples, t_basis, x_basis, {opts.max_rows, cfg.seed});
    } catch (const InputError&) {
      if (d == opts.min_degree) throw;
      res.message = "not enough samples for degree " + std::to_string(d) + "; ";
      break;
    }
    DenoiseConfig dc = cfg;
    dc.seed = derive_seed(cfg.seed, "degree-" + std::to_string(d));
    const RankTest test = rank_deficiency_test(sys, dc);
    const std::size_t n = sys.cols();
    const Vector& raw = test.raw_sigma;

    // Null-space boundary: the widest raw gap among the denoised-small values.
    std::size_t k = 0;
    double raw_gap = 0.0;
    for (std::size_t j = 1; j <= std::min(test.null_dimension, n - 1); ++j) {
      const double g = raw[n - j] > 0.0 ? raw[n - j - 1] / raw[n - j]
                                        : std::numeric_limits<double>::infinity();
      if (g > raw_gap) {
        raw_gap = g;
        k = j;
      }
    }

    DegreeTrace tr;
    tr.degree = d;
    tr.rows = sys.b.rows();
    tr.cols = n;
    tr.raw_ratio = raw.back() / raw.front();
    tr.denoised_ratio =
        test.degenerate ? 0.0 : test.denoised_sigma.back() / test.denoised_sigma.front();
    tr.raw_gap = raw.back() > 0.0 ? raw[n - 2] / raw.back() : std::numeric_limits<double>::infinity();
    tr.raw_deficient = test.raw_deficient;
    tr.deficient = test.deficient && raw_gap >= opts.min_gap;
    tr.converged = test.converged;
    tr.iterations = test.iterations;
    res.trace.push_back(tr);
    if (!test.converged) res.converged = false;

    res.basis_degree = d;
    res.t_basis = t_basis;
    res.x_basis = x_basis;
    res.sigma = raw;
    res.denoised_sigma = test.denoised_sigma;
    res.gap = test.gap;
    res.raw_gap = raw_gap;
    res.rows = sys.b.rows();
    res.skipped_rows = sys.skipped_rows;
    if (!tr.deficient) continue;

    const SvdResult s = svd(qr_r_factor(sys.b));
    res.multiplicity = k;
    auto last = s.vt.row(n - 1);
    Vector chosen(last.begin(), last.end());
    if (k > 1) {
      std::vector<Vector> basis;
      for (std::size_t q = n - k; q < n; ++q) {
        auto v = s.vt.row(q);
        basis.emplace_back(v.begin(), v.end());
      }
      const Vector evo = detail::evolution_aligned(sys, basis, samples);
      const Vector eta = sys.coefficients(evo);
      const std::size_t nt = t_basis.size();
      const Alignment al = alignment_score(t_basis, std::span(eta).first(nt), x_basis,
                                           std::span(eta).subspan(nt), samples);
      if (!al.degenerate && al.score >= opts.alignment_threshold) {
        chosen = evo;
        res.evolution_selected = true;
      }
    }
    // Against the smallest singular value outside the null space.
    res.residual_ratio =
        k < n ? norm2(multiply(sys.b, chosen)) / (norm2(chosen) * s.sigma[n - 1 - k]) : 0.0;

    const Vector eta = sys.coefficients(chosen);
    const std::size_t nt = t_basis.size();
    res.eta_t.assign(eta.begin(), eta.begin() + static_cast<std::ptrdiff_t>(nt));
    res.eta_x.assign(eta.begin() + static_cast<std::ptrdiff_t>(nt), eta.end());
    const Alignment al = alignment_score(res, samples);
    res.alignment = al.score;
    res.alignment_degenerate = al.degenerate;
    res.found = true;
    res.message = "symmetry found at degree " + std::to_string(d);
    if (res.multiplicity > 1)
      res.message += " (null space dimension " + std::to_string(res.multiplicity) + ")";
    return res;
  }
  res.message += "no symmetry found at degree <= " + std::to_string(opts.max_degree);
  return res;
}

/// Generator as text, scaled so the largest xi_t coefficient is 1 (or xi_x
/// when xi_t vanishes); e.g. "xi_t = 1.000*t, xi_x = -3.000*x".
inline std::string generator_string(const SymmetryResult& r) {
  if (!r.found) return "none";
  double ref = 0.0;
  for (double v : r.eta_t)
    if (std::abs(v) > std::abs(ref)) ref = v;
  if (std::abs(ref) < 1e-12) {
    for (double v : r.eta_x)
      if (std::abs(v) > std::abs(ref)) ref = v;
  }
  if (ref == 0.0) ref = 1.0;
  double vmax = 0.0;
  for (double v : r.eta_t) vmax = std::max(vmax, std::abs(v / ref));
  for (double v : r.eta_x) vmax = std::max(vmax, std::abs(v / ref));
  auto part = [&](const BasisSpec& basis, const Vector& coef) {
    std::string s;
    char buf[64];
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const double c = coef[k] / ref;
      if (std::abs(c) <= 1e-3 * vmax) continue;
      const std::string label = monomial_label(basis[k]);
      if (s.empty())
        std::snprintf(buf, sizeof buf, "%.3f", c);
      else
        std::snprintf(buf, sizeof buf, " %c %.3f", c < 0 ? '-' : '+', std::abs(c));
      s += buf;
      if (label != "1") s += "*" + label;
    }
    return s.empty() ? std::string("0") : s;
  };
  return "xi_t = " + part(r.t_basis, r.eta_t) + ", xi_x = " + part(r.x_basis, r.eta_x);
}

struct ReadoutGrid {
  double t_min = 0.0, t_max = 1.0;
  double x_min = 0.0, x_max = 1.0;
  std::size_t nt = 20, nx = 20;

  /// Bounding box of the samples.
  static ReadoutGrid covering(std::span<const JetSample> samples, std::size_t nt = 20,
                              std::size_t nx = 20) {
    if (samples.empty()) throw InputError("readout grid: no samples");
    ReadoutGrid g;
    g.nt = nt;
    g.nx = nx;
    g.t_min = g.t_max = samples.front().t;
    g.x_min = g.x_max = samples.front().x;
    for (const auto& s : samples) {
      g.t_min = std::min(g.t_min, s.t);
      g.t_max = std::max(g.t_max, s.t);
      g.x_min = std::min(g.x_min, s.x);
      g.x_max = std::max(g.x_max, s.x);
    }
    return g;
  }

  double t_at(std::size_t i) const {
    return nt < 2 ? t_min : t_min + (t_max - t_min) * static_cast<double>(i) / (nt - 1);
  }
  double x_at(std::size_t j) const {
    return nx < 2 ? x_min : x_min + (x_max - x_min) * static_cast<double>(j) / (nx - 1);
  }
};

struct Readout {
  bool refused = false;
  std::string reason;
  ReadoutGrid grid;
  DenseMatrix values;      // nt x nx, NaN where xi_t vanishes
  double residual_rms = 0.0;  // RMS of xdot - f_hat over the samples
  std::size_t poles = 0;
};

/// f_hat = xi_x / xi_t on the grid; refused unless the generator is aligned
/// with the evolution field.
inline Readout model_readout(const SymmetryResult& r, std::span<const JetSample> samples,
                             const ReadoutGrid& grid, double alignment_threshold = 0.99) {
  Readout out;
  out.grid = grid;
  if (!r.found) {
    out.refused = true;
    out.reason = "no generator to read out";
    return out;
  }
  if (r.alignment_degenerate || r.alignment < alignment_threshold) {
    out.refused = true;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "alignment %.4f below %.2f: xi_x/xi_t does not follow xdot, the generator is "
                  "not evolution-aligned",
                  r.alignment, alignment_threshold);
    out.reason = buf;
    return out;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto ratio = [&](double t, double x) {
    try {
      const double den = eval_expansion(r.t_basis, r.eta_t, t, x);
      if (den == 0.0) return nan;
      return eval_expansion(r.x_basis, r.eta_x, t, x) / den;
    } catch (const PoleError&) {
      return nan;
    }
  };
  out.values = DenseMatrix(grid.nt, grid.nx);
  for (std::size_t i = 0; i < grid.nt; ++i)
    for (std::size_t j = 0; j < grid.nx; ++j) {
      out.values(i, j) = ratio(grid.t_at(i), grid.x_at(j));
      if (!std::isfinite(out.values(i, j))) ++out.poles;
    }
  double ss = 0.0;
  std::size_t used = 0;
  for (const auto& s : samples) {
    const double f = ratio(s.t, s.x);
    if (!std::isfinite(f)) continue;
    ss += (s.xdot - f) * (s.xdot - f);
    ++used;
  }
  out.residual_rms = used ? std::sqrt(ss / static_cast<double>(used)) : nan;
  return out;
}

}  // namespace liesym
