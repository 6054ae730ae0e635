#pragma once

// From sampled trajectories to jet-space samples (t, x, xdot) carrying a local
// estimate of the surface normal of F(t, x, xdot) = xdot - f(t, x).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liesym/error.hpp"
#include "liesym/linalg.hpp"

namespace liesym {

struct Trajectory {
  std::string id;
  Vector times;
  Vector states;

  std::size_t size() const { return times.size(); }

  void validate() const {
    if (times.size() != states.size())
      throw InputError("trajectory '" + id + "': times and states differ in length");
    if (times.size() < 3)
      throw InputError("trajectory '" + id + "': needs at least 3 points");
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (!std::isfinite(times[i]) || !std::isfinite(states[i]))
        throw InputError("trajectory '" + id + "': non-finite value");
      if (i > 0 && !(times[i] > times[i - 1]))
        throw InputError("trajectory '" + id + "': duplicate or decreasing times at index " +
                         std::to_string(i));
    }
  }
};

struct DerivativeSample {
  double t = 0.0;
  double x = 0.0;
  double xdot = 0.0;
  std::size_t trajectory = 0;  // index of the source trajectory
};

struct DerivativeOptions {
  // 0: three-point stencils. M > 0: local cubic least squares over 2M+1
  // points, which also replaces x by its smoothed value.
  int smoothing_half_width = 0;
};

namespace detail {

inline Vector three_point_derivatives(const Vector& t, const Vector& x) {
  const std::size_t n = t.size();
  Vector d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * x[i - 1] + (h2 - h1) / (h1 * h2) * x[i] +
           h1 / (h2 * (h1 + h2)) * x[i + 1];
  }
  {
    const double h1 = t[1] - t[0];
    const double h2 = t[2] - t[1];
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * x[0] + (h1 + h2) / (h1 * h2) * x[1] -
           h1 / (h2 * (h1 + h2)) * x[2];
  }
  {
    const double h1 = t[n - 2] - t[n - 3];
    const double h2 = t[n - 1] - t[n - 2];
    d[n - 1] = h2 / (h1 * (h1 + h2)) * x[n - 3] - (h1 + h2) / (h1 * h2) * x[n - 2] +
               (2.0 * h2 + h1) / (h2 * (h1 + h2)) * x[n - 1];
  }
  return d;
}

}  // namespace detail

/// xdot along one trajectory; output has one sample per input point.
inline std::vector<DerivativeSample> estimate_derivatives(const Trajectory& traj,
                                                          const DerivativeOptions& opts = {},
                                                          std::size_t trajectory_index = 0) {
  traj.validate();
  const std::size_t n = traj.size();
  std::vector<DerivativeSample> out(n);
  if (opts.smoothing_half_width <= 0) {
    const Vector d = detail::three_point_derivatives(traj.times, traj.states);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = {traj.times[i], traj.states[i], d[i], trajectory_index};
    return out;
  }

  const std::size_t half = static_cast<std::size_t>(opts.smoothing_half_width);
  const std::size_t width = std::min(n, 2 * half + 1);
  const std::size_t degree = std::min<std::size_t>(3, width - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= half ? i - half : 0;
    if (lo + width > n) lo = n - width;
    double scale = 0.0;
    for (std::size_t j = lo; j < lo + width; ++j)
      scale = std::max(scale, std::abs(traj.times[j] - traj.times[i]));
    DenseMatrix design(width, degree + 1);
    Vector rhs(width);
    for (std::size_t j = 0; j < width; ++j) {
      const double s = (traj.times[lo + j] - traj.times[i]) / scale;
      double p = 1.0;
      for (std::size_t k = 0; k <= degree; ++k, p *= s) design(j, k) = p;
      rhs[j] = traj.states[lo + j];
    }
    const LeastSquaresResult fit = least_squares(design, rhs);
    out[i] = {traj.times[i], fit.x[0], fit.x[1] / scale, trajectory_index};
  }
  return out;
}

struct JetSample {
  double t = 0.0;
  double x = 0.0;
  double xdot = 0.0;
  double f_t = 0.0;  // local estimate of df/dt
  double f_x = 0.0;  // local estimate of df/dx
  double weight = 1.0;
};

struct NormalOptions {
  // Explicit neighbourhood size; 0 means neighbors_per_trajectory times the
  // number of distinct trajectories in the input.
  std::size_t neighbors = 0;
  std::size_t neighbors_per_trajectory = 41;
  int fit_degree = 3;
  // Weight of the z-scored x offset in the neighbour metric. At 0 the
  // neighbourhood is a time slab across all trajectories, which is what makes
  // f_t and f_x separable when the data are a handful of 1-D curves.
  double x_weight = 0.0;
};

inline constexpr double kMinSampleWeight = 1e-6;
inline constexpr double kMaxSampleWeight = 1e6;

struct NormalEstimate {
  std::vector<JetSample> samples;
  std::vector<std::size_t> source_index;  // input index of each output sample
  std::size_t dropped = 0;                // rank-deficient neighbourhoods
};

inline std::size_t resolve_neighbor_count(std::span<const DerivativeSample> samples,
                                          const NormalOptions& opts) {
  std::size_t k = opts.neighbors;
  if (k == 0) {
    std::set<std::size_t> ids;
    for (const auto& s : samples) ids.insert(s.trajectory);
    k = opts.neighbors_per_trajectory * ids.size();
  }
  return std::min(k, samples.size());
}

/// Fits xdot ~ polynomial(t - t0, x - x0) over each sample's neighbourhood and
/// reads (f_t, f_x) off the linear coefficients. Output order follows input.
inline NormalEstimate estimate_normals(std::span<const DerivativeSample> samples,
                                       const NormalOptions& opts = {}) {
  if (opts.fit_degree < 1 || opts.fit_degree > 4)
    throw InputError("estimate_normals: fit_degree must be in [1, 4]");
  const std::size_t n = samples.size();
  const std::size_t k = resolve_neighbor_count(samples, opts);
  const std::size_t deg = static_cast<std::size_t>(opts.fit_degree);
  const std::size_t n_terms = (deg + 1) * (deg + 2) / 2;
  if (k < std::max<std::size_t>(4, n_terms + 1) || n < k)
    throw InputError("estimate_normals: need at least " +
                     std::to_string(std::max<std::size_t>(4, n_terms + 1)) +
                     " neighbours and as many samples (have k=" + std::to_string(k) +
                     ", n=" + std::to_string(n) + ")");

  double mt = 0.0, mx = 0.0;
  for (const auto& s : samples) {
    mt += s.t;
    mx += s.x;
  }
  mt /= static_cast<double>(n);
  mx /= static_cast<double>(n);
  double st = 0.0, sx = 0.0;
  for (const auto& s : samples) {
    st += (s.t - mt) * (s.t - mt);
    sx += (s.x - mx) * (s.x - mx);
  }
  st = std::sqrt(st / static_cast<double>(n));
  sx = std::sqrt(sx / static_cast<double>(n));
  if (st == 0.0) st = 1.0;
  if (sx == 0.0) sx = 1.0;

  // (p, q) exponents of (dt, dx) in graded order; terms 1 and 2 are dt and dx.
  std::vector<std::pair<std::size_t, std::size_t>> terms;
  for (std::size_t d = 0; d <= deg; ++d)
    for (std::size_t q = 0; q <= d; ++q) terms.emplace_back(d - q, q);

  NormalEstimate out;
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = samples[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double du = (samples[j].t - c.t) / st;
      const double dv = opts.x_weight * (samples[j].x - c.x) / sx;
      dist[j] = {du * du + dv * dv, j};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    // Fixed summation order regardless of how nth_element arranged the prefix.
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
              [](const auto& l, const auto& r) { return l.second < r.second; });

    double ru = 0.0, rv = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto& s = samples[dist[j].second];
      ru = std::max(ru, std::abs(s.t - c.t) / st);
      rv = std::max(rv, std::abs(s.x - c.x) / sx);
    }
    if (ru == 0.0 || rv == 0.0) {
      ++out.dropped;
      continue;
    }
    DenseMatrix design(k, terms.size());
    Vector rhs(k);
    for (std::size_t j = 0; j < k; ++j) {
      const auto& s = samples[dist[j].second];
      const double u = (s.t - c.t) / st / ru;
      const double v = (s.x - c.x) / sx / rv;
      for (std::size_t m = 0; m < terms.size(); ++m)
        design(j, m) = std::pow(u, static_cast<double>(terms[m].first)) *
                       std::pow(v, static_cast<double>(terms[m].second));
      rhs[j] = s.xdot;
    }
    const LeastSquaresResult fit = least_squares(design, rhs, 1e-10);
    if (fit.rank_deficient) {
      ++out.dropped;
      continue;
    }
    const Vector pred = multiply(design, fit.x);
    double ss = 0.0;
    for (std::size_t j = 0; j < k; ++j) ss += (rhs[j] - pred[j]) * (rhs[j] - pred[j]);
    const double dof = static_cast<double>(k > terms.size() ? k - terms.size() : k);
    const double var = ss / dof;
    const double w = var > 0.0 ? std::clamp(1.0 / var, kMinSampleWeight, kMaxSampleWeight)
                               : kMaxSampleWeight;

    JetSample js;
    js.t = c.t;
    js.x = c.x;
    js.xdot = fit.x[0];
    js.f_t = fit.x[1] / (ru * st);
    js.f_x = fit.x[2] / (rv * sx);
    js.weight = w;
    out.samples.push_back(js);
    out.source_index.push_back(i);
  }
  return out;
}

/// Convenience: derivatives for every trajectory, concatenated in order.
inline std::vector<DerivativeSample> estimate_all_derivatives(std::span<const Trajectory> trajs,
                                                              const DerivativeOptions& opts = {}) {
  std::vector<DerivativeSample> all;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    auto d = estimate_derivatives(trajs[i], opts, i);
    all.insert(all.end(), d.begin(), d.end());
  }
  return all;
}

}  // namespace liesym
