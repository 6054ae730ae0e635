#pragma once

// Low-rank image experiment: rank-reduce, overwrite random pixels with black or
// white, then recover from the untouched pixels by nuclear-norm completion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "liesym/error.hpp"
#include "liesym/linalg.hpp"
#include "liesym/rng.hpp"
#include "liesym/sparseopt.hpp"

namespace liesym {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  Vector pixels;  // row-major, nominally in [0, 1]

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  void validate() const {
    if (width == 0 || height == 0) throw InputError("image: empty");
    if (pixels.size() != width * height) throw InputError("image: pixel count mismatch");
    for (double v : pixels)
      if (!std::isfinite(v)) throw InputError("image: non-finite pixel");
  }

  DenseMatrix to_matrix() const { return DenseMatrix(height, width, pixels); }

  static GrayImage from_matrix(const DenseMatrix& m) {
    GrayImage img(m.cols(), m.rows());
    std::copy(m.data().begin(), m.data().end(), img.pixels.begin());
    return img;
  }

  void clamp() {
    for (double& v : pixels) v = std::clamp(v, 0.0, 1.0);
  }
};

/// Keep the top-r singular triples.
inline GrayImage truncate_rank(const GrayImage& img, std::size_t r, bool clamp_output = true) {
  img.validate();
  const std::size_t k = std::min(img.width, img.height);
  if (r < 1 || r > k)
    throw InputError("truncate_rank: r must be in [1, " + std::to_string(k) + "]");
  const SvdResult s = svd(img.to_matrix());
  DenseMatrix out(img.height, img.width);
  for (std::size_t q = 0; q < r; ++q)
    for (std::size_t i = 0; i < img.height; ++i) {
      const double ui = s.u(i, q) * s.sigma[q];
      for (std::size_t j = 0; j < img.width; ++j) out(i, j) += ui * s.vt(q, j);
    }
  GrayImage res = GrayImage::from_matrix(out);
  if (clamp_output) res.clamp();
  return res;
}

struct Corruption {
  GrayImage image;
  std::vector<std::size_t> corrupted;  // sorted pixel indices
  std::vector<char> mask;              // 1 where corrupted
};

/// floor(fraction * N) distinct pixels set to 0 or 1 with equal probability.
inline Corruption corrupt(const GrayImage& img, double fraction, std::uint64_t seed) {
  img.validate();
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InputError("corrupt: fraction must be in [0, 1]");
  const std::size_t n = img.pixels.size();
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  Corruption out{img, {}, std::vector<char>(n, 0)};
  Rng rng(derive_seed(seed, "corrupt"));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(perm[i], perm[i + rng.below(n - i)]);
    out.image.pixels[perm[i]] = rng.below(2) ? 1.0 : 0.0;
    out.mask[perm[i]] = 1;
  }
  out.corrupted.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(out.corrupted.begin(), out.corrupted.end());
  return out;
}

struct Recovery {
  GrayImage image;
  int iterations = 0;
  bool converged = false;
  double constraint_residual = 0.0;  // relative, on the known pixels before write-back
};

/// Nuclear-norm completion from the pixels outside the mask. Known pixels are
/// copied back exactly; the result is clamped.
inline Recovery recover(const GrayImage& corrupted, const std::vector<char>& mask,
                        const DenoiseConfig& cfg) {
  corrupted.validate();
  if (mask.size() != corrupted.pixels.size()) throw InputError("recover: mask size mismatch");
  Recovery out;
  std::vector<std::size_t> known;
  const DenseMatrix m = corrupted.to_matrix();
  // Column-stacked indices of the known pixels.
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i)
      if (!mask[i * m.cols() + j]) known.push_back(j * m.rows() + i);
  if (known.size() == corrupted.pixels.size()) {
    out.image = corrupted;
    out.image.clamp();
    out.converged = true;
    return out;
  }
  DenseMatrix observed = m;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p]) observed.data()[p] = 0.0;
  const DenoiseResult res = complete_low_rank(observed, known, cfg);
  out.iterations = res.iterations;
  out.converged = res.converged;
  out.constraint_residual = res.relative_change;
  out.image = GrayImage::from_matrix(res.matrix);
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (!mask[p]) out.image.pixels[p] = corrupted.pixels[p];
  out.image.clamp();
  return out;
}

inline double relative_error(const GrayImage& a, const GrayImage& truth) {
  if (a.pixels.size() != truth.pixels.size()) throw InputError("relative_error: size mismatch");
  const double nt = norm2(truth.pixels);
  const double d = norm2(subtract(a.pixels, truth.pixels));
  return nt > 0.0 ? d / nt : d;
}

/// U V^T with U (h x r), V (w x r) uniform in [0, 1), divided by its maximum
/// (a shift would raise the rank).
inline GrayImage planted_low_rank_image(std::size_t width, std::size_t height, std::size_t rank,
                                        std::uint64_t seed) {
  if (width == 0 || height == 0 || rank == 0 || rank > std::min(width, height))
    throw InputError("planted_low_rank_image: bad size or rank");
  Rng rng(derive_seed(seed, "planted-image"));
  DenseMatrix u(height, rank), v(width, rank);
  for (double& e : u.data()) e = rng.uniform();
  for (double& e : v.data()) e = rng.uniform();
  DenseMatrix b = multiply(u, v.transposed());
  const double hi = *std::max_element(b.data().begin(), b.data().end());
  for (double& e : b.data()) e = hi > 0.0 ? e / hi : 0.0;
  return GrayImage::from_matrix(b);
}

}  // namespace liesym
