#pragma once

// Graded Laurent-monomial basis t^a x^b for the tangent-field expansions.

#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "liesym/error.hpp"

namespace liesym {

struct MultiIndex {
  int a = 0;  // power of t
  int b = 0;  // power of x

  int total_degree() const { return std::abs(a) + std::abs(b); }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// Graded order: total degree, then a, then b.
inline bool graded_less(const MultiIndex& l, const MultiIndex& r) {
  if (l.total_degree() != r.total_degree()) return l.total_degree() < r.total_degree();
  if (l.a != r.a) return l.a < r.a;
  return l.b < r.b;
}

struct BasisSpec {
  std::vector<MultiIndex> indices;
  bool allow_negative = false;

  std::size_t size() const { return indices.size(); }
  const MultiIndex& operator[](std::size_t i) const { return indices[i]; }
  int max_degree() const {
    int d = 0;
    for (const auto& m : indices) d = std::max(d, m.total_degree());
    return d;
  }
};

/// Every index with |a|+|b| <= max_degree (a,b >= 0 unless allow_negative),
/// in graded order, so basis growth only appends columns.
inline BasisSpec enumerate_basis(int max_degree, bool allow_negative = false) {
  if (max_degree < 0) throw InputError("enumerate_basis: max_degree must be >= 0");
  BasisSpec spec;
  spec.allow_negative = allow_negative;
  for (int d = 0; d <= max_degree; ++d) {
    const int lo = allow_negative ? -d : 0;
    for (int a = lo; a <= d; ++a) {
      const int rest = d - std::abs(a);
      if (allow_negative && rest > 0) spec.indices.push_back({a, -rest});
      spec.indices.push_back({a, rest});
    }
  }
  return spec;
}

namespace detail {

// base^power by repeated multiplication or division.
inline double int_power(double base, int power) {
  if (power < 0 && base == 0.0) throw PoleError("negative power of zero");
  double r = 1.0;
  if (power >= 0) {
    for (int i = 0; i < power; ++i) r *= base;
  } else {
    for (int i = 0; i < -power; ++i) r /= base;
  }
  return r;
}

}  // namespace detail

inline double eval_monomial(const MultiIndex& idx, double t, double x) {
  return detail::int_power(t, idx.a) * detail::int_power(x, idx.b);
}

struct MonomialPartials {
  double d_dt = 0.0;
  double d_dx = 0.0;
};

/// (a t^(a-1) x^b, b t^a x^(b-1)); a zero coefficient short-circuits its term.
inline MonomialPartials eval_partials(const MultiIndex& idx, double t, double x) {
  MonomialPartials p;
  if (idx.a != 0)
    p.d_dt = idx.a * detail::int_power(t, idx.a - 1) * detail::int_power(x, idx.b);
  if (idx.b != 0)
    p.d_dx = idx.b * detail::int_power(t, idx.a) * detail::int_power(x, idx.b - 1);
  return p;
}

inline std::string to_string(const MultiIndex& m) {
  return "(" + std::to_string(m.a) + "," + std::to_string(m.b) + ")";
}

/// Human-readable monomial, e.g. "t^-1*x^2", "t", "1".
inline std::string monomial_label(const MultiIndex& m) {
  auto factor = [](const char* var, int p) -> std::string {
    if (p == 0) return "";
    if (p == 1) return var;
    return std::string(var) + "^" + std::to_string(p);
  };
  const std::string ft = factor("t", m.a);
  const std::string fx = factor("x", m.b);
  if (ft.empty() && fx.empty()) return "1";
  if (ft.empty()) return fx;
  if (fx.empty()) return ft;
  return ft + "*" + fx;
}

}  // namespace liesym
