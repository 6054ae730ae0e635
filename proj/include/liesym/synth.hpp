#pragma once

// Ground-truth data: fixed-step RK4 integration of f(t, x) = sum c t^a x^b
// and relative Gaussian observation noise.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "liesym/basis.hpp"
#include "liesym/error.hpp"
#include "liesym/jetspace.hpp"
#include "liesym/rng.hpp"

namespace liesym {

struct RhsTerm {
  double coefficient = 0.0;
  MultiIndex power;
};

struct RhsSpec {
  std::vector<RhsTerm> terms;
  std::string name;

  void validate() const {
    if (terms.empty()) throw InputError("rhs: needs at least one term");
    for (const auto& t : terms)
      if (!std::isfinite(t.coefficient)) throw InputError("rhs: non-finite coefficient");
  }

  bool has_negative_t_power() const {
    for (const auto& t : terms)
      if (t.power.a < 0) return true;
    return false;
  }
};

/// xdot = 2 x / t - x^2 t^2
inline RhsSpec riccati_rhs() { return {{{2.0, {-1, 1}}, {-1.0, {2, 2}}}, "riccati"}; }
inline RhsSpec linear_x_rhs() { return {{{1.0, {0, 1}}}, "linear_x"}; }
inline RhsSpec linear_t_rhs() { return {{{1.0, {1, 0}}}, "linear_t"}; }
inline RhsSpec constant_rhs() { return {{{1.0, {0, 0}}}, "constant"}; }

inline RhsSpec named_rhs(const std::string& name) {
  if (name == "riccati") return riccati_rhs();
  if (name == "linear_x") return linear_x_rhs();
  if (name == "linear_t") return linear_t_rhs();
  if (name == "constant") return constant_rhs();
  throw InputError("unknown equation '" + name + "' (known: riccati, linear_x, linear_t, constant)");
}

inline double eval_rhs(const RhsSpec& rhs, double t, double x) {
  double s = 0.0;
  for (const auto& term : rhs.terms) s += term.coefficient * eval_monomial(term.power, t, x);
  return s;
}

/// Exact solution of the built-in Riccati equation: x(t) = 5 t^2 / (t^5 + K).
inline double riccati_solution(double t, double k) { return 5.0 * t * t / (std::pow(t, 5) + k); }

struct IntegrationResult {
  Trajectory trajectory;
  bool truncated = false;  // integration hit a non-finite state or a pole
};

/// Classical fixed-step RK4 from (t0, x0) to t1 in `steps` steps (steps + 1 points).
inline IntegrationResult integrate_rk4(const RhsSpec& rhs, double t0, double x0, double t1,
                                       int steps, std::string id = "0") {
  rhs.validate();
  if (steps < 2) throw InputError("integrate_rk4: steps must be >= 2");
  if (!(t1 > t0)) throw InputError("integrate_rk4: need t1 > t0");
  if (rhs.has_negative_t_power() && !(t0 * t1 > 0.0))
    throw InputError("integrate_rk4: window [" + std::to_string(t0) + ", " + std::to_string(t1) +
                     "] crosses the pole at t = 0");
  IntegrationResult out;
  out.trajectory.id = std::move(id);
  const double h = (t1 - t0) / steps;
  double x = x0;
  out.trajectory.times.push_back(t0);
  out.trajectory.states.push_back(x0);
  try {
    for (int i = 0; i < steps; ++i) {
      const double t = t0 + i * h;
      const double k1 = eval_rhs(rhs, t, x);
      const double k2 = eval_rhs(rhs, t + 0.5 * h, x + 0.5 * h * k1);
      const double k3 = eval_rhs(rhs, t + 0.5 * h, x + 0.5 * h * k2);
      const double k4 = eval_rhs(rhs, t + h, x + h * k3);
      const double next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!std::isfinite(next)) {
        out.truncated = true;
        break;
      }
      x = next;
      // t1 is hit exactly on the last step rather than accumulated.
      out.trajectory.times.push_back(i + 1 == steps ? t1 : t0 + (i + 1) * h);
      out.trajectory.states.push_back(x);
    }
  } catch (const PoleError&) {
    out.truncated = true;
  }
  return out;
}

/// x += N(0, (sigma * RMS(x))^2) i.i.d.; times untouched.
inline Trajectory add_noise(const Trajectory& traj, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw InputError("add_noise: sigma must be >= 0");
  Trajectory out = traj;
  if (sigma == 0.0 || traj.states.empty()) return out;
  double ms = 0.0;
  for (double v : traj.states) ms += v * v;
  const double scale = sigma * std::sqrt(ms / static_cast<double>(traj.states.size()));
  Rng rng(seed);
  for (double& v : out.states) v += scale * rng.normal();
  return out;
}

}  // namespace liesym
