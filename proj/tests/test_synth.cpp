#include <gtest/gtest.h>

#include <cmath>

#include "liesym.hpp"

using namespace liesym;

TEST(Rk4, ConstantFieldExact) {
  const auto r = integrate_rk4(constant_rhs(), 0.0, 0.0, 1.0, 10);
  EXPECT_FALSE(r.truncated);
  ASSERT_EQ(r.trajectory.size(), 11u);
  EXPECT_NEAR(r.trajectory.states.back(), 1.0, 1e-15);
  EXPECT_EQ(r.trajectory.times.back(), 1.0);
}

TEST(Rk4, ExponentialClosedForm) {
  const auto r = integrate_rk4(linear_x_rhs(), 0.0, 1.0, 1.0, 1000);
  EXPECT_NEAR(r.trajectory.states.back(), std::exp(1.0), 1e-10);
}

TEST(Rk4, RiccatiClosedForm) {
  const double k = 5.0;
  ASSERT_NEAR(riccati_solution(1.0, k), 5.0 / 6.0, 1e-15);
  const auto r = integrate_rk4(riccati_rhs(), 1.0, 5.0 / 6.0, 2.0, 1000);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.trajectory.size(); ++i)
    worst = std::max(worst, std::abs(r.trajectory.states[i] - riccati_solution(r.trajectory.times[i], k)));
  EXPECT_LE(worst, 1e-8);
}

TEST(Rk4, FourthOrderConvergence) {
  auto err = [](int steps) {
    const auto r = integrate_rk4(linear_x_rhs(), 0.0, 1.0, 1.0, steps);
    double w = 0.0;
    for (std::size_t i = 0; i < r.trajectory.size(); ++i)
      w = std::max(w, std::abs(r.trajectory.states[i] - std::exp(r.trajectory.times[i])));
    return w;
  };
  EXPECT_GE(err(20) / err(40), 14.0);
  EXPECT_GE(err(40) / err(80), 14.0);
}

TEST(Rk4, PoleCrossingWindowRejected) {
  EXPECT_THROW(integrate_rk4(riccati_rhs(), -1.0, 1.0, 1.0, 100), InputError);
  EXPECT_THROW(integrate_rk4(linear_x_rhs(), 0.0, 1.0, 1.0, 1), InputError);
  EXPECT_THROW(integrate_rk4(linear_x_rhs(), 1.0, 1.0, 0.5, 10), InputError);
}

TEST(Rk4, BlowUpTruncates) {
  // xdot = x^2 from x(0) = 1 blows up at t = 1.
  RhsSpec sq{{{1.0, {0, 2}}}, "square"};
  const auto r = integrate_rk4(sq, 0.0, 1.0, 2.0, 200);
  EXPECT_TRUE(r.truncated);
  EXPECT_LT(r.trajectory.times.back(), 2.0);
  for (double x : r.trajectory.states) EXPECT_TRUE(std::isfinite(x));
}

TEST(AddNoise, ZeroSigmaIdentity) {
  const auto tr = integrate_rk4(linear_x_rhs(), 0.0, 1.0, 1.0, 50).trajectory;
  const auto n = add_noise(tr, 0.0, 9);
  EXPECT_EQ(n.states, tr.states);
  EXPECT_EQ(n.times, tr.times);
}

TEST(AddNoise, RelativeStandardDeviation) {
  Trajectory tr;
  tr.id = "big";
  for (int i = 0; i < 100000; ++i) {
    tr.times.push_back(i);
    tr.states.push_back(std::sin(0.001 * i) + 2.0);
  }
  const auto n = add_noise(tr, 1e-3, 4);
  double ms = 0.0;
  for (double v : tr.states) ms += v * v;
  const double rms = std::sqrt(ms / tr.size());
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) mean += (n.states[i] - tr.states[i]) / rms;
  mean /= tr.size();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double d = (n.states[i] - tr.states[i]) / rms - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / (tr.size() - 1));
  EXPECT_GE(sd, 0.95e-3);
  EXPECT_LE(sd, 1.05e-3);
  EXPECT_EQ(n.times, tr.times);
}

TEST(AddNoise, SeedDeterminism) {
  const auto tr = integrate_rk4(linear_x_rhs(), 0.0, 1.0, 1.0, 50).trajectory;
  EXPECT_EQ(add_noise(tr, 0.1, 3).states, add_noise(tr, 0.1, 3).states);
  EXPECT_NE(add_noise(tr, 0.1, 3).states, add_noise(tr, 0.1, 4).states);
  EXPECT_THROW(add_noise(tr, -1.0, 3), InputError);
}

TEST(EvalRhs, Examples) {
  EXPECT_DOUBLE_EQ(eval_rhs(riccati_rhs(), 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_rhs(linear_x_rhs(), -17.0, 2.0), 2.0);
  EXPECT_THROW(eval_rhs(riccati_rhs(), 0.0, 1.0), PoleError);
}

TEST(NamedRhs, KnownAndUnknown) {
  EXPECT_EQ(named_rhs("riccati").terms.size(), 2u);
  EXPECT_EQ(named_rhs("linear_t").name, "linear_t");
  EXPECT_THROW(named_rhs("lorenz"), InputError);
  RhsSpec empty;
  EXPECT_THROW(empty.validate(), InputError);
}

TEST(Synth, RiccatiTrajectoriesMatchModelAfterDifferencing) {
  const auto tr = integrate_rk4(riccati_rhs(), 1.0, riccati_solution(1.0, 1.0), 2.0, 1000).trajectory;
  const auto d = estimate_derivatives(tr);
  double ms = 0.0;
  for (const auto& s : d) ms += s.xdot * s.xdot;
  const double rms = std::sqrt(ms / d.size());
  for (const auto& s : d) EXPECT_LE(std::abs(s.xdot - eval_rhs(riccati_rhs(), s.t, s.x)), 5e-3 * rms);
}

TEST(Rng, DeriveSeedSeparatesLabels) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(1, "a"), derive_seed(1, "a"));
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}
