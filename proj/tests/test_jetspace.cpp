#include <gtest/gtest.h>

#include <cmath>

#include "liesym.hpp"
#include "oracles.hpp"

using namespace liesym;

namespace {

Trajectory sampled(const std::vector<double>& t, double (*x)(double)) {
  Trajectory tr;
  tr.id = "s";
  tr.times = t;
  for (double v : t) tr.states.push_back(x(v));
  return tr;
}

// Derivative samples on n_traj curves x = c * exp(t) with exact xdot = x.
std::vector<DerivativeSample> exponential_samples(std::size_t n_traj, std::size_t n_pts) {
  std::vector<DerivativeSample> out;
  for (std::size_t k = 0; k < n_traj; ++k)
    for (std::size_t i = 0; i < n_pts; ++i) {
      const double t = static_cast<double>(i) / (n_pts - 1);
      const double x = (0.5 + 0.5 * k) * std::exp(t);
      out.push_back({t, x, x, k});
    }
  return out;
}

}  // namespace

TEST(EstimateDerivatives, LinearDataExact) {
  const auto d = estimate_derivatives(sampled({0.0, 0.5, 1.0}, [](double t) { return t; }));
  ASSERT_EQ(d.size(), 3u);
  for (const auto& s : d) EXPECT_NEAR(s.xdot, 1.0, 1e-14);
}

TEST(EstimateDerivatives, QuadraticExactAtInteriorNodes) {
  std::vector<double> t;
  for (int i = 0; i <= 10; ++i) t.push_back(0.1 * i);
  const auto d = estimate_derivatives(sampled(t, [](double v) { return v * v; }));
  for (std::size_t i = 1; i + 1 < t.size(); ++i) EXPECT_NEAR(d[i].xdot, 2.0 * t[i], 1e-12);
  // One-sided second-order stencils are also exact for quadratics.
  EXPECT_NEAR(d.front().xdot, 0.0, 1e-12);
  EXPECT_NEAR(d.back().xdot, 2.0, 1e-12);
}

TEST(EstimateDerivatives, NonuniformQuadraticExact) {
  const std::vector<double> t{0.0, 0.1, 0.35, 0.4, 0.8, 1.0};
  const auto d = estimate_derivatives(sampled(t, [](double v) { return 3 * v * v - v; }));
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(d[i].xdot, 6 * t[i] - 1, 1e-11);
}

TEST(EstimateDerivatives, ExponentialWithinTolerance) {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.01 * i);
  const auto d = estimate_derivatives(sampled(t, [](double v) { return std::exp(v); }));
  ASSERT_EQ(d.size(), t.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(d[i].xdot - std::exp(t[i])));
  EXPECT_LE(worst, 1e-3);
}

TEST(EstimateDerivatives, SmoothedStencilIsMoreAccurate) {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.01 * i);
  const auto tr = sampled(t, [](double v) { return std::exp(v); });
  const auto d = estimate_derivatives(tr, DerivativeOptions{2});
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(d[i].xdot, std::exp(t[i]), 1e-5);
}

TEST(EstimateDerivatives, DuplicateTimesRejected) {
  Trajectory tr{"d", {0.0, 0.5, 0.5, 1.0}, {0, 1, 2, 3}};
  EXPECT_THROW(estimate_derivatives(tr), InputError);
  Trajectory shrt{"s", {0.0, 1.0}, {0, 1}};
  EXPECT_THROW(estimate_derivatives(shrt), InputError);
}

TEST(EstimateNormals, ExponentialGrowth) {
  const auto ne = estimate_normals(exponential_samples(5, 200));
  ASSERT_FALSE(ne.samples.empty());
  for (const auto& s : ne.samples) {
    EXPECT_NEAR(s.f_t, 0.0, 1e-6);
    EXPECT_NEAR(s.f_x, 1.0, 1e-6);
  }
}

TEST(EstimateNormals, ExponentialGrowthFromTrajectories) {
  std::vector<Trajectory> trajs;
  for (int k = 0; k < 5; ++k)
    trajs.push_back(integrate_rk4(linear_x_rhs(), 0.0, 0.5 + 0.5 * k, 1.0, 399, std::to_string(k)).trajectory);
  const auto d = estimate_all_derivatives(trajs, DerivativeOptions{2});
  const auto ne = estimate_normals(d);
  for (const auto& s : ne.samples) {
    EXPECT_NEAR(s.f_t, 0.0, 1e-6);
    EXPECT_NEAR(s.f_x, 1.0, 1e-6);
  }
}

TEST(EstimateNormals, ConstantField) {
  std::vector<DerivativeSample> in;
  for (std::size_t k = 0; k < 4; ++k)
    for (int i = 0; i < 100; ++i) in.push_back({0.01 * i, 0.01 * i + k, 1.0, k});
  const auto ne = estimate_normals(in);
  for (const auto& s : ne.samples) {
    EXPECT_NEAR(s.f_t, 0.0, 1e-10);
    EXPECT_NEAR(s.f_x, 0.0, 1e-10);
  }
}

TEST(EstimateNormals, RiccatiPartialsAtUnitPoint) {
  // Trajectories around x(1) = 1, i.e. K = 4 in x = 5t^2/(t^5 + K).
  std::vector<Trajectory> trajs;
  const double ks[] = {3.0, 3.5, 4.0, 4.5, 5.0};
  for (int k = 0; k < 5; ++k)
    trajs.push_back(integrate_rk4(riccati_rhs(), 0.8, riccati_solution(0.8, ks[k]), 1.2, 1000,
                                  std::to_string(k)).trajectory);
  const auto d = estimate_all_derivatives(trajs, DerivativeOptions{2});
  const auto ne = estimate_normals(d);
  const JetSample* best = nullptr;
  double bd = 1e300;
  for (const auto& s : ne.samples) {
    const double dd = std::hypot(s.t - 1.0, s.x - 1.0);
    if (dd < bd) {
      bd = dd;
      best = &s;
    }
  }
  ASSERT_NE(best, nullptr);
  ASSERT_LT(bd, 1e-3);
  EXPECT_NEAR(best->f_t, -4.0, 5e-2);
  EXPECT_NEAR(best->f_x, 0.0, 5e-2);
}

TEST(EstimateNormals, AffineModelsRecoveredExactly) {
  // Any f of total degree <= 1, on scattered samples with exact xdot.
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const double c0 = rng.normal(), ct = rng.normal(), cx = rng.normal();
    std::vector<DerivativeSample> in;
    for (std::size_t k = 0; k < 6; ++k)
      for (int i = 0; i < 60; ++i) {
        const double t = rng.uniform(), x = 2.0 * rng.uniform() - 1.0;
        in.push_back({t, x, c0 + ct * t + cx * x, k});
      }
    for (int deg : {1, 3}) {
      NormalOptions o;
      o.fit_degree = deg;
      o.neighbors = 40;
      o.x_weight = 1.0;
      const auto ne = estimate_normals(in, o);
      for (const auto& s : ne.samples) {
        EXPECT_NEAR(s.f_t, ct, 1e-8);
        EXPECT_NEAR(s.f_x, cx, 1e-8);
      }
    }
  }
}

TEST(EstimateNormals, SampleAccounting) {
  auto in = exponential_samples(3, 50);
  // A degenerate block: identical t and x for a whole neighbourhood.
  for (int i = 0; i < 60; ++i) in.push_back({5.0, 1.0, 1.0, 3});
  NormalOptions o;
  o.neighbors = 20;
  const auto ne = estimate_normals(in, o);
  EXPECT_EQ(ne.samples.size() + ne.dropped, in.size());
  EXPECT_GT(ne.dropped, 0u);
  ASSERT_EQ(ne.source_index.size(), ne.samples.size());
  for (std::size_t i = 1; i < ne.source_index.size(); ++i)
    EXPECT_LT(ne.source_index[i - 1], ne.source_index[i]);
  for (const auto& s : ne.samples) {
    EXPECT_GE(s.weight, kMinSampleWeight);
    EXPECT_LE(s.weight, kMaxSampleWeight);
    EXPECT_TRUE(std::isfinite(s.f_t) && std::isfinite(s.f_x) && std::isfinite(s.xdot));
  }
}

TEST(EstimateNormals, TooFewSamples) {
  std::vector<DerivativeSample> in{{0, 0, 0, 0}, {1, 1, 1, 0}, {2, 2, 2, 0}};
  EXPECT_THROW(estimate_normals(in), InputError);
}

TEST(EstimateNormals, Deterministic) {
  const auto in = exponential_samples(4, 80);
  const auto a = estimate_normals(in);
  const auto b = estimate_normals(in);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].f_t, b.samples[i].f_t);
    EXPECT_EQ(a.samples[i].f_x, b.samples[i].f_x);
  }
}
