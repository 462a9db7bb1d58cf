#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bsnse/estimates/invariants.hpp"
#include "bsnse/forcing/truncation.hpp"

using namespace bsnse;

namespace {

constexpr double kPi = std::numbers::pi;

ModeSetPtr box3() { return ModeSet::box(2 * kPi, 3); }

double dist(const VelocityField& a, const VelocityField& b) { return std::sqrt(norm_h2(a - b)); }

/// min over unit xi of nu |xi|^2 - lambda_bar^2 (sigma . xi)^2 / 2 by brute force.
double margin_by_search(double nu, double lbar2, double sx, double sy) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 10000; ++j) {
    const double a = 2 * kPi * j / 10000.0;
    const double d = sx * std::cos(a) + sy * std::sin(a);
    best = std::min(best, nu - lbar2 * d * d / 2.0);
  }
  return best;
}

ForcingModel saturated(double c1, double c2, double n0) {
  ForcingParams p;
  p.kind = ForcingKind::saturated;
  p.a0_amp = 1.0;
  p.a0_mode = {1, 1};
  p.c1 = c1;
  p.c2 = c2;
  p.n0 = n0;
  return ForcingModel(p, 1.0);
}

}  // namespace

TEST(Forcing, ZeroModelIsZero) {
  const auto ms = box3();
  std::mt19937_64 rng(1);
  const auto u = random_field(ms, rng), z = random_field(ms, rng);
  EXPECT_EQ(norm_h2(forcing_eval(ForcingModel::zero(), 0.3, u, z)), 0.0);
}

TEST(Forcing, LinearDampingReturnsMinusU) {
  const auto ms = box3();
  std::mt19937_64 rng(2);
  ForcingParams p;
  p.kind = ForcingKind::linear;
  p.a1 = -1.0;
  const ForcingModel m(p, 1.0);
  const auto u = random_field(ms, rng), z = random_field(ms, rng);
  EXPECT_LT(dist(m.eval(0.5, u, z), -1.0 * u), 1e-14 * std::sqrt(norm_h2(u)));
}

TEST(Forcing, SaturatedInsideBallIsAffine) {
  const auto ms = box3();
  std::mt19937_64 rng(3);
  const ForcingModel m = saturated(0.2, 0.3, 5.0);
  const auto u = random_field(ms, rng);
  auto z = random_field(ms, rng);
  z *= 2.0 / std::sqrt(norm_h2(z));
  VelocityField expect = m.a0(ms, 0.4);
  expect.axpy(-0.2, u);
  expect.axpy(0.3, z);
  EXPECT_LT(dist(m.eval(0.4, u, z), expect), 1e-14);
}

TEST(Forcing, SaturatedOutsideBallUsesRetraction) {
  const auto ms = box3();
  std::mt19937_64 rng(4);
  const ForcingModel m = saturated(0.0, 1.0, 1.0);
  auto z = random_field(ms, rng);
  z *= 4.0 / std::sqrt(norm_h2(z));
  const VelocityField f = m.eval(0.0, VelocityField(ms), z) - m.a0(ms, 0.0);
  EXPECT_NEAR(std::sqrt(norm_h2(f)), 1.0, 1e-14);
  EXPECT_LT(dist(f, 0.25 * z), 1e-14);
}

TEST(Forcing, ModeSetMismatchThrows) {
  std::mt19937_64 rng(5);
  const auto u = random_field(box3(), rng);
  const auto z = random_field(ModeSet::box(2 * kPi, 2), rng);
  EXPECT_THROW(saturated(0.1, 0.1, 1.0).eval(0.0, u, z), ModeSetMismatch);
}

TEST(Margin, ClosedFormMatchesSearch) {
  EXPECT_DOUBLE_EQ(superparabolicity_margin(1.0, 2.0, SigmaSchedule::constant(0.5, 0.0)), 0.75);
  EXPECT_NEAR(margin_by_search(1.0, 2.0, 0.5, 0.0), 0.75, 1e-12);
  EXPECT_DOUBLE_EQ(superparabolicity_margin(2.0, 3.0, SigmaSchedule::constant(0.0, 0.0)), 2.0);
  EXPECT_NEAR(superparabolicity_margin(0.1, 2.0, SigmaSchedule::constant(1.0, 0.0)), -0.9, 1e-15);
  EXPECT_NEAR(margin_by_search(0.1, 2.0, 1.0, 0.0), -0.9, 1e-12);
  // Oblique sigma: the search only sees |sigma|.
  EXPECT_NEAR(superparabolicity_margin(1.0, 1.5, SigmaSchedule::constant(0.3, 0.4)),
              margin_by_search(1.0, 1.5, 0.3, 0.4), 1e-7);
}

TEST(Truncation, CutoffValues) {
  EXPECT_EQ(truncate_R_M(3.0, 3.0), 1.0);
  EXPECT_EQ(truncate_R_M(3.0, 0.0), 1.0);
  EXPECT_EQ(truncate_R_M(3.0, 4.0), 0.0);
  EXPECT_EQ(truncate_R_M(3.0, 9.0), 0.0);
  EXPECT_DOUBLE_EQ(truncate_R_M(3.0, 3.5), 0.5);
  for (int j = 1; j < 100; ++j) {
    EXPECT_GT(truncate_R_M(3.0, 3.0 + 0.01 * j), 0.0);
    EXPECT_LT(truncate_R_M(3.0, 3.0 + 0.01 * j), 1.0);
  }
}

TEST(Truncation, CutoffIsC2WithLipschitzBound) {
  const double M = 2.0, h = 1e-4;
  auto d1 = [&](double x) { return (truncate_R_M(M, x + h) - truncate_R_M(M, x - h)) / (2 * h); };
  auto d2 = [&](double x) { return (truncate_R_M(M, x + h) - 2 * truncate_R_M(M, x) + truncate_R_M(M, x - h)) / (h * h); };
  for (double x : {M, M + 1.0}) {
    EXPECT_NEAR(d1(x), 0.0, 1e-6);
    EXPECT_NEAR(d2(x), 0.0, 20 * h);  // one-sided jump of the third derivative
  }
  double lip = 0.0;
  for (double x = M - 0.5; x < M + 1.5; x += 1e-3) lip = std::max(lip, std::abs(d1(x)));
  EXPECT_LE(lip, 15.0 / 8.0 + 1e-6);
  EXPECT_NEAR(lip, 15.0 / 8.0, 1e-3);
}

TEST(Truncation, RetractionExamples) {
  const auto ms = box3();
  std::mt19937_64 rng(6);
  auto z = random_field(ms, rng);
  const double n = 3.0;
  z *= (n / 2) / std::sqrt(norm_h2(z));
  EXPECT_EQ(dist(retract_phi_n(n, z), z), 0.0);
  z *= 4.0;
  EXPECT_LT(dist(retract_phi_n(n, z), 0.5 * z), 1e-14);
  EXPECT_EQ(norm_h2(retract_phi_n(n, VelocityField(ms))), 0.0);
}

TEST(Truncation, RetractionIsOneLipschitz) {
  const auto ms = box3();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> r(0.0, 3.0);
  for (int s = 0; s < 1000; ++s) {
    auto a = random_field(ms, rng), b = random_field(ms, rng);
    a *= r(rng) / std::sqrt(norm_h2(a));
    b *= r(rng) / std::sqrt(norm_h2(b));
    EXPECT_LE(dist(retract_phi_n(1.0, a), retract_phi_n(1.0, b)), dist(a, b) * (1 + 1e-14));
  }
}

TEST(Truncation, InsideAllRadiiMatchesUntruncated) {
  const auto ms = box3();
  std::mt19937_64 rng(8);
  TruncationSpec spec{true, 10.0, 4.0, [](double) { return 2.0; }};
  const Driver d(ms, 0.5, SigmaSchedule::constant(0.3, 0.1), saturated(0.2, 0.3, 1.0), spec);
  auto y = random_field(ms, rng), z = random_field(ms, rng);
  y *= 5.0 / std::sqrt(norm_h2(y));
  z *= 3.0 / std::sqrt(norm_h2(z));
  EXPECT_EQ(dist(d(0.2, y, z), d.untruncated(0.2, y, z)), 0.0);
  EXPECT_FALSE(d.truncation_active(0.2, y, z));
}

TEST(Truncation, OutsideStateRadiusIsZero) {
  const auto ms = box3();
  std::mt19937_64 rng(9);
  TruncationSpec spec{true, 2.0, 4.0, {}};
  const Driver d(ms, 0.5, SigmaSchedule::constant(0.3, 0.1), saturated(0.2, 0.3, 1.0), spec);
  auto y = random_field(ms, rng);
  y *= 3.5 / std::sqrt(norm_h2(y));
  EXPECT_EQ(norm_h2(d(0.1, y, random_field(ms, rng))), 0.0);
}

TEST(Truncation, DefaultDominatorPassesValidation) {
  const auto ms = box3();
  std::mt19937_64 rng(10);
  const Driver d = assemble_truncated_driver(ms, TruncationSpec{true, 3.0, 5.0, {}}, saturated(0.2, 0.3, 1.0), 0.5,
                                             SigmaSchedule::constant(0.3, 0.1), rng);
  EXPECT_LE(d.sampled_domination_ratio(1000, rng, 1.0), 1.0);
}

TEST(Truncation, UndersizedDominatorIsRejected) {
  const auto ms = box3();
  std::mt19937_64 rng(11);
  TruncationSpec spec{true, 3.0, 5.0, [](double) { return 1e-3; }};
  EXPECT_THROW(assemble_truncated_driver(ms, spec, saturated(0.2, 0.3, 1.0), 0.5, SigmaSchedule::constant(0.3, 0.1), rng),
               PreconditionError);
}

TEST(Truncation, SampledMonotonicityHoldsOnFreshSamples) {
  const auto ms = box3();
  std::mt19937_64 rng(12);
  const Driver d = assemble_truncated_driver(ms, TruncationSpec{true, 3.0, 5.0, {}}, saturated(0.2, 0.3, 1.0), 0.5,
                                             SigmaSchedule::constant(0.3, 0.1), rng);
  const double C = sampled_monotonicity_constant(d, 1000, rng, 1.0);
  EXPECT_TRUE(std::isfinite(C));
  const double fresh = sampled_monotonicity_constant(d, 1000, rng, 1.0);
  EXPECT_LE(fresh, 2.0 * std::max(C, 0.0) + 1e-12);
}

TEST(Forcing, ShippedModelsSatisfyBundles) {
  const auto ms = box3();
  ForcingParams lin;
  lin.kind = ForcingKind::linear;
  lin.a0_amp = 0.7;
  lin.a0_omega = 2.0;
  lin.a1 = -0.4;
  lin.a2 = 0.3;
  for (const ForcingModel& m : {ForcingModel(lin, 1.0), saturated(0.2, 0.3, 1.0)}) {
    std::mt19937_64 rng(13);
    const auto reports =
        forcing_suite(ms, 1000, rng, m, 0.5, SigmaSchedule::constant(0.3, 0.1), TruncationSpec{true, 3.0, 5.0, {}});
    ASSERT_FALSE(reports.empty());
    for (const auto& r : reports) EXPECT_EQ(r.violations, 0u) << to_string(m.kind()) << " " << r.name;
  }
}
