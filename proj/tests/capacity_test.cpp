#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "compcap/capacity.hpp"
#include "test_support.hpp"

namespace compcap {
namespace {

using testing::bound_classes;
using testing::bound_family;

const double kToyCapacity = std::log2(1.0 + std::sqrt(2.0));

BoundInstructionSet load(const std::string& name, const ParameterBinding& binding = {}) {
  std::ifstream in(std::string(COMPCAP_SOURCE_DIR) + "/data/" + name);
  std::stringstream s;
  s << in.rdbuf();
  return bind_parameters(parse_model(s.str()), binding);
}

TEST(CharacteristicTest, TwoClassValue) {
  EXPECT_DOUBLE_EQ(eval_characteristic(bound_classes({{2, 1}, {1, 2}}), 1.0), 1.25);
}

TEST(CharacteristicTest, FamilyClosedFormMatchesThreeTerms) {
  BoundInstructionSet set;
  set.members.push_back(bound_family("f", 1, 1, 2, 3));
  EXPECT_NEAR(eval_characteristic(set, 1.0), 0.65625, 1e-15);
}

TEST(CharacteristicTest, RootOfToySet) {
  EXPECT_NEAR(eval_characteristic(bound_classes({{2, 1}, {1, 2}}), kToyCapacity), 1.0, 1e-12);
}

TEST(CharacteristicTest, FamilyAtZeroCountsTerms) {
  BoundInstructionSet set;
  set.members.push_back(bound_family("f", 3, 1, 2, 1000));
  EXPECT_DOUBLE_EQ(eval_characteristic(set, 0.0), 3000.0);
}

// Closed geometric form against a term-by-term sum, including y -> 0 where
// the ratio approaches one.
TEST(CharacteristicTest, FamilyAgainstDirectSum) {
  for (double step : {0.5, 1.0, 2.0}) {
    for (double terms : {2.0, 17.0, 5000.0}) {
      for (double y : {1e-12, 1e-7, 1e-3, 0.3, 2.0, 9.0}) {
        long double direct = 0;
        for (int f = 0; f < static_cast<int>(terms); ++f) direct += std::pow(2.0L, -static_cast<long double>(step * f * y));
        const double closed = std::exp2(log2_geometric_factor(step, terms, y));
        EXPECT_NEAR(closed / static_cast<double>(direct), 1.0, 1e-13) << step << " " << terms << " " << y;

        long double weighted = 0;
        for (int f = 0; f < static_cast<int>(terms); ++f) {
          weighted += f * std::pow(2.0L, -static_cast<long double>(step * f * y));
        }
        const double mean = static_cast<double>(weighted / direct);
        EXPECT_NEAR(geometric_mean_index(step, terms, y), mean, 1e-9 * std::max(1.0, mean));
      }
    }
  }
}

TEST(CharacteristicTest, DerivativeMatchesFiniteDifference) {
  BoundInstructionSet set = bound_classes({{3, 1}, {5, Rational(5, 2)}, {7, 4}});
  set.members.push_back(bound_family("f", 2, 1, 2, 40));
  for (double y : {0.0, 0.2, 1.0, 2.5}) {
    const double h = 1e-6;
    auto g = [&](double v) { return eval_characteristic(set, v); };
    // One-sided second-order stencil at the boundary.
    const double fd = y > 0 ? (g(y + h) - g(y - h)) / (2 * h) : (-3 * g(y) + 4 * g(y + h) - g(y + 2 * h)) / (2 * h);
    EXPECT_NEAR(eval_characteristic_derivative(set, y) / fd, 1.0, 1e-5) << y;
  }
}

TEST(CharacteristicTest, DecreasingInY) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto set = testing::random_set(rng, 6, 1000, 20);
    set.members.push_back(bound_family("f", 5, 1, 3, 100));
    double previous = eval_characteristic(set, 0.0);
    for (double y = 0.05; y < 12.0; y += 0.05) {
      const double value = eval_characteristic(set, y);
      EXPECT_LT(value, previous);
      previous = value;
    }
  }
}

TEST(SolveCapacityTest, TwoUnitInstructionsGiveOneBit) {
  const auto r = solve_capacity(bound_classes({{2, 1}}));
  EXPECT_NEAR(r.capacity_bits, 1.0, 1e-12);
  EXPECT_LE(r.residual, kResidualBound);
}

TEST(SolveCapacityTest, SingleInstructionHasZeroCapacity) {
  const auto r = solve_capacity(bound_classes({{1, 5}}));
  EXPECT_EQ(r.capacity_bits, 0.0);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(SolveCapacityTest, ToySetClosedForm) {
  const auto r = solve_capacity(bound_classes({{2, 1}, {1, 2}}));
  EXPECT_NEAR(r.capacity_bits, kToyCapacity, 1e-12);
  EXPECT_NEAR(r.capacity_bits, 1.2715533, 1e-7);
  EXPECT_LE(r.bracket_width, kDefaultTolerance);
  EXPECT_LE(r.residual, kResidualBound);
}

// Reference roots computed with 40-digit arithmetic (mpmath findroot).
TEST(SolveCapacityTest, MixModel) {
  const auto r = solve_capacity(load("mix.json"));
  EXPECT_NEAR(r.capacity_bits, 28.169925002503934, 1e-9);
  EXPECT_NEAR(r.capacity_bits, 25.0 + std::log2(9.0), 1e-3);
  EXPECT_LE(r.residual, kResidualBound);
}

TEST(SolveCapacityTest, MmixModel) {
  EXPECT_NEAR(solve_capacity(load("mmix.json", {{"mu", 1}})).capacity_bits, 31.118941073070659, 1e-9);
  EXPECT_NEAR(solve_capacity(load("mmix.json", {{"mu", Rational(6, 5)}})).capacity_bits, 31.118941072866868,
              1e-9);
}

TEST(SolveCapacityTest, ToleranceRange) {
  const auto set = bound_classes({{2, 1}, {1, 2}});
  EXPECT_THROW(solve_capacity(set, 1e-15), std::invalid_argument);
  EXPECT_THROW(solve_capacity(set, 1e-3), std::invalid_argument);
  for (double tol : {1e-13, 1e-9, 1e-6}) {
    const auto r = solve_capacity(set, tol);
    EXPECT_LE(r.bracket_width, tol);
    EXPECT_LE(r.residual, kResidualBound);
    EXPECT_NEAR(r.capacity_bits, kToyCapacity, tol);
  }
}

TEST(SolveCapacityTest, AgreesWithLinearScaleBisection) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto set = testing::random_set(rng, 5, 200, 12);
    const auto r = solve_capacity(set);
    EXPECT_NEAR(r.capacity_bits, testing::reference_capacity(set), 1e-11);
    EXPECT_LE(r.residual, kResidualBound);
  }
}

TEST(SolveCapacityTest, IdenticalClassesClosedForm) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> count(1, 1000000);
  std::uniform_int_distribution<std::int64_t> time(1, 64);
  for (int trial = 0; trial < 100; ++trial) {
    const std::int64_t s = count(rng);
    const std::int64_t t = time(rng);
    EXPECT_NEAR(solve_capacity(bound_classes({{s, t}})).capacity_bits, std::log2(double(s)) / double(t), 1e-12);
  }
}

TEST(SolveCapacityTest, MonotoneUnderAdditionAndSlowdown) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::int64_t> count(1, 100);
  std::uniform_int_distribution<std::int64_t> time(1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    auto set = testing::random_set(rng, 5, 100, 10);
    const double base = solve_capacity(set).capacity_bits;

    auto extended = set;
    extended.members.push_back(bound_classes({{count(rng), time(rng)}}).members.front());
    extended.members.back().name = "extra";
    EXPECT_GE(solve_capacity(extended).capacity_bits, base - 1e-12);

    auto slower = set;
    slower.members[trial % slower.members.size()].time += Rational(1, 3);
    EXPECT_LE(solve_capacity(slower).capacity_bits, base + 1e-12);
  }
}

TEST(SolveCapacityTest, TimeScalingLaw) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    auto set = testing::random_set(rng, 5, 10000, 30);
    set.members.push_back(bound_family("f", 3, 2, 3, 50));
    const double base = solve_capacity(set).capacity_bits;
    for (int lambda : {2, 3, 10}) {
      auto scaled = set;
      for (auto& m : scaled.members) {
        m.time *= lambda;
        if (m.step) *m.step *= lambda;
      }
      const double c = solve_capacity(scaled).capacity_bits;
      EXPECT_NEAR(c * lambda / base, 1.0, 1e-10);
    }
  }
}

TEST(SolveCapacityTest, KraftSumIsOne) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto set = testing::random_set(rng, 6, 1000, 20);
    const auto r = solve_capacity(set);
    long double sum = 0;
    for (const auto& [tau, m] : testing::expand(set)) {
      sum += static_cast<long double>(m) * std::pow(2.0L, -static_cast<long double>(tau * r.capacity_bits));
    }
    EXPECT_NEAR(static_cast<double>(sum), 1.0, 1e-10);
  }
}

TEST(SolveCapacityTest, TopContributionsSorted) {
  const auto set = bound_classes({{1, 2}, {2, 1}});
  const auto r = solve_capacity(set);
  const auto top = top_contributions(set, r, 10);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].member, "c1");
  EXPECT_NEAR(top[0].mass + top[1].mass, 1.0, 1e-12);
  EXPECT_EQ(top_contributions(set, r, 1).size(), 1u);
}

}  // namespace
}  // namespace compcap
