#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "compcap/capacity.hpp"
#include "compcap/distribution.hpp"
#include "compcap/exact.hpp"
#include "compcap/isa_model.hpp"
#include "compcap/sequence_counter.hpp"
#include "test_support.hpp"

namespace compcap {
namespace {

std::string read_data(const std::string& name) {
  std::ifstream in(std::string(COMPCAP_SOURCE_DIR) + "/data/" + name);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ModelErrorKind error_kind(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ModelError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a ModelError for " << text;
  return ModelErrorKind::kSyntax;
}

TEST(ExactTest, ParsesRationalForms) {
  EXPECT_EQ(parse_rational("7/5"), Rational(7, 5));
  EXPECT_EQ(parse_rational("1.4"), Rational(7, 5));
  EXPECT_EQ(parse_rational("-0.25"), Rational(-1, 4));
  EXPECT_EQ(parse_rational("3e2"), Rational(300));
  EXPECT_EQ(parse_rational("010/08"), Rational(5, 4));
  EXPECT_EQ(parse_rational("2.5E-1"), Rational(1, 4));
  EXPECT_THROW(parse_rational("1/0"), std::invalid_argument);
  EXPECT_THROW(parse_rational("abc"), std::invalid_argument);
  EXPECT_THROW(parse_rational(""), std::invalid_argument);
  EXPECT_THROW(parse_rational("1..2"), std::invalid_argument);
}

TEST(ExactTest, DoublesReadAsTheirShortestDecimal) {
  EXPECT_EQ(rational_from_double(1.2), Rational(6, 5));
  EXPECT_EQ(rational_from_double(0.1), Rational(1, 10));
  EXPECT_EQ(rational_from_double(20.0), Rational(20));
}

TEST(ExactTest, Log2OfBigIntegers) {
  EXPECT_DOUBLE_EQ(log2_big(BigInt(1)), 0.0);
  EXPECT_DOUBLE_EQ(log2_big(BigInt(1) << 200), 200.0);
  const BigInt big = (BigInt(139) << 300) + 12345;
  EXPECT_NEAR(log2_big(big), 300.0 + std::log2(139.0), 1e-12);
  EXPECT_THROW(log2_big(BigInt(0)), std::domain_error);
}

TEST(IsaModelTest, ParsesTwoClassModel) {
  const auto set = parse_model(R"({"name": "toy", "parameters": [], "classes": [
      {"name": "fast", "count": 2, "time": {"base": 1}},
      {"name": "slow", "count": 1, "time": {"base": 2}}]})");
  ASSERT_EQ(set.members().size(), 2u);
  EXPECT_EQ(total_count(bind_parameters(set, {})), 3);
}

TEST(IsaModelTest, BundledMixModelMatchesItsEquation) {
  const auto set = parse_model(read_data("mix.json"));
  const auto& m = set.members();
  ASSERT_EQ(m.size(), 5u);
  EXPECT_EQ(std::get<InstructionClass>(m[0]).count, BigInt(1) << 28);
  EXPECT_EQ(std::get<InstructionClass>(m[1]).count, BigInt(1) << 26);
  EXPECT_EQ(std::get<InstructionClass>(m[2]).count, BigInt(1) << 26);
  EXPECT_EQ(std::get<InstructionClass>(m[3]).count, BigInt(1) << 25);
  const auto& move = std::get<InstructionFamily>(m[4]);
  EXPECT_EQ(move.count_per_term, BigInt(1) << 25);
  EXPECT_EQ(move.time_base.base, 1);
  EXPECT_EQ(move.step, 2);
  EXPECT_EQ(move.num_terms, (BigInt(1) << 25) + 1);

  const BigInt expected = (BigInt(1) << 28) + (BigInt(1) << 26) + (BigInt(1) << 26) + (BigInt(1) << 25) +
                          (BigInt(1) << 25) * ((BigInt(1) << 25) + 1);
  EXPECT_EQ(total_count(bind_parameters(set, {})), expected);
}

TEST(IsaModelTest, BundledMmixModelCountsAndTimes) {
  const auto set = parse_model(read_data("mmix.json"));
  ASSERT_EQ(set.parameters(), std::vector<std::string>{"mu"});
  const auto bound = bind_parameters(set, {{"mu", Rational(7, 5)}});
  const std::vector<std::int64_t> multipliers{139, 32, 5, 17, 3, 4, 2, 4, 46, 2, 46};
  ASSERT_EQ(bound.members.size(), multipliers.size());
  for (std::size_t i = 0; i < multipliers.size(); ++i) {
    EXPECT_EQ(bound.members[i].count, BigInt(multipliers[i]) << 24) << bound.members[i].name;
  }
  EXPECT_EQ(bound.find("load_store")->time, Rational(12, 5));
  EXPECT_EQ(bound.find("long_memory")->time, Rational(29));
  EXPECT_EQ(bound.find("double_memory")->time, Rational(24, 5));
}

TEST(IsaModelTest, CountGrammar) {
  using nlohmann::json;
  EXPECT_EQ(parse_count(json("139*2^24"), "x"), BigInt(139) << 24);
  EXPECT_EQ(parse_count(json("2^31"), "x"), BigInt(1) << 31);
  EXPECT_EQ(parse_count(json(" 12 "), "x"), 12);
  EXPECT_EQ(parse_count(json(7), "x"), 7);
  EXPECT_EQ(parse_count(json("010"), "x"), 10);
  EXPECT_EQ(parse_count(json("09*2^4"), "x"), 144);
  EXPECT_THROW(parse_count(json(0), "x"), ModelError);
  EXPECT_THROW(parse_count(json(-3), "x"), ModelError);
  EXPECT_THROW(parse_count(json("3*4^2"), "x"), ModelError);
  EXPECT_THROW(parse_count(json(1.5), "x"), ModelError);
}

TEST(IsaModelTest, RejectsInvalidModels) {
  EXPECT_EQ(error_kind(R"({"name": "x", "classes": [)"), ModelErrorKind::kSyntax);
  EXPECT_EQ(error_kind(R"({"name": "x", "parameters": [], "classes": [
      {"name": "a", "count": 1, "time": {"base": 1, "coeffs": {"nu": 2}}}]})"),
            ModelErrorKind::kUndeclaredParameter);
  EXPECT_EQ(error_kind(R"({"name": "x", "classes": [
      {"name": "a", "count": 1, "time": 1}, {"name": "a", "count": 2, "time": 2}]})"),
            ModelErrorKind::kValidation);
  EXPECT_EQ(error_kind(R"({"name": "x", "classes": [{"name": "a", "count": 0, "time": 1}]})"),
            ModelErrorKind::kValidation);
  EXPECT_EQ(error_kind(R"({"name": "x", "classes": [
      {"name": "a", "count": 1, "time": 1, "family": {"step": 0, "terms": 3}}]})"),
            ModelErrorKind::kValidation);
  EXPECT_EQ(error_kind(R"({"name": "x", "classes": []})"), ModelErrorKind::kValidation);
}

TEST(IsaModelTest, SyntaxErrorReportsPosition) {
  try {
    parse_model("{\"name\": \"x\",, }");
    FAIL();
  } catch (const ModelError& e) {
    ASSERT_TRUE(e.position().has_value());
    EXPECT_EQ(*e.position(), 14u);
  }
}

TEST(IsaModelTest, BindEvaluatesAffineTimes) {
  const auto set = parse_model(R"({"name": "m", "parameters": ["mu"], "classes": [
      {"name": "a", "count": 1, "time": {"base": 1, "coeffs": {"mu": 20}}},
      {"name": "b", "count": 1, "time": {"base": 2, "coeffs": {"mu": 2}}}]})");
  auto bound = bind_parameters(set, {{"mu", parse_rational("1.4")}});
  EXPECT_EQ(bound.members[0].time, 29);
  bound = bind_parameters(set, {{"mu", 0}});
  EXPECT_EQ(bound.members[1].time, 2);
}

TEST(IsaModelTest, BindErrors) {
  const auto set = parse_model(R"({"name": "m", "parameters": ["mu"], "classes": [
      {"name": "a", "count": 1, "time": {"base": 0, "coeffs": {"mu": 1}}}]})");
  try {
    bind_parameters(set, {});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.kind(), ModelErrorKind::kMissingParameter);
  }
  try {
    bind_parameters(set, {{"mu", 1}, {"nu", 1}});
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.kind(), ModelErrorKind::kUndeclaredParameter);
  }
  // mu = 0 gives time 0.
  EXPECT_THROW(bind_parameters(set, {{"mu", 0}}), ModelError);
}

TEST(IsaModelTest, BindIsIdempotentWithoutParameters) {
  const auto set = parse_model(read_data("mix.json"));
  const auto once = bind_parameters(set, {});
  const auto twice = bind_parameters(set, {});
  ASSERT_EQ(once.members.size(), twice.members.size());
  for (std::size_t i = 0; i < once.members.size(); ++i) {
    EXPECT_EQ(once.members[i].time, twice.members[i].time);
    EXPECT_EQ(once.members[i].count, twice.members[i].count);
  }
}

TEST(IsaModelTest, TotalCountSingleClass) {
  EXPECT_EQ(total_count(testing::bound_classes({{1, 3}})), 1);
}

// Property: serialization round-trips for random valid models.
TEST(IsaModelTest, SerializeParseRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> small(1, 40);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<InstructionMember> members;
    const int n = small(rng) % 6 + 1;
    for (int i = 0; i < n; ++i) {
      TimeExpression time{Rational(small(rng), small(rng)), {}};
      if (coin(rng)) time.coeffs["mu"] = Rational(small(rng), small(rng));
      BigInt count = BigInt(small(rng)) << (small(rng) % 3 == 0 ? small(rng) : 0);
      if (coin(rng)) {
        members.emplace_back(InstructionFamily{"f" + std::to_string(i), count, time, Rational(small(rng), 3),
                                               BigInt(small(rng))});
      } else {
        members.emplace_back(InstructionClass{"c" + std::to_string(i), count, time});
      }
    }
    const InstructionSet set("random", {"mu"}, members);
    const std::string text = model_to_json(set).dump();
    EXPECT_EQ(parse_model(text), set) << text;
  }
}

// Property: a one-term family behaves exactly like a plain class.
TEST(IsaModelTest, SingleTermFamilyEqualsClass) {
  BoundInstructionSet with_family = testing::bound_classes({{3, 2}, {5, 3}});
  with_family.members.push_back(testing::bound_family("f", 4, 1, 7, 1));
  const BoundInstructionSet collapsed = collapse_single_term_families(with_family);
  ASSERT_FALSE(collapsed.members.back().is_family());

  const auto a = solve_capacity(with_family);
  const auto b = solve_capacity(collapsed);
  EXPECT_NEAR(a.capacity_bits, b.capacity_bits, 1e-12);
  const auto da = optimal_distribution(with_family, a);
  const auto db = optimal_distribution(collapsed, b);
  for (std::size_t i = 0; i < da.masses.size(); ++i) EXPECT_NEAR(da.masses[i].mass, db.masses[i].mass, 1e-12);
  const auto ca = count_sequences(with_family, 30);
  const auto cb = count_sequences(collapsed, 30);
  EXPECT_EQ(ca.counts, cb.counts);
}

}  // namespace
}  // namespace compcap
