#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "compcap/exact.hpp"

namespace compcap {

enum class ModelErrorKind {
  kSyntax,
  kValidation,
  kMissingParameter,
  kUndeclaredParameter,
};

// Raised for malformed or inconsistent instruction-set models. Syntax errors
// carry the byte offset reported by the JSON parser.
class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrorKind kind, const std::string& message,
             std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), kind_(kind), position_(position) {}

  ModelErrorKind kind() const { return kind_; }
  std::optional<std::size_t> position() const { return position_; }

 private:
  ModelErrorKind kind_;
  std::optional<std::size_t> position_;
};

// base + sum(coeff * parameter), in time units.
struct TimeExpression {
  Rational base = 0;
  std::map<std::string, Rational> coeffs;

  bool operator==(const TimeExpression&) const = default;
};

struct InstructionClass {
  std::string name;
  BigInt count = 1;
  TimeExpression time;

  bool operator==(const InstructionClass&) const = default;
};

// Instructions of time time_base + F*step for F = 0 .. num_terms-1, each time
// shared by count_per_term distinct instructions.
struct InstructionFamily {
  std::string name;
  BigInt count_per_term = 1;
  TimeExpression time_base;
  Rational step = 1;
  BigInt num_terms = 1;

  bool operator==(const InstructionFamily&) const = default;
};

using InstructionMember = std::variant<InstructionClass, InstructionFamily>;

const std::string& member_name(const InstructionMember& member);

class InstructionSet {
 public:
  InstructionSet(std::string name, std::vector<std::string> parameters,
                 std::vector<InstructionMember> members);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& parameters() const { return parameters_; }
  const std::vector<InstructionMember>& members() const { return members_; }

  bool declares(std::string_view parameter) const;

  bool operator==(const InstructionSet&) const = default;

 private:
  std::string name_;
  std::vector<std::string> parameters_;
  std::vector<InstructionMember> members_;
};

using ParameterBinding = std::map<std::string, Rational>;

// A member with every time evaluated. For families `time` is the first term.
struct BoundMember {
  std::string name;
  BigInt count;
  Rational time;
  std::optional<Rational> step;
  BigInt terms = 1;

  bool is_family() const { return step.has_value(); }
  // Number of individual instructions represented.
  BigInt instruction_count() const { return count * terms; }
};

struct BoundInstructionSet {
  std::string name;
  std::vector<BoundMember> members;

  const BoundMember* find(std::string_view member_name) const;
};

// Counts: integer, or "a*2^b" / "2^b" strings. Rejects values < 1.
BigInt parse_count(const nlohmann::json& value, std::string_view what);
// Rational from a JSON number (exact decimal) or "p/q" string.
Rational parse_rational_json(const nlohmann::json& value, std::string_view what);
TimeExpression parse_time(const nlohmann::json& value, std::string_view what);

InstructionSet parse_model(std::string_view text);
InstructionSet model_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const InstructionSet& set);

Rational evaluate(const TimeExpression& time, const ParameterBinding& binding);

// Every declared parameter must be bound and no other names may appear.
BoundInstructionSet bind_parameters(const InstructionSet& set, const ParameterBinding& binding);

BigInt total_count(const BoundInstructionSet& set);

// Replaces single-term families by plain classes.
BoundInstructionSet collapse_single_term_families(const BoundInstructionSet& set);

}  // namespace compcap
