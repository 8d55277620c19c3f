#include "compcap/isa_model.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace compcap {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& message) {
  throw ModelError(ModelErrorKind::kValidation, message);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

BigInt parse_count_text(const std::string& text, std::string_view what) {
  auto bad = [&]() -> BigInt {
    invalid(std::string(what) + ": malformed count '" + text + "' (expected integer or a*2^b)");
  };
  if (all_digits(text)) return parse_decimal_integer(text);
  std::string mult = "1";
  std::string power = text;
  if (auto star = text.find('*'); star != std::string::npos) {
    mult = trim(std::string_view(text).substr(0, star));
    power = trim(std::string_view(text).substr(star + 1));
  }
  if (power.rfind("2^", 0) != 0) return bad();
  const std::string exponent = trim(std::string_view(power).substr(2));
  if (!all_digits(mult) || !all_digits(exponent) || exponent.size() > 5) return bad();
  const unsigned long b = std::stoul(exponent);
  if (b > 4096) invalid(std::string(what) + ": exponent too large in '" + text + "'");
  return parse_decimal_integer(mult) << b;
}

json count_to_json(const BigInt& count) {
  const auto shift = count > 0 ? boost::multiprecision::lsb(count) : 0u;
  if (shift >= 4) {
    BigInt mult = count >> shift;
    if (mult == 1) return "2^" + std::to_string(shift);
    return mult.str() + "*2^" + std::to_string(shift);
  }
  if (count <= BigInt(std::numeric_limits<std::uint64_t>::max())) {
    return static_cast<std::uint64_t>(count);
  }
  return count.str();
}

json rational_to_json(const Rational& value) {
  if (is_integer(value)) {
    const BigInt& n = boost::multiprecision::numerator(value);
    if (n >= 0 && n <= BigInt(std::numeric_limits<std::int64_t>::max())) {
      return static_cast<std::int64_t>(n);
    }
  }
  return to_string(value);
}

json time_to_json(const TimeExpression& time) {
  json coeffs = json::object();
  for (const auto& [name, value] : time.coeffs) coeffs[name] = rational_to_json(value);
  return json{{"base", rational_to_json(time.base)}, {"coeffs", coeffs}};
}

const json& require(const json& obj, const char* key, std::string_view what) {
  auto it = obj.find(key);
  if (it == obj.end()) invalid(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::string_view what) {
  const json& v = require(obj, key, what);
  if (!v.is_string()) invalid(std::string(what) + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

void check_references(const TimeExpression& time, const std::set<std::string>& declared,
                      std::string_view what) {
  for (const auto& [name, coeff] : time.coeffs) {
    if (!declared.count(name)) {
      throw ModelError(ModelErrorKind::kUndeclaredParameter,
                       std::string(what) + ": undeclared parameter '" + name + "'");
    }
  }
}

}  // namespace

const std::string& member_name(const InstructionMember& member) {
  return std::visit([](const auto& m) -> const std::string& { return m.name; }, member);
}

InstructionSet::InstructionSet(std::string name, std::vector<std::string> parameters,
                               std::vector<InstructionMember> members)
    : name_(std::move(name)), parameters_(std::move(parameters)), members_(std::move(members)) {
  if (members_.empty()) invalid("instruction set '" + name_ + "' has no members");
  std::set<std::string> declared;
  for (const auto& p : parameters_) {
    if (p.empty()) invalid("empty parameter name");
    if (!declared.insert(p).second) invalid("duplicate parameter '" + p + "'");
  }
  std::set<std::string> seen;
  for (const auto& member : members_) {
    const std::string& name = member_name(member);
    if (name.empty()) invalid("member with empty name");
    if (!seen.insert(name).second) invalid("duplicate member name '" + name + "'");
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          const TimeExpression* time = nullptr;
          if constexpr (std::is_same_v<T, InstructionClass>) {
            if (m.count < 1) invalid("member '" + name + "': count must be >= 1");
            time = &m.time;
          } else {
            if (m.count_per_term < 1) invalid("member '" + name + "': count must be >= 1");
            if (m.step <= 0) invalid("member '" + name + "': family step must be > 0");
            if (m.num_terms < 1) invalid("member '" + name + "': family terms must be >= 1");
            time = &m.time_base;
          }
          if (time->base < 0) invalid("member '" + name + "': negative time base");
          for (const auto& [p, c] : time->coeffs) {
            if (c < 0) invalid("member '" + name + "': negative coefficient for '" + p + "'");
          }
          check_references(*time, declared, "member '" + name + "'");
        },
        member);
  }
}

bool InstructionSet::declares(std::string_view parameter) const {
  return std::find(parameters_.begin(), parameters_.end(), parameter) != parameters_.end();
}

const BoundMember* BoundInstructionSet::find(std::string_view member_name) const {
  for (const auto& m : members) {
    if (m.name == member_name) return &m;
  }
  return nullptr;
}

BigInt parse_count(const json& value, std::string_view what) {
  BigInt count;
  if (value.is_number_unsigned()) {
    count = value.get<std::uint64_t>();
  } else if (value.is_number_integer()) {
    count = value.get<std::int64_t>();
  } else if (value.is_string()) {
    count = parse_count_text(trim(value.get<std::string>()), what);
  } else {
    invalid(std::string(what) + ": count must be an integer or an \"a*2^b\" string");
  }
  if (count < 1) invalid(std::string(what) + ": count must be >= 1");
  return count;
}

Rational parse_rational_json(const json& value, std::string_view what) {
  try {
    if (value.is_number_unsigned()) return Rational(value.get<std::uint64_t>());
    if (value.is_number_integer()) return Rational(value.get<std::int64_t>());
    if (value.is_number_float()) return rational_from_double(value.get<double>());
    if (value.is_string()) return parse_rational(trim(value.get<std::string>()));
  } catch (const std::invalid_argument& e) {
    invalid(std::string(what) + ": " + e.what());
  }
  invalid(std::string(what) + ": expected a number or \"p/q\" string");
}

TimeExpression parse_time(const json& value, std::string_view what) {
  TimeExpression time;
  if (value.is_number() || value.is_string()) {
    time.base = parse_rational_json(value, what);
    return time;
  }
  if (!value.is_object()) invalid(std::string(what) + ": time must be an object");
  for (const auto& [key, _] : value.items()) {
    if (key != "base" && key != "coeffs") invalid(std::string(what) + ": unknown time field '" + key + "'");
  }
  time.base = parse_rational_json(require(value, "base", what), std::string(what) + " base");
  if (auto it = value.find("coeffs"); it != value.end()) {
    if (!it->is_object()) invalid(std::string(what) + ": coeffs must be an object");
    for (const auto& [param, coeff] : it->items()) {
      time.coeffs[param] = parse_rational_json(coeff, std::string(what) + " coeff '" + param + "'");
    }
  }
  return time;
}

InstructionSet model_from_json(const json& doc) {
  if (!doc.is_object()) invalid("model must be a JSON object");
  const std::string name = require_string(doc, "name", "model");
  std::vector<std::string> parameters;
  if (auto it = doc.find("parameters"); it != doc.end()) {
    if (!it->is_array()) invalid("model: 'parameters' must be an array");
    for (const auto& p : *it) {
      if (!p.is_string()) invalid("model: parameter names must be strings");
      parameters.push_back(p.get<std::string>());
    }
  }
  const json& classes = require(doc, "classes", "model");
  if (!classes.is_array()) invalid("model: 'classes' must be an array");
  std::vector<InstructionMember> members;
  for (const auto& entry : classes) {
    if (!entry.is_object()) invalid("model: class entries must be objects");
    const std::string member = require_string(entry, "name", "class");
    const std::string what = "class '" + member + "'";
    for (const auto& [key, _] : entry.items()) {
      if (key != "name" && key != "count" && key != "time" && key != "family") {
        invalid(what + ": unknown field '" + key + "'");
      }
    }
    BigInt count = parse_count(require(entry, "count", what), what);
    TimeExpression time = parse_time(require(entry, "time", what), what + " time");
    if (auto fam = entry.find("family"); fam != entry.end()) {
      if (!fam->is_object()) invalid(what + ": family must be an object");
      InstructionFamily f;
      f.name = member;
      f.count_per_term = std::move(count);
      f.time_base = std::move(time);
      f.step = parse_rational_json(require(*fam, "step", what), what + " step");
      if (f.step <= 0) invalid(what + ": family step must be > 0");
      f.num_terms = parse_count(require(*fam, "terms", what), what + " terms");
      members.emplace_back(std::move(f));
    } else {
      members.emplace_back(InstructionClass{member, std::move(count), std::move(time)});
    }
  }
  return InstructionSet(name, std::move(parameters), std::move(members));
}

InstructionSet parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError(ModelErrorKind::kSyntax, std::string("syntax error: ") + e.what(), e.byte);
  }
  return model_from_json(doc);
}

json model_to_json(const InstructionSet& set) {
  json classes = json::array();
  for (const auto& member : set.members()) {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, InstructionClass>) {
            classes.push_back({{"name", m.name}, {"count", count_to_json(m.count)}, {"time", time_to_json(m.time)}});
          } else {
            classes.push_back({{"name", m.name},
                               {"count", count_to_json(m.count_per_term)},
                               {"time", time_to_json(m.time_base)},
                               {"family", {{"step", rational_to_json(m.step)}, {"terms", count_to_json(m.num_terms)}}}});
          }
        },
        member);
  }
  return json{{"name", set.name()}, {"parameters", set.parameters()}, {"classes", classes}};
}

Rational evaluate(const TimeExpression& time, const ParameterBinding& binding) {
  Rational value = time.base;
  for (const auto& [name, coeff] : time.coeffs) {
    auto it = binding.find(name);
    if (it == binding.end()) {
      throw ModelError(ModelErrorKind::kMissingParameter, "missing parameter '" + name + "'");
    }
    value += coeff * it->second;
  }
  return value;
}

BoundInstructionSet bind_parameters(const InstructionSet& set, const ParameterBinding& binding) {
  for (const auto& p : set.parameters()) {
    if (!binding.count(p)) {
      throw ModelError(ModelErrorKind::kMissingParameter, "missing parameter '" + p + "'");
    }
  }
  for (const auto& [name, value] : binding) {
    if (!set.declares(name)) {
      throw ModelError(ModelErrorKind::kUndeclaredParameter, "undeclared parameter '" + name + "'");
    }
    if (value < 0) {
      throw ModelError(ModelErrorKind::kValidation, "parameter '" + name + "' must be non-negative");
    }
  }
  BoundInstructionSet bound;
  bound.name = set.name();
  for (const auto& member : set.members()) {
    BoundMember b;
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          b.name = m.name;
          if constexpr (std::is_same_v<T, InstructionClass>) {
            b.count = m.count;
            b.time = evaluate(m.time, binding);
          } else {
            b.count = m.count_per_term;
            b.time = evaluate(m.time_base, binding);
            b.step = m.step;
            b.terms = m.num_terms;
          }
        },
        member);
    if (b.time <= 0) {
      throw ModelError(ModelErrorKind::kValidation,
                       "member '" + b.name + "' has non-positive time " + to_string(b.time));
    }
    bound.members.push_back(std::move(b));
  }
  return bound;
}

BigInt total_count(const BoundInstructionSet& set) {
  BigInt total = 0;
  for (const auto& m : set.members) total += m.instruction_count();
  return total;
}

BoundInstructionSet collapse_single_term_families(const BoundInstructionSet& set) {
  BoundInstructionSet out = set;
  for (auto& m : out.members) {
    if (m.is_family() && m.terms == 1) m.step.reset();
  }
  return out;
}

}  // namespace compcap
