#include "compcap/exact.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <system_error>

namespace compcap {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

BigInt pow10(long exponent) {
  BigInt result = 1;
  for (long i = 0; i < exponent; ++i) result *= 10;
  return result;
}

[[noreturn]] void malformed(std::string_view text) {
  throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
}

// Unsigned decimal: digits[.digits][e[+-]digits]
Rational parse_decimal(std::string_view text, std::string_view whole) {
  std::string_view mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = text.substr(0, e);
    std::string_view exp_text = text.substr(e + 1);
    bool negative_exp = false;
    if (!exp_text.empty() && (exp_text[0] == '+' || exp_text[0] == '-')) {
      negative_exp = exp_text[0] == '-';
      exp_text.remove_prefix(1);
    }
    if (!all_digits(exp_text) || exp_text.size() > 4) malformed(whole);
    exponent = std::stol(std::string(exp_text));
    if (negative_exp) exponent = -exponent;
  }
  std::string digits;
  long fraction_digits = 0;
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = mantissa.substr(0, dot);
    std::string_view frac_part = mantissa.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) malformed(whole);
    if ((!int_part.empty() && !all_digits(int_part)) ||
        (!frac_part.empty() && !all_digits(frac_part))) {
      malformed(whole);
    }
    digits = std::string(int_part) + std::string(frac_part);
    fraction_digits = static_cast<long>(frac_part.size());
  } else {
    if (!all_digits(mantissa)) malformed(whole);
    digits = std::string(mantissa);
  }
  const BigInt numerator = parse_decimal_integer(digits);
  long scale = exponent - fraction_digits;
  if (scale >= 0) return Rational(numerator * pow10(scale));
  return Rational(numerator, pow10(-scale));
}

}  // namespace

BigInt parse_decimal_integer(std::string_view digits) {
  if (!all_digits(digits)) malformed(digits);
  // A leading zero would make the BigInt constructor read octal.
  const auto first = digits.find_first_not_of('0');
  return first == std::string_view::npos ? BigInt(0) : BigInt(std::string(digits.substr(first)));
}

Rational parse_rational(std::string_view text) {
  std::string_view body = text;
  bool negative = false;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    negative = body[0] == '-';
    body.remove_prefix(1);
  }
  if (body.empty()) malformed(text);
  Rational value;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    std::string_view num = body.substr(0, slash);
    std::string_view den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) malformed(text);
    const BigInt d = parse_decimal_integer(den);
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    value = Rational(parse_decimal_integer(num), d);
  } else {
    value = parse_decimal(body, text);
  }
  return negative ? Rational(-value) : value;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite number");
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw std::invalid_argument("unrepresentable number");
  return parse_rational(std::string_view(buf.data(), static_cast<size_t>(end - buf.data())));
}

std::string to_string(const Rational& value) {
  if (boost::multiprecision::denominator(value) == 1) {
    return boost::multiprecision::numerator(value).str();
  }
  return boost::multiprecision::numerator(value).str() + "/" +
         boost::multiprecision::denominator(value).str();
}

std::string to_string(const BigInt& value) { return value.str(); }

double to_double(const Rational& value) { return value.convert_to<double>(); }

double to_double(const BigInt& value) { return value.convert_to<double>(); }

bool is_integer(const Rational& value) { return boost::multiprecision::denominator(value) == 1; }

BigInt floor_to_integer(const Rational& value) {
  const BigInt& num = boost::multiprecision::numerator(value);
  const BigInt& den = boost::multiprecision::denominator(value);
  BigInt q = num / den;
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

double log2_big(const BigInt& value) {
  if (value <= 0) throw std::domain_error("log2 of non-positive integer");
  const auto msb = static_cast<long>(boost::multiprecision::msb(value));
  if (msb < 64) return std::log2(value.convert_to<double>());
  const long shift = msb - 63;
  const auto top = static_cast<std::uint64_t>(value >> shift);
  return std::log2(static_cast<double>(top)) + static_cast<double>(shift);
}

}  // namespace compcap
