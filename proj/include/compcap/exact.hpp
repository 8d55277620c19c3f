#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace compcap {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Parses "p/q", "-p/q", integers and plain decimals ("1.25", "3e-2") exactly.
// Throws std::invalid_argument on malformed text or a zero denominator.
// Base-10 digit string; leading zeros are allowed.
BigInt parse_decimal_integer(std::string_view digits);

Rational parse_rational(std::string_view text);

// Shortest decimal that round-trips to `value`, read back exactly.
Rational rational_from_double(double value);

// "p/q", or "p" when the denominator is 1.
std::string to_string(const Rational& value);
std::string to_string(const BigInt& value);

double to_double(const Rational& value);
double to_double(const BigInt& value);

bool is_integer(const Rational& value);

BigInt floor_to_integer(const Rational& value);

// log2 of a positive big integer from its leading 64 bits; relative error
// below 1e-15 regardless of magnitude.
double log2_big(const BigInt& value);

}  // namespace compcap
