#pragma once

#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace tmsr {

/// Exact time value. Timestamps are never floating point.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Integer part (floor) of a non-negative rational.
BigInt integer_part(const Rational& r);

/// Decimal part r - floor(r), always in [0, 1).
Rational fractional_part(const Rational& r);

/// Parses a non-negative decimal literal such as "0", "2.13" or "10.30".
/// Throws std::invalid_argument on malformed input.
Rational parse_decimal(std::string_view text);

/// Renders r as a terminating decimal when possible ("1.7", "3"), otherwise
/// as "p/q".
std::string to_string(const Rational& r);

/// Closest binary64 value, for display and statistics only.
double to_double(const Rational& r);

}  // namespace tmsr
