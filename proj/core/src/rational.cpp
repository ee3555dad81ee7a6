#include "tmsr/rational.hpp"

#include <stdexcept>

namespace tmsr {

BigInt integer_part(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  BigInt q = num / den;
  if (num < 0 && q * den != num) {
    q -= 1;
  }
  return q;
}

Rational fractional_part(const Rational& r) {
  return r - Rational(integer_part(r));
}

Rational parse_decimal(std::string_view text) {
  if (text.empty()) {
    throw std::invalid_argument("empty decimal literal");
  }
  BigInt digits = 0;
  BigInt scale = 1;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_point) {
        throw std::invalid_argument("malformed decimal literal '" + std::string(text) + "'");
      }
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') {
      throw std::invalid_argument("malformed decimal literal '" + std::string(text) + "'");
    }
    seen_digit = true;
    digits = digits * 10 + (c - '0');
    if (seen_point) {
      scale *= 10;
    }
  }
  if (!seen_digit || text.back() == '.' || text.front() == '.') {
    throw std::invalid_argument("malformed decimal literal '" + std::string(text) + "'");
  }
  return Rational(digits, scale);
}

std::string to_string(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  const bool negative = num < 0;
  if (negative) {
    num = -num;
  }
  // A reduced fraction terminates in base 10 iff den = 2^a 5^b.
  BigInt rest = den;
  unsigned twos = 0;
  unsigned fives = 0;
  while (rest % 2 == 0) {
    rest /= 2;
    ++twos;
  }
  while (rest % 5 == 0) {
    rest /= 5;
    ++fives;
  }
  std::string sign = negative ? "-" : "";
  if (rest != 1) {
    return sign + num.str() + "/" + den.str();
  }
  const unsigned places = std::max(twos, fives);
  BigInt scale = 1;
  for (unsigned i = 0; i < places; ++i) {
    scale *= 10;
  }
  BigInt scaled = num * (scale / den);
  BigInt whole = scaled / scale;
  BigInt frac = scaled % scale;
  std::string out = sign + whole.str();
  if (places > 0) {
    std::string f = frac.str();
    f.insert(f.begin(), places - f.size(), '0');
    out += "." + f;
  }
  return out;
}

double to_double(const Rational& r) {
  return r.convert_to<double>();
}

}  // namespace tmsr
