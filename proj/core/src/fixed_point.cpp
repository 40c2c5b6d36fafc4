#include "gridveil/fixed_point.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "gridveil/errors.hpp"
#include "gridveil/random.hpp"

namespace gridveil {

mpz_class Rng::random_bits(unsigned bits) {
  mpz_class out = 0;
  unsigned remaining = bits;
  while (remaining > 0) {
    const unsigned take = remaining >= 64 ? 64 : remaining;
    std::uint64_t word = engine_();
    if (take < 64) word &= (std::uint64_t{1} << take) - 1;
    out <<= take;
    mpz_class w;
    mpz_import(w.get_mpz_t(), 1, 1, sizeof(word), 0, 0, &word);
    out += w;
    remaining -= take;
  }
  return out;
}

mpz_class Rng::below(const mpz_class& bound) {
  if (bound <= 0) throw Error("Rng::below: bound must be positive");
  const auto bits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  // Rejection sampling keeps the draw exactly uniform.
  for (;;) {
    mpz_class candidate = random_bits(bits);
    if (candidate < bound) return candidate;
  }
}

mpz_class pow10(unsigned digits) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, digits);
  return out;
}

std::string shortest_decimal(double d) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d,
                                 std::chars_format::fixed);
  if (ec != std::errc{}) {
    // Magnitudes too large for the buffer in fixed notation.
    auto [p2, ec2] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
    if (ec2 != std::errc{}) throw Error("shortest_decimal: conversion failed");
    return std::string(buf.data(), p2);
  }
  return std::string(buf.data(), ptr);
}

mpz_class scale_decimal(std::string_view literal, unsigned digits) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < literal.size() && (literal[pos] == '-' || literal[pos] == '+')) {
    negative = literal[pos] == '-';
    ++pos;
  }
  std::string int_part;
  std::string frac_part;
  bool seen_dot = false;
  int exponent = 0;
  for (; pos < literal.size(); ++pos) {
    const char c = literal[pos];
    if (c == '.') {
      if (seen_dot) throw Error("scale_decimal: malformed literal");
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      (seen_dot ? frac_part : int_part).push_back(c);
    } else if (c == 'e' || c == 'E') {
      exponent = std::stoi(std::string(literal.substr(pos + 1)));
      break;
    } else {
      throw Error("scale_decimal: malformed literal");
    }
  }
  // Fold the exponent into the digit string: value = digits * 10^(exponent - |frac|).
  std::string all = int_part + frac_part;
  if (all.empty()) throw Error("scale_decimal: empty literal");
  const long shift = static_cast<long>(digits) + exponent - static_cast<long>(frac_part.size());
  mpz_class mantissa(all, 10);
  mpz_class result;
  if (shift >= 0) {
    result = mantissa * pow10(static_cast<unsigned>(shift));
  } else {
    const mpz_class divisor = pow10(static_cast<unsigned>(-shift));
    if (negative) {
      // floor of a negative value rounds away from zero.
      mpz_cdiv_q(result.get_mpz_t(), mantissa.get_mpz_t(), divisor.get_mpz_t());
    } else {
      mpz_fdiv_q(result.get_mpz_t(), mantissa.get_mpz_t(), divisor.get_mpz_t());
    }
  }
  return negative ? mpz_class(-result) : result;
}

mpz_class scale_decimal(double d, unsigned digits) {
  if (!std::isfinite(d)) throw EncodingOverflowError("scale_decimal: non-finite value");
  return scale_decimal(shortest_decimal(d), digits);
}

std::string to_decimal_string(const mpz_class& scaled, unsigned digits) {
  const bool negative = scaled < 0;
  mpz_class mag = abs(scaled);
  std::string s = mag.get_str(10);
  if (digits > 0) {
    if (s.size() <= digits) s.insert(0, digits + 1 - s.size(), '0');
    s.insert(s.size() - digits, 1, '.');
  }
  if (negative) s.insert(0, 1, '-');
  return s;
}

double unscale(const mpz_class& scaled, unsigned digits) {
  const std::string s = to_decimal_string(scaled, digits);
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace gridveil
