#pragma once

#include <string>
#include <string_view>

#include <gmpxx.h>

namespace gridveil {

/// 10^digits as an arbitrary-precision integer.
mpz_class pow10(unsigned digits);

/// floor(10^digits * d), where d is read as the shortest decimal string that
/// round-trips the double (so 123.4567 scales to 1234567, not 1234566).
mpz_class scale_decimal(double d, unsigned digits);

/// Same as scale_decimal but for an explicit decimal literal such as "-9.9999".
mpz_class scale_decimal(std::string_view literal, unsigned digits);

/// Exact decimal rendering of scaled / 10^digits, e.g. (-15000, 4) -> "-1.5000".
std::string to_decimal_string(const mpz_class& scaled, unsigned digits);

/// Nearest double to scaled / 10^digits (correctly rounded through strtod).
double unscale(const mpz_class& scaled, unsigned digits);

/// Shortest round-trip decimal string of a double.
std::string shortest_decimal(double d);

}  // namespace gridveil
