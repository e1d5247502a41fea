#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <gmpxx.h>

namespace pal {

/// Exact rational scalar used by the stack channels and the exact PAL mode.
using Rational = mpq_class;

/// Raised for violated preconditions and domain errors (CLI exit code 1).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed input files and syntax errors (CLI exit code 2).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
concept OrderedValue = requires(T a, T b) {
  { a < b } -> std::convertible_to<bool>;
  { a <= b } -> std::convertible_to<bool>;
  { a == b } -> std::convertible_to<bool>;
  { a - b };
  { a + b };
};

/// floor(num / den) for den > 0.
inline std::int64_t floor_div(double num, double den) {
  return static_cast<std::int64_t>(std::floor(num / den));
}

inline std::int64_t floor_div(const Rational& num, const Rational& den) {
  Rational q = num / den;
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out.get_si();
}

inline double to_double(double v) { return v; }
inline double to_double(const Rational& v) { return v.get_d(); }

inline std::string to_string(const Rational& v) { return v.get_str(); }
std::string to_string(double v);

template <typename T>
T from_int(std::int64_t v) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(static_cast<long>(v));
  } else {
    return static_cast<T>(v);
  }
}

/// Parses a decimal literal ("-1.25", "3e-2") or a fraction ("7/25") exactly.
Rational parse_rational(const std::string& text);

}  // namespace pal
