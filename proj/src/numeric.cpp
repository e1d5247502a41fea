#include "pal/numeric.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace pal {

std::string to_string(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  }
  if (s.empty()) throw ParseError("empty number");
  if (s.find('/') != std::string::npos) {
    Rational q;
    if (q.set_str(s, 10) != 0) throw ParseError("malformed fraction '" + text + "'");
    q.canonicalize();
    return q;
  }
  // Decimal with optional exponent, converted without rounding.
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  std::string digits;
  long scale = 0;
  bool seen_point = false, seen_digit = false;
  for (; pos < s.size(); ++pos) {
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) ++scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw ParseError("malformed number '" + text + "'");
  long exponent = 0;
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') throw ParseError("malformed number '" + text + "'");
    ++pos;
    const char* first = s.data() + pos;
    if (pos < s.size() && s[pos] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), exponent);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("malformed exponent in '" + text + "'");
    }
  }
  mpz_class num(digits, 10);
  long shift = exponent - scale;
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  Rational q = shift < 0 ? Rational(num, pow10) : Rational(num * pow10);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

}  // namespace pal
