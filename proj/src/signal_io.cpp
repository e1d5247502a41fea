#include "pal/signal_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace pal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename F>
void for_each_row(std::istream& in, F&& on_value) {
  std::string line;
  if (!std::getline(in, line)) return;  // empty file: empty signal
  if (trim(line) != "u") throw ParseError("line 1: expected header 'u'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string cell = trim(line);
    if (cell.empty()) continue;
    on_value(cell, lineno);
  }
}

}  // namespace

std::optional<double> parse_double(const std::string& text) {
  const std::string s = trim(text);
  double v = 0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<double> read_signal_csv(std::istream& in) {
  std::vector<double> u;
  for_each_row(in, [&](const std::string& cell, std::size_t lineno) {
    auto v = parse_double(cell);
    if (!v || !std::isfinite(*v)) {
      throw ParseError("line " + std::to_string(lineno) + ": not a finite number: '" + cell + "'");
    }
    u.push_back(*v);
  });
  return u;
}

std::vector<double> read_signal_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_signal_csv(in);
}

std::vector<Rational> read_signal_csv_exact(std::istream& in) {
  std::vector<Rational> u;
  for_each_row(in, [&](const std::string& cell, std::size_t lineno) {
    try {
      u.push_back(parse_rational(cell));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  });
  return u;
}

void write_signal_csv(std::ostream& out, const std::vector<double>& u) {
  out << "u\n";
  for (double v : u) out << to_string(v) << '\n';
}

std::string join_corners(const std::vector<double>& corners) {
  std::string s;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    if (i) s += ';';
    s += to_string(corners[i]);
  }
  return s;
}

CornerTraceWriter::CornerTraceWriter(std::ostream& out) : out_(out) { out_ << "step,corners\n"; }

void CornerTraceWriter::write(std::size_t step, const std::vector<double>& corners) {
  out_ << step << ',' << join_corners(corners) << '\n';
}

}  // namespace pal
