#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pal/hysteresis.hpp"

namespace pal {

/// Reads a one-column CSV with mandatory header `u`. Throws ParseError with
/// the offending line number on malformed rows.
std::vector<double> read_signal_csv(std::istream& in);
std::vector<double> read_signal_csv_file(const std::string& path);
std::vector<Rational> read_signal_csv_exact(std::istream& in);

void write_signal_csv(std::ostream& out, const std::vector<double>& u);

/// Parses a whole-string double; nullopt on trailing garbage.
std::optional<double> parse_double(const std::string& text);

/// Writes `step,corners` rows, one snapshot per update.
class CornerTraceWriter {
 public:
  explicit CornerTraceWriter(std::ostream& out);
  void write(std::size_t step, const std::vector<double>& corners);

 private:
  std::ostream& out_;
};

std::string join_corners(const std::vector<double>& corners);

}  // namespace pal
