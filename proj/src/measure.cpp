#include "pal/measure.hpp"

#include <sstream>

#include "pal/signal_io.hpp"

namespace pal {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

int parse_index(const std::string& s, std::size_t lineno) {
  const auto v = parse_double(s);
  if (!v || *v != std::floor(*v) || std::abs(*v) > 1e9) {
    throw ParseError("line " + std::to_string(lineno) + ": bad cell index '" + s + "'");
  }
  return static_cast<int>(*v);
}

}  // namespace

TriangularMeasure<double> read_measure_csv(std::istream& in, const HalfPlaneGrid<double>& grid) {
  TriangularMeasure<double> m(grid);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("measure file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "i,j,mu") throw ParseError("line 1: expected header 'i,j,mu'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ParseError("line " + std::to_string(lineno) + ": expected 3 fields");
    const int i = parse_index(cells[0], lineno);
    const int j = parse_index(cells[1], lineno);
    const auto mu = parse_double(cells[2]);
    if (!mu || !std::isfinite(*mu)) {
      throw ParseError("line " + std::to_string(lineno) + ": bad weight '" + cells[2] + "'");
    }
    if (i < j) {
      throw ParseError("line " + std::to_string(lineno) + ": cell requires i >= j");
    }
    try {
      m.add(i, j, *mu);
    } catch (const DomainError& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

void write_measure_csv(std::ostream& out, const TriangularMeasure<double>& m) {
  out << "i,j,mu\n";
  for (int i = 1; i <= m.L(); ++i) {
    for (int j = 1; j <= i; ++j) {
      if (m.at(i, j) != 0.0) out << i << ',' << j << ',' << to_string(m.at(i, j)) << '\n';
    }
  }
}

}  // namespace pal
