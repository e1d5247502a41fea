#pragma once

// Scaling benchmark: streaming (incremental) PAL against the naive per-step
// evaluation on a reflected random walk.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pal {

/// Gaussian steps of std `step`, reflected into [lo, hi].
std::vector<double> reflected_walk(std::size_t n, std::uint64_t seed, double lo = -8.0, double hi = 8.0,
                                   double step = 0.25);

struct BenchRow {
  std::string path;  // "fast" or "naive"
  std::size_t n = 0;
  int L = 0;
  double median_seconds = 0.0;
  std::uint64_t pushes = 0;
  std::uint64_t pops = 0;
  std::uint64_t updates = 0;
  bool ops_within_2n() const { return pushes + pops <= 2 * n; }
};

struct BenchReport {
  std::vector<BenchRow> rows;
  double fast_slope = 0.0;  // least-squares slope of log t against log n
  double speedup = 0.0;     // naive / fast at the largest n timed on both paths
  std::size_t speedup_n = 0;
  bool ops_ok = true;
};

/// n runs over powers of ten from 1e3 to n_max; the naive path stops at
/// naive_max. Each point is the median of `runs` timings after one discarded
/// warm-up.
BenchReport run_bench(std::size_t n_max, int L, std::uint64_t seed, int runs = 5, std::size_t naive_max = 100000);

void write_bench_csv(std::ostream& out, const BenchReport& r);

}  // namespace pal
