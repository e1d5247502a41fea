#include "pal/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <numeric>
#include <random>

#include "pal/pal.hpp"

namespace pal {

std::vector<double> reflected_walk(std::size_t n, std::uint64_t seed, double lo, double hi, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, step);
  std::vector<double> u;
  u.reserve(n);
  double x = 0.5 * (lo + hi);
  for (std::size_t t = 0; t < n; ++t) {
    x += g(rng);
    while (x < lo || x > hi) x = x < lo ? 2 * lo - x : 2 * hi - x;
    u.push_back(x);
  }
  return u;
}

namespace {

struct Timed {
  double seconds;
  OpCounter ops;
  double checksum;
};

Timed time_fast(const TriangularMeasure<double>& m, const std::vector<double>& u) {
  const auto t0 = std::chrono::steady_clock::now();
  PalStream<double> s(m);
  double acc = 0.0;
  for (double x : u) acc += s.step(x);
  const auto t1 = std::chrono::steady_clock::now();
  return {std::chrono::duration<double>(t1 - t0).count(), s.memory().counter(), acc};
}

Timed time_naive(const TriangularMeasure<double>& m, const std::vector<double>& u) {
  const auto t0 = std::chrono::steady_clock::now();
  ReducedMemory<double> rm;
  double acc = 0.0;
  for (double x : u) {
    rm.update(x);
    acc += pal_eval_naive(m, rm);
  }
  const auto t1 = std::chrono::steady_clock::now();
  return {std::chrono::duration<double>(t1 - t0).count(), rm.counter(), acc};
}

template <typename F>
BenchRow measure(const char* path, std::size_t n, int L, int runs, F&& run) {
  run();  // warm-up
  std::vector<double> t;
  Timed last{};
  for (int k = 0; k < runs; ++k) {
    last = run();
    t.push_back(last.seconds);
  }
  std::sort(t.begin(), t.end());
  volatile double sink = last.checksum;
  (void)sink;
  return {path, n, L, t[t.size() / 2], last.ops.pushes, last.ops.pops, last.ops.updates};
}

}  // namespace

BenchReport run_bench(std::size_t n_max, int L, std::uint64_t seed, int runs, std::size_t naive_max) {
  if (L < 1) throw DomainError("grid size must be positive");
  if (runs < 1) throw DomainError("at least one timed run is needed");
  const double lo = -8.0, hi = 8.0;
  const double delta = (hi - lo) / L;
  TriangularMeasure<double> m(HalfPlaneGrid<double>{L, delta, lo - delta});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int i = 1; i <= L; ++i) {
    for (int j = 1; j <= i; ++j) m.set(i, j, w(rng));
  }
  m.prepare();

  BenchReport r;
  std::vector<double> lx, ly;
  double fast_at = 0.0, naive_at = 0.0;
  for (std::size_t n = 1000; n <= n_max; n *= 10) {
    const auto u = reflected_walk(n, seed + n, lo, hi);
    const BenchRow f = measure("fast", n, L, runs, [&] { return time_fast(m, u); });
    r.rows.push_back(f);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(std::max(f.median_seconds, 1e-9)));
    if (n <= naive_max) {
      const BenchRow s = measure("naive", n, L, runs, [&] { return time_naive(m, u); });
      r.rows.push_back(s);
      fast_at = f.median_seconds;
      naive_at = s.median_seconds;
      r.speedup_n = n;
    }
  }
  for (const auto& row : r.rows) r.ops_ok = r.ops_ok && row.ops_within_2n();
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    r.fast_slope = sxy / sxx;
  }
  if (fast_at > 0.0) r.speedup = naive_at / fast_at;
  return r;
}

void write_bench_csv(std::ostream& out, const BenchReport& r) {
  out << "path,n,L,median_seconds,pushes,pops,updates,ops_within_2n\n";
  for (const auto& row : r.rows) {
    out << row.path << ',' << row.n << ',' << row.L << ',' << row.median_seconds << ',' << row.pushes << ','
        << row.pops << ',' << row.updates << ',' << (row.ops_within_2n() ? "true" : "false") << '\n';
  }
}

}  // namespace pal
