#pragma once

// Test-only oracles and generators. Nothing here calls into the reduced
// memory implementation.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "pal/hysteresis.hpp"

namespace pal::testing {

using Rng = std::mt19937_64;

/// Random walk or i.i.d. samples in [lo, hi]; `levels` > 0 snaps samples to a
/// lattice so that ties and exact loop closures occur often.
inline std::vector<double> random_signal(Rng& rng, std::size_t n, double lo, double hi,
                                         int levels = 0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  std::bernoulli_distribution walk(0.5);
  std::vector<double> u;
  u.reserve(n);
  double x = uni(rng);
  const bool iid = walk(rng);
  const double step = (hi - lo) / 10.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (iid) {
      x = uni(rng);
    } else {
      std::normal_distribution<double> g(0.0, step);
      x = std::clamp(x + g(rng), lo, hi);
    }
    if (levels > 0) {
      const double q = (hi - lo) / levels;
      x = lo + q * std::round((x - lo) / q);
    }
    u.push_back(x);
  }
  return u;
}

/// Corner list rebuilt offline by a backward scan: the reduced memory is the
/// time-ordered sequence of strict suffix-maximum / suffix-minimum records,
/// with runs of same-kind records collapsed to the outermost one.
template <typename T>
std::vector<T> reference_corners(const std::vector<T>& u) {
  if (u.empty()) return {};
  struct Rec { T v; int kind; };  // kind: 0 current, +1 max, -1 min
  std::vector<Rec> recs{{u.back(), 0}};
  T smax = u.back(), smin = u.back();
  for (std::size_t k = u.size() - 1; k-- > 0;) {
    const T& x = u[k];
    if (smax < x) {
      smax = x;
      if (recs.back().kind == 1) recs.back().v = x; else recs.push_back({x, 1});
    } else if (x < smin) {
      smin = x;
      if (recs.back().kind == -1) recs.back().v = x; else recs.push_back({x, -1});
    }
  }
  std::vector<T> out;
  for (auto it = recs.rbegin(); it != recs.rend(); ++it) out.push_back(it->v);
  return out;
}

/// Thresholds covering every relay equivalence class of a finite signal:
/// all sample values plus midpoints and two outer sentinels.
inline std::vector<double> critical_levels(const std::vector<double>& u) {
  std::set<double> vals(u.begin(), u.end());
  std::vector<double> sorted(vals.begin(), vals.end());
  std::vector<double> out;
  if (sorted.empty()) return {0.0};
  out.push_back(sorted.front() - 1.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.push_back(sorted[i]);
    if (i + 1 < sorted.size()) out.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  out.push_back(sorted.back() + 1.0);
  return out;
}

/// Local extrema by direct neighbour comparison on the plateau-compressed
/// sequence. Positions 0 and n are always included; a plateau contributes its
/// first index.
template <typename T>
std::vector<std::size_t> brute_extremal_positions(const std::vector<T>& u) {
  std::vector<std::size_t> out;
  if (u.empty()) return out;
  std::vector<std::size_t> runs;  // first index of every maximal run
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i == 0 || !(u[i] == u[i - 1])) runs.push_back(i);
  }
  out.push_back(0);
  for (std::size_t r = 1; r + 1 < runs.size(); ++r) {
    const T& a = u[runs[r - 1]];
    const T& b = u[runs[r]];
    const T& c = u[runs[r + 1]];
    if ((a < b && c < b) || (b < a && b < c)) out.push_back(runs[r]);
  }
  if (u.size() > 1) out.push_back(u.size() - 1);
  return out;
}

}  // namespace pal::testing
