#pragma once

// Preisach attention: integrate a triangular measure over the relays that are
// currently ON. Three evaluation paths share one grid convention:
//   naive        every cell read through rm_relay_read, O(L^2 log r)
//   staircase    2D prefix sums over the ON bands of the corner list, O(r)
//   incremental  only the rows/columns crossed by the newest sample

#include <cassert>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pal/hysteresis.hpp"
#include "pal/measure.hpp"

namespace pal {

/// One ON band of the staircase: relays with alpha in (lo, hi] and
/// beta < bcut are ON. Missing lo means -inf, missing bcut means +inf.
template <typename T>
struct StairBand {
  std::optional<T> lo;
  T hi;
  std::optional<T> bcut;
};

/// Visits the ON bands in increasing alpha order; `fn` returns false to stop.
/// The corner list read backwards gives suffix records: each new suffix
/// maximum opens a band whose cutoff is the lowest value seen after it.
template <typename T, typename F>
void for_each_band(const ReducedMemory<T>& rm, F&& fn) {
  const auto& e = rm.corners();
  if (e.empty()) return;
  std::size_t k = e.size() - 1;
  T runmax = e[k];
  T runmin = e[k];
  if (!fn(StairBand<T>{std::nullopt, e[k], std::nullopt})) return;
  while (k-- > 0) {
    if (runmax < e[k]) {
      if (!fn(StairBand<T>{runmax, e[k], runmin})) return;
      runmax = e[k];
    }
    if (e[k] < runmin) runmin = e[k];
  }
}

template <typename T>
T pal_eval_naive(const TriangularMeasure<T>& m, const ReducedMemory<T>& rm) {
  const auto& g = m.grid();
  T sum(0);
  for (int i = 1; i <= g.L; ++i) {
    const T a = g.alpha(i);
    for (int j = 1; j <= i; ++j) {
      const T& w = m.at(i, j);
      if (w == T(0)) continue;
      if (rm_relay_read(rm, RelayThresholds<T>{a, g.beta(j)}) == RelayState::on) sum += w;
    }
  }
  return sum;
}

namespace detail {

template <typename T>
struct BandCells {
  int i0, i1, jmax;
};

template <typename T>
BandCells<T> band_cells(const HalfPlaneGrid<T>& g, const StairBand<T>& b) {
  return {b.lo ? g.count_le(*b.lo) + 1 : 1, g.count_le(b.hi),
          b.bcut ? g.count_lt(*b.bcut) : g.L};
}

}  // namespace detail

template <typename T>
T pal_eval_staircase(const TriangularMeasure<T>& m, const ReducedMemory<T>& rm) {
  if (rm.empty()) return T(0);
  const auto& g = m.grid();
  T sum(0);
  for_each_band(rm, [&](const StairBand<T>& b) {
    const auto c = detail::band_cells(g, b);
    if (c.i0 <= c.i1) sum += m.offdiag_rect(c.i0, c.i1, c.jmax);
    return true;
  });
  // A degenerate relay (v, v) is ON exactly when the current input is >= v.
  sum += m.diag_range(1, g.count_le(rm.corners().back()));
  return sum;
}

/// Change of the PAL value caused by feeding u_next into rm_before.
template <typename T>
T pal_delta(const TriangularMeasure<T>& m, const ReducedMemory<T>& rm_before, const T& u_next) {
  const auto& g = m.grid();
  if (rm_before.empty()) {
    const int i1 = g.count_le(u_next);
    return m.row_band(1, i1);
  }
  const T& x = rm_before.corners().back();
  if (u_next == x) return T(0);

  if (x < u_next) {
    // Every relay with alpha in (x, u] ends ON.
    const int i0 = g.count_le(x) + 1, i1 = g.count_le(u_next);
    if (i0 > i1) return T(0);
    T on_before(0);
    for_each_band(rm_before, [&](const StairBand<T>& b) {
      const auto c = detail::band_cells(g, b);
      if (c.i0 > i1) return false;
      const int r0 = std::max(c.i0, i0), r1 = std::min(c.i1, i1);
      if (r0 <= r1) on_before += m.offdiag_rect(r0, r1, c.jmax);
      return true;
    });
    return m.row_band(i0, i1) - on_before;
  }

  // Falling: every relay with beta in [u, x) switches OFF.
  const int j0 = g.count_lt(u_next) + 1, j1 = g.count_lt(x);
  T off(0);
  if (j0 <= j1) {
    for_each_band(rm_before, [&](const StairBand<T>& b) {
      const auto c = detail::band_cells(g, b);
      if (c.jmax < j0) return false;  // cutoffs only decrease from here on
      if (c.i0 <= c.i1) off += m.offdiag_rect(c.i0, c.i1, j0, std::min(j1, c.jmax));
      return true;
    });
  }
  off += m.diag_range(g.count_le(u_next) + 1, g.count_le(x));
  return -off;
}

namespace detail {

template <typename T>
bool close_enough(const T& a, const T& b) {
  if constexpr (std::is_same_v<T, Rational>) {
    return a == b;
  } else {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= 1e-9 * scale;
  }
}

}  // namespace detail

/// PAL value after feeding u_next, given the cached value for rm_before.
/// Debug builds re-evaluate the staircase to catch a stale cache.
template <typename T>
T pal_eval_incremental(const TriangularMeasure<T>& m, const ReducedMemory<T>& rm_before,
                       const T& u_next, const T& cached) {
#ifndef NDEBUG
  if (!detail::close_enough(cached, pal_eval_staircase(m, rm_before))) {
    throw DomainError("pal_eval_incremental: cached value does not match the memory");
  }
#endif
  return cached + pal_delta(m, rm_before, u_next);
}

/// Streaming evaluator: owns the memory and the cached value.
template <typename T>
class PalStream {
 public:
  explicit PalStream(const TriangularMeasure<T>& m) : m_(&m) { m.prepare(); }

  const T& step(const T& u) {
    value_ += pal_delta(*m_, rm_, u);
    rm_.update(u);
    return value_;
  }
  const T& value() const { return value_; }
  const ReducedMemory<T>& memory() const { return rm_; }

 private:
  const TriangularMeasure<T>* m_;
  ReducedMemory<T> rm_;
  T value_ = T(0);
};

// ---------------------------------------------------------------------------
// Multi-head PAL

template <typename T = double>
struct HeadConfig {
  std::vector<T> in_proj;   // row of W_I
  std::vector<T> out_proj;  // column of W_O
  TriangularMeasure<T> measure;
};

template <typename T>
std::size_t check_heads(const std::vector<HeadConfig<T>>& heads) {
  if (heads.empty()) return 0;
  const std::size_t d = heads.front().in_proj.size();
  for (const auto& h : heads) {
    if (h.in_proj.size() != d || h.out_proj.size() != d) {
      throw DomainError("head projection dimensions do not match the model dimension");
    }
  }
  return d;
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) throw DomainError("dimension mismatch");
  T s(0);
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// MPAL output after every prefix x_{0:t}. Each head keeps its own memory over
/// its scalar projection. Summation order: head index ascending.
template <typename T>
std::vector<std::vector<T>> mpal_sequence(const std::vector<HeadConfig<T>>& heads,
                                          const std::vector<std::vector<T>>& x,
                                          std::vector<std::vector<T>>* head_values = nullptr) {
  std::size_t d = check_heads(heads);
  if (heads.empty() && !x.empty()) d = x.front().size();
  std::vector<PalStream<T>> streams;
  streams.reserve(heads.size());
  for (const auto& h : heads) streams.emplace_back(h.measure);
  std::vector<std::vector<T>> out;
  out.reserve(x.size());
  if (head_values) head_values->assign(x.size(), std::vector<T>(heads.size(), T(0)));
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t].size() != d) throw DomainError("input vector dimension mismatch");
    std::vector<T> y(d, T(0));
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const T v = streams[h].step(dot(heads[h].in_proj, x[t]));
      if (head_values) (*head_values)[t][h] = v;
      for (std::size_t k = 0; k < d; ++k) y[k] += heads[h].out_proj[k] * v;
    }
    out.push_back(std::move(y));
  }
  return out;
}

template <typename T>
std::vector<T> mpal_forward(const std::vector<HeadConfig<T>>& heads,
                            const std::vector<std::vector<T>>& x) {
  auto seq = mpal_sequence(heads, x);
  if (seq.empty()) return std::vector<T>(check_heads(heads), T(0));
  return std::move(seq.back());
}

// ---------------------------------------------------------------------------
// Bit-decoding heads

inline int bits_for(std::size_t K) {
  int h = 0;
  while ((std::size_t{1} << h) < K) ++h;
  return std::max(h, 1);
}

/// Narrow cell (i, i-1) for a code value: the relay that is ON exactly while
/// the signal has reached c without falling a full grid step below it.
template <typename T>
std::pair<int, int> code_cell(const HalfPlaneGrid<T>& g, const T& c) {
  const int i = g.count_le(c);
  if (i < 2 || !(c < g.node(i) + g.delta)) {
    throw DomainError("code value " + to_string(c) + " has no narrow cell on the grid");
  }
  return {i, i - 1};
}

/// H = ceil(log2 K) measures; measure h weighs the narrow cell of every code
/// whose index has bit h set (least significant bit first).
template <typename T>
std::vector<TriangularMeasure<T>> bit_decode_measures(const HalfPlaneGrid<T>& g,
                                                      const std::vector<T>& codes) {
  std::vector<T> sorted = codes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k] - sorted[k - 1] < g.delta) {
      throw DomainError("codes must be separated by at least the grid spacing");
    }
  }
  const int H = bits_for(codes.size());
  std::vector<TriangularMeasure<T>> out(H, TriangularMeasure<T>(g));
  for (std::size_t idx = 0; idx < codes.size(); ++idx) {
    const auto [i, j] = code_cell(g, codes[idx]);
    for (int h = 0; h < H; ++h) {
      if ((idx >> h) & 1u) out[h].set(i, j, T(1));
    }
  }
  return out;
}

/// Binary decode of head outputs (LSB first). Outputs must be 0 or 1.
template <typename T>
std::size_t decode_top(const std::vector<T>& outputs) {
  std::size_t idx = 0;
  for (std::size_t h = 0; h < outputs.size(); ++h) {
    if (outputs[h] == T(1)) {
      idx |= std::size_t{1} << h;
    } else if (!(outputs[h] == T(0))) {
      throw DomainError("decode_top expects outputs in {0,1}");
    }
  }
  return idx;
}

}  // namespace pal
