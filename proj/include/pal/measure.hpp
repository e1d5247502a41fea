#pragma once

// Discretised Preisach measure on the lower triangle of an L x L threshold
// grid, with the prefix sums used by the fast evaluation paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "pal/numeric.hpp"

namespace pal {

/// Nodes alpha_i = origin + i*delta and beta_j = origin + j*delta for
/// 1 <= j <= i <= L.
template <typename T = double>
struct HalfPlaneGrid {
  int L = 1;
  T delta = T(1);
  T origin = T(0);

  HalfPlaneGrid() = default;
  HalfPlaneGrid(int side, T spacing, T org = T(0))
      : L(side), delta(std::move(spacing)), origin(std::move(org)) {
    if (L < 1) throw DomainError("grid side L must be >= 1");
    if (!(T(0) < delta)) throw DomainError("grid spacing must be positive");
  }

  T node(int i) const { return origin + from_int<T>(i) * delta; }
  T alpha(int i) const { return node(i); }
  T beta(int j) const { return node(j); }

  /// Number of nodes k in 1..L with node(k) <= x.
  int count_le(const T& x) const {
    int g = clamp_guess(x);
    while (g < L && node(g + 1) <= x) ++g;
    while (g > 0 && x < node(g)) --g;
    return g;
  }
  /// Number of nodes k in 1..L with node(k) < x.
  int count_lt(const T& x) const {
    int g = clamp_guess(x);
    while (g < L && node(g + 1) < x) ++g;
    while (g > 0 && x <= node(g)) --g;
    return g;
  }

 private:
  int clamp_guess(const T& x) const {
    if constexpr (std::is_same_v<T, Rational>) {
      const Rational q = (x - origin) / delta;
      if (q <= 0) return 0;
      if (q >= L) return L;
      return static_cast<int>(floor_div(x - origin, delta));
    } else {
      const double q = std::floor((x - origin) / delta);
      if (!(q > 0)) return 0;  // also catches NaN
      if (q >= L) return L;
      return static_cast<int>(q);
    }
  }
};

/// Weights mu_ij on cells i >= j. Stored densely in an (L+1) x (L+1) square
/// whose diagonal-and-above padding keeps the prefix sums branch free.
template <typename T = double>
class TriangularMeasure {
 public:
  TriangularMeasure() : TriangularMeasure(HalfPlaneGrid<T>{}) {}
  explicit TriangularMeasure(HalfPlaneGrid<T> g)
      : grid_(std::move(g)), w_(static_cast<std::size_t>(grid_.L) * grid_.L, T(0)) {}

  const HalfPlaneGrid<T>& grid() const { return grid_; }
  int L() const { return grid_.L; }

  const T& at(int i, int j) const {
    check(i, j);
    return w_[idx(i, j)];
  }
  void set(int i, int j, T v) {
    check(i, j);
    if constexpr (std::is_same_v<T, Rational>) v.canonicalize();
    w_[idx(i, j)] = std::move(v);
    dirty_ = true;
  }
  void add(int i, int j, const T& v) {
    check(i, j);
    w_[idx(i, j)] += v;
    dirty_ = true;
  }

  /// Sum of off-diagonal weights with rows i in [i0, i1] and columns j in [1, jmax].
  T offdiag_rect(int i0, int i1, int jmax) const {
    return offdiag_rect(i0, i1, 1, jmax);
  }
  T offdiag_rect(int i0, int i1, int j0, int j1) const {
    ensure_prefix();
    i0 = std::max(i0, 1);
    j0 = std::max(j0, 1);
    i1 = std::min(i1, L());
    j1 = std::min(j1, L());
    if (i0 > i1 || j0 > j1) return T(0);
    return P(i1, j1) - P(i0 - 1, j1) - P(i1, j0 - 1) + P(i0 - 1, j0 - 1);
  }
  /// Sum of diagonal weights mu_vv for v in [v0, v1].
  T diag_range(int v0, int v1) const {
    ensure_prefix();
    v0 = std::max(v0, 1);
    v1 = std::min(v1, L());
    if (v0 > v1) return T(0);
    return D_[v1] - D_[v0 - 1];
  }
  /// Sum of all weights in rows [i0, i1], diagonal included.
  T row_band(int i0, int i1) const {
    return offdiag_rect(i0, i1, L()) + diag_range(i0, i1);
  }
  T total() const { return row_band(1, L()); }

  TriangularMeasure& scale_add(const T& a, const TriangularMeasure& other) {
    if (other.L() != L()) throw DomainError("measure grid mismatch");
    for (std::size_t k = 0; k < w_.size(); ++k) w_[k] += a * other.w_[k];
    dirty_ = true;
    return *this;
  }

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * grid_.L + static_cast<std::size_t>(j - 1);
  }
  void check(int i, int j) const {
    if (i < 1 || i > L() || j < 1 || j > i) {
      throw DomainError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                        ") outside the triangle i >= j of an L=" + std::to_string(L()) + " grid");
    }
  }
  const T& P(int i, int j) const {
    return P_[static_cast<std::size_t>(i) * (grid_.L + 1) + static_cast<std::size_t>(j)];
  }

  // Not thread safe on first use; callers sharing a measure across threads
  // should call prepare() up front.
  void ensure_prefix() const {
    if (!dirty_) return;
    const int n = grid_.L;
    P_.assign(static_cast<std::size_t>(n + 1) * (n + 1), T(0));
    D_.assign(static_cast<std::size_t>(n + 1), T(0));
    for (int i = 1; i <= n; ++i) {
      T row(0);
      for (int j = 1; j <= n; ++j) {
        if (j < i) row += w_[idx(i, j)];
        P_[static_cast<std::size_t>(i) * (n + 1) + j] = P(i - 1, j) + row;
      }
      D_[i] = D_[i - 1] + w_[idx(i, i)];
    }
    dirty_ = false;
  }

 public:
  void prepare() const { ensure_prefix(); }

 private:
  HalfPlaneGrid<T> grid_;
  std::vector<T> w_;
  mutable std::vector<T> P_;
  mutable std::vector<T> D_;
  mutable bool dirty_ = true;
};

/// Reads `i,j,mu` rows (header required) into a measure on `grid`.
TriangularMeasure<double> read_measure_csv(std::istream& in, const HalfPlaneGrid<double>& grid);
void write_measure_csv(std::ostream& out, const TriangularMeasure<double>& m);

}  // namespace pal
