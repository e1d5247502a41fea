#pragma once

// Exact binary relays and the reduced memory (extremum stack) of a scalar
// signal. The reduced memory is the alternating list of dominant past extrema;
// every relay state, and therefore every Preisach-type readout, is a function
// of it alone.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pal/numeric.hpp"

namespace pal {

template <typename T = double>
struct RelayThresholds {
  T alpha;  // switch-on level
  T beta;   // switch-off level

  RelayThresholds(T a, T b) : alpha(std::move(a)), beta(std::move(b)) {
    if (alpha < beta) throw DomainError("relay thresholds require alpha >= beta");
  }
};

enum class RelayState : std::uint8_t { off = 0, on = 1 };

inline int bit(RelayState s) { return s == RelayState::on ? 1 : 0; }

template <typename T>
RelayState relay_step(RelayState prev, const T& u, const RelayThresholds<T>& th) {
  if (th.alpha <= u) return RelayState::on;
  if (u <= th.beta) return RelayState::off;
  return prev;
}

/// Folds relay_step over the whole sequence. This is the ground truth every
/// fast read is checked against.
template <typename T>
RelayState relay_replay(std::span<const T> u, const RelayThresholds<T>& th,
                        RelayState initial = RelayState::off) {
  RelayState s = initial;
  for (const T& x : u) s = relay_step(s, x, th);
  return s;
}

enum class Direction : std::uint8_t { none, rising, falling };

struct OpCounter {
  std::uint64_t pushes = 0;
  std::uint64_t pops = 0;
  std::uint64_t updates = 0;
};

/// Alternating dominant-extrema list with Madelung wiping.
///
/// corners() holds e_1..e_r; the last entry is always the current input.
/// Maxima form a strictly decreasing subsequence, minima a strictly increasing
/// one, and every maximum exceeds every later minimum. Read backwards, the
/// list is the sequence of suffix records of the history.
template <typename T = double>
class ReducedMemory {
 public:
  ReducedMemory() = default;

  const std::vector<T>& corners() const { return corners_; }
  Direction direction() const { return direction_; }
  const OpCounter& counter() const { return counter_; }
  bool empty() const { return corners_.empty(); }
  std::size_t size() const { return corners_.size(); }

  /// Running extrema of the whole history (wiping may remove them from the
  /// corner list, so they are tracked separately).
  const std::optional<T>& history_max() const { return hist_max_; }
  const std::optional<T>& history_min() const { return hist_min_; }

  void update(const T& u) {
    ++counter_.updates;
    if (!hist_max_ || *hist_max_ < u) hist_max_ = u;
    if (!hist_min_ || u < *hist_min_) hist_min_ = u;

    if (corners_.empty()) {
      push(u);
      return;
    }
    const T& last = corners_.back();
    if (u == last) return;  // plateau

    const Direction step = last < u ? Direction::rising : Direction::falling;
    if (step == direction_) {
      pop();
      push(u);
    } else {
      push(u);
      direction_ = step;
    }
    wipe();
  }

  /// True when corner k is a maximum of the alternating list.
  bool is_max(std::size_t k) const {
    if (corners_.size() < 2) return true;
    const bool first_is_max = corners_[1] < corners_[0];
    return (k % 2 == 0) == first_is_max;
  }

 private:
  void push(const T& u) {
    corners_.push_back(u);
    ++counter_.pushes;
  }
  void pop() {
    corners_.pop_back();
    ++counter_.pops;
  }

  void wipe() {
    while (corners_.size() >= 3) {
      const std::size_t n = corners_.size();
      const T& u = corners_[n - 1];
      const T& third = corners_[n - 3];
      const bool closes = direction_ == Direction::rising ? third <= u : u <= third;
      if (!closes) break;
      if (n == 3) {
        // The first corner is only where the history started; the extremum
        // after it is still a record of the whole history and stays.
        corners_.erase(corners_.begin());
        ++counter_.pops;
        break;
      }
      corners_.erase(corners_.end() - 3, corners_.end() - 1);
      counter_.pops += 2;
    }
  }

  std::vector<T> corners_;
  Direction direction_ = Direction::none;
  OpCounter counter_;
  std::optional<T> hist_max_;
  std::optional<T> hist_min_;
};

template <typename T>
ReducedMemory<T> build_memory(std::span<const T> u) {
  ReducedMemory<T> rm;
  for (const T& x : u) rm.update(x);
  return rm;
}

namespace detail {

// Index positions of maxima and minima inside the corner list; the maxima
// subsequence is decreasing and the minima subsequence increasing.
struct CornerParity {
  std::size_t max_offset;  // index of the first maximum (0 or 1)
  std::size_t min_offset;
};

template <typename T>
CornerParity parity(const ReducedMemory<T>& rm) {
  const bool first_is_max = rm.is_max(0);
  return {first_is_max ? 0u : 1u, first_is_max ? 1u : 0u};
}

inline std::size_t count_at(std::size_t size, std::size_t offset) {
  return size > offset ? (size - offset + 1) / 2 : 0;
}

}  // namespace detail

/// Relay state read from the corner list in O(log r).
template <typename T>
RelayState rm_relay_read(const ReducedMemory<T>& rm, const RelayThresholds<T>& th) {
  const auto& e = rm.corners();
  const std::size_t r = e.size();
  if (r == 0) return RelayState::off;
  const auto par = detail::parity(rm);
  const std::size_t n_max = detail::count_at(r, par.max_offset);
  const std::size_t n_min = detail::count_at(r, par.min_offset);
  auto max_at = [&](std::size_t s) -> const T& { return e[par.max_offset + 2 * s]; };
  auto min_at = [&](std::size_t s) -> const T& { return e[par.min_offset + 2 * s]; };

  // Number of leading maxima >= alpha, and of leading minima <= beta.
  std::size_t lo = 0, hi = n_max;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (th.alpha <= max_at(mid)) lo = mid + 1; else hi = mid;
  }
  const std::size_t maxima_on = lo;
  lo = 0;
  hi = n_min;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (min_at(mid) <= th.beta) lo = mid + 1; else hi = mid;
  }
  const std::size_t minima_off = lo;

  // -1 encodes "no such corner".
  std::int64_t on_idx = -1, off_idx = -1;
  if (maxima_on > 0) on_idx = static_cast<std::int64_t>(par.max_offset + 2 * (maxima_on - 1));
  if (minima_off > 0) off_idx = static_cast<std::int64_t>(par.min_offset + 2 * (minima_off - 1));
  // A minimum >= alpha (or a maximum <= beta) can only be the last of its kind.
  if (n_min > 0 && th.alpha <= min_at(n_min - 1)) {
    on_idx = std::max(on_idx, static_cast<std::int64_t>(par.min_offset + 2 * (n_min - 1)));
  }
  if (n_max > 0 && max_at(n_max - 1) <= th.beta) {
    off_idx = std::max(off_idx, static_cast<std::int64_t>(par.max_offset + 2 * (n_max - 1)));
  }
  if (on_idx < 0) return RelayState::off;
  return on_idx >= off_idx ? RelayState::on : RelayState::off;
}

/// max(u) - min(u) over the full history.
template <typename T>
T rm_range(const ReducedMemory<T>& rm) {
  if (rm.empty()) throw DomainError("range of an empty memory");
  return *rm.history_max() - *rm.history_min();
}

}  // namespace pal
