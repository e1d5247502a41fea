#pragma once

// Mean-field random-field Ising model at zero temperature, its relay
// (Preisach) reading, and the two stream constructions built on the
// extremum memory: the non-dominated running sum and a pattern store keyed by
// activation strength.
//
// In the mean-field model every spin sees the same m, so the up spins are
// always the k largest random fields. The state is kept as an explicit spin
// vector anyway, and relaxation works on the field-sorted order.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pal/hysteresis.hpp"

namespace pal {

struct RfimConfig {
  std::size_t N = 10000;
  double J = 1.0;
  double disorder_std = 1.2;
  std::vector<double> H_grid;
  std::uint64_t seed = 1;

  void validate() const;
};

/// -h_max .. h_max .. -h_max in steps of `step`.
std::vector<double> loop_grid(double h_max, double step);

/// JSON object with N, J, disorder_std, seed and either "H_grid": [...] or
/// "H_loop": {"max": .., "step": ..}. Throws ParseError.
RfimConfig load_rfim_config_json(std::istream& in);
RfimConfig load_rfim_config_json_file(const std::string& path);

/// Gaussian fields with the given std, seeded.
std::vector<double> gaussian_fields(std::size_t N, double std_dev, std::uint64_t seed);

class RfimSystem {
 public:
  /// All spins down.
  RfimSystem(std::vector<double> fields, double J);

  /// Synchronous zero-temperature relaxation at field H:
  /// sigma_i <- sign(J m + h_i + H), a zero local field leaves the spin as is.
  /// Returns the number of flips.
  std::size_t relax(double H);

  /// Quasi-static ascent from the current state: raise H to the next single
  /// flip and relax, repeatedly, until every spin is up. Returns the largest
  /// avalanche (flip count).
  std::size_t ascend_event_driven();

  double magnetisation() const;
  std::size_t up_count() const { return k_; }
  std::size_t size() const { return sorted_.size(); }
  const std::vector<std::int8_t>& spins() const { return spins_; }
  double J() const { return J_; }
  /// Fields in ascending order.
  const std::vector<double>& sorted_fields() const { return sorted_; }

 private:
  void set_up_count(std::size_t k);

  double J_;
  std::vector<double> sorted_;
  std::vector<std::size_t> order_;  // sorted position -> spin index
  std::vector<std::int8_t> spins_;
  std::size_t k_ = 0;  // the k_ largest fields are up
};

struct SweepPoint {
  double H;
  double m;
  int branch;  // +1 ascending, -1 descending
  std::size_t avalanche;
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

SweepResult rfim_sweep(const RfimConfig& cfg);
/// CSV `H,m,branch,avalanche_size`.
void write_sweep_csv(std::ostream& out, const SweepResult& r);

/// Damped fixed point m <- (m + F(m)) / 2 from `m_start`; stops when a step
/// moves m by less than `tol`. Throws DomainError with the residual when
/// `max_iter` is exhausted.
struct FixedPoint {
  double m;
  double residual;  // |F(m) - m|
  std::size_t iterations;
};
template <typename F>
FixedPoint damped_fixed_point(F&& f, double m_start, double tol = 1e-10, std::size_t max_iter = 10000);

struct PreisachCheck {
  double max_deviation = 0.0;  // relay ensemble vs spin dynamics
  double max_residual = 0.0;   // self-consistency residual of the relay solve
  std::size_t max_iterations = 0;
};

/// Relay ensemble on the same fields: at each grid point the relays have
/// alpha_i = beta_i = -h_i - J m with m the self-consistent magnetisation
/// reached from the previous point; the hysteresis comes from that
/// self-consistency.
PreisachCheck preisach_equiv_check(const RfimConfig& cfg);

/// Infinite-N Gaussian mean field, m = erf((J m + H) / (sigma sqrt 2)),
/// followed along the grid by the damped solver.
std::vector<double> mean_field_curve(double J, double disorder_std, const std::vector<double>& H_grid);

/// max_H |m_mean_field(H) - m_spin(H)| along the grid.
double mean_field_deviation(const RfimConfig& cfg);

/// Critical Gaussian disorder std where the self-consistency slope
/// 2 J max P(h) reaches 1: sqrt(2/pi) J.
double critical_disorder(double J);

struct CriticalityPoint {
  double disorder;
  double max_jump;  // 2 * largest avalanche / N
};

/// One realisation per disorder value, run concurrently.
std::vector<CriticalityPoint> criticality_scan(double J, const std::vector<double>& disorders, std::size_t N,
                                               std::uint64_t seed);

/// Bisection on the disorder for the point where the largest jump crosses
/// `level`, over [lo, hi].
double critical_disorder_estimate(double J, std::size_t N, std::uint64_t seed, double level = 0.1,
                                  double lo = 0.4, double hi = 1.4, int iters = 20);

// ---------------------------------------------------------------------------
// Streams

/// Running sum of the values with no later strictly greater value, kept on a
/// non-increasing maxima stack (amortised O(1) per value).
class NonDominatedSum {
 public:
  double push(double x);
  double value() const { return prefix_.empty() ? 0.0 : prefix_.back(); }
  const std::vector<double>& stack() const { return stack_; }

 private:
  std::vector<double> stack_;
  std::vector<double> prefix_;  // running sums bottom-up, so no cancellation on pops
};

std::vector<double> streaming_non_dominated_sum(std::span<const double> stream);

/// Patterns kept by the extremum memory over their 2-norm strengths.
class PatternStore {
 public:
  /// Strengths must be distinct.
  void add(std::vector<double> pattern);

  /// Pattern indices of the surviving corners, oldest first.
  std::vector<std::size_t> survivors() const;
  const ReducedMemory<double>& memory() const { return rm_; }
  const std::vector<double>& strengths() const { return strengths_; }
  const std::vector<double>& pattern(std::size_t i) const { return patterns_.at(i); }
  std::size_t size() const { return patterns_.size(); }

  /// Surviving pattern whose strength lies within `tol` of q, by binary search
  /// over the survivors sorted by strength; nullopt when no band contains q.
  std::optional<std::size_t> retrieve(double q, double tol = 1e-9) const;

 private:
  std::vector<std::vector<double>> patterns_;
  std::vector<double> strengths_;
  ReducedMemory<double> rm_;
  // survivors sorted by strength, rebuilt lazily after add(); not thread safe
  mutable std::vector<std::pair<double, std::size_t>> by_strength_;
};

PatternStore hopfield_store(const std::vector<std::vector<double>>& patterns);
std::optional<std::vector<double>> hopfield_retrieve(const PatternStore& store, double q, double tol = 1e-9);

// ---------------------------------------------------------------------------

template <typename F>
FixedPoint damped_fixed_point(F&& f, double m_start, double tol, std::size_t max_iter) {
  double m = m_start;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const double next = 0.5 * m + 0.5 * f(m);
    const double step = next - m;
    m = next;
    if ((step < 0 ? -step : step) < tol) {
      const double r = f(m) - m;
      return {m, r < 0 ? -r : r, it};
    }
  }
  const double r = f(m) - m;
  throw DomainError("self-consistency did not converge, residual " + std::to_string(r < 0 ? -r : r));
}

}  // namespace pal
