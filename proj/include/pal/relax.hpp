#pragma once

// Smooth relay: s_{t+1} = s_t (1 - p_t) + (1 - s_t) q_t with
// p_t = sigma((beta - u_t) / tau), q_t = sigma((u_t - alpha) / tau).
// As tau -> 0 it tracks the binary relay on inputs kept away from the
// thresholds.

#include <span>
#include <string>
#include <vector>

namespace pal {

struct SmoothRelayParams {
  double alpha;
  double beta;
  double tau;

  void validate() const;
};

/// Numerically stable logistic.
double logistic(double x);

struct SmoothTrace {
  std::vector<double> states;  // s_0 .. s_n
};

SmoothTrace smooth_unroll(std::span<const double> u, const SmoothRelayParams& p, double s0 = 0.0);

struct SmoothGrad {
  double value = 0.0;  // s_n
  double d_alpha = 0.0;
  double d_beta = 0.0;
  double d_tau = 0.0;
  double d_s0 = 0.0;
  std::vector<double> d_u;
};

/// Exact partials of s_n by reverse accumulation through the recurrence.
SmoothGrad smooth_grad(std::span<const double> u, const SmoothRelayParams& p, double s0 = 0.0);

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst;  // name of the worst parameter
  SmoothGrad analytic;
  SmoothGrad numeric;
};

/// Central differences with step h on every parameter and sample. The error
/// of a partial is |a - f| / max(|a|, |f|) when that scale is >= `scale_floor`,
/// otherwise the absolute difference.
FdReport fd_check(std::span<const double> u, const SmoothRelayParams& p, double s0 = 0.0,
                  double h = 1e-5, double scale_floor = 1e-4);

struct AnnealReport {
  bool precondition_ok = true;
  std::vector<std::size_t> violations;  // sample indices closer than delta to a threshold
  std::vector<double> taus;
  std::vector<double> errors;  // max_t |s_t(tau) - relay_t|
  bool monotone = true;
  double floor_tau = 0.0;    // delta / 20
  double floor_error = 0.0;  // error at floor_tau
};

/// Compares the smooth trace to the binary relay (initially OFF, s0 = 0) along
/// a descending temperature schedule. Inputs violating the delta separation
/// are reported and nothing is evaluated.
AnnealReport anneal_check(std::span<const double> u, double alpha, double beta,
                          const std::vector<double>& taus, double delta);

}  // namespace pal
