#include "pal/relax.hpp"

#include <algorithm>
#include <cmath>

#include "pal/hysteresis.hpp"

namespace pal {

void SmoothRelayParams::validate() const {
  if (!(tau > 0.0)) throw DomainError("temperature tau must be positive");
  if (alpha < beta) throw DomainError("smooth relay requires alpha >= beta");
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_s0(double s0) {
  if (!(s0 >= 0.0 && s0 <= 1.0)) throw DomainError("initial state must lie in [0, 1]");
}

}  // namespace

SmoothTrace smooth_unroll(std::span<const double> u, const SmoothRelayParams& p, double s0) {
  p.validate();
  check_s0(s0);
  SmoothTrace tr;
  tr.states.reserve(u.size() + 1);
  double s = s0;
  tr.states.push_back(s);
  for (double x : u) {
    const double off = logistic((p.beta - x) / p.tau);
    const double on = logistic((x - p.alpha) / p.tau);
    s = s * (1.0 - off) + (1.0 - s) * on;
    tr.states.push_back(s);
  }
  return tr;
}

SmoothGrad smooth_grad(std::span<const double> u, const SmoothRelayParams& p, double s0) {
  const SmoothTrace tr = smooth_unroll(u, p, s0);
  SmoothGrad g;
  g.value = tr.states.back();
  g.d_u.assign(u.size(), 0.0);
  double adj = 1.0;  // d s_n / d s_{t+1}
  for (std::size_t t = u.size(); t-- > 0;) {
    const double s = tr.states[t];
    const double a = (p.beta - u[t]) / p.tau;
    const double b = (u[t] - p.alpha) / p.tau;
    const double off = logistic(a), on = logistic(b);
    // sigma'(x) = sigma(x) sigma(-x), free of cancellation in the tails
    const double d_a = adj * (-s) * off * logistic(-a);
    const double d_b = adj * (1.0 - s) * on * logistic(-b);
    g.d_beta += d_a / p.tau;
    g.d_alpha -= d_b / p.tau;
    g.d_u[t] = (d_b - d_a) / p.tau;
    g.d_tau -= (d_a * a + d_b * b) / p.tau;
    adj *= 1.0 - off - on;
  }
  g.d_s0 = adj;
  return g;
}

FdReport fd_check(std::span<const double> u, const SmoothRelayParams& p, double s0, double h,
                  double scale_floor) {
  FdReport r;
  r.analytic = smooth_grad(u, p, s0);
  auto value = [&](std::span<const double> uu, SmoothRelayParams pp, double ss) {
    return smooth_unroll(uu, pp, ss).states.back();
  };
  auto central = [&](auto&& f) { return (f(h) - f(-h)) / (2.0 * h); };

  SmoothGrad& n = r.numeric;
  n.value = r.analytic.value;
  n.d_alpha = central([&](double e) { return value(u, {p.alpha + e, p.beta, p.tau}, s0); });
  n.d_beta = central([&](double e) { return value(u, {p.alpha, p.beta + e, p.tau}, s0); });
  n.d_tau = central([&](double e) { return value(u, {p.alpha, p.beta, p.tau + e}, s0); });
  // s0 may sit on the boundary of [0, 1]; the recurrence is affine in s0, so
  // a one-sided difference is exact up to rounding there.
  {
    const double lo = std::max(0.0, s0 - h), hi = std::min(1.0, s0 + h);
    n.d_s0 = (value(u, p, hi) - value(u, p, lo)) / (hi - lo);
  }
  std::vector<double> uu(u.begin(), u.end());
  n.d_u.resize(u.size());
  for (std::size_t t = 0; t < u.size(); ++t) {
    n.d_u[t] = central([&](double e) {
      uu[t] = u[t] + e;
      const double v = value(uu, p, s0);
      uu[t] = u[t];
      return v;
    });
  }

  auto err = [&](double a, double f, const std::string& name) {
    const double scale = std::max(std::abs(a), std::abs(f));
    const double e = scale >= scale_floor ? std::abs(a - f) / scale : std::abs(a - f);
    if (r.worst.empty() || e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst = name;
    }
  };
  err(r.analytic.d_alpha, n.d_alpha, "alpha");
  err(r.analytic.d_beta, n.d_beta, "beta");
  err(r.analytic.d_tau, n.d_tau, "tau");
  err(r.analytic.d_s0, n.d_s0, "s0");
  for (std::size_t t = 0; t < u.size(); ++t) err(r.analytic.d_u[t], n.d_u[t], "u[" + std::to_string(t) + "]");
  return r;
}

AnnealReport anneal_check(std::span<const double> u, double alpha, double beta,
                          const std::vector<double>& taus, double delta) {
  if (!(delta > 0.0)) throw DomainError("separation delta must be positive");
  AnnealReport r;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (std::abs(u[t] - alpha) < delta || std::abs(u[t] - beta) < delta) r.violations.push_back(t);
  }
  r.precondition_ok = r.violations.empty();
  if (!r.precondition_ok) return r;

  const RelayThresholds<double> th{alpha, beta};
  std::vector<double> relay;
  relay.reserve(u.size() + 1);
  RelayState st = RelayState::off;
  relay.push_back(0.0);
  for (double x : u) {
    st = relay_step(st, x, th);
    relay.push_back(bit(st));
  }
  auto error_at = [&](double tau) {
    const auto tr = smooth_unroll(u, {alpha, beta, tau}, 0.0);
    double e = 0.0;
    for (std::size_t t = 0; t < tr.states.size(); ++t) e = std::max(e, std::abs(tr.states[t] - relay[t]));
    return e;
  };
  for (std::size_t k = 0; k < taus.size(); ++k) {
    if (k > 0 && !(taus[k] < taus[k - 1])) throw DomainError("temperature schedule must be descending");
    r.taus.push_back(taus[k]);
    r.errors.push_back(error_at(taus[k]));
    if (k > 0 && r.errors[k] > r.errors[k - 1]) r.monotone = false;
  }
  r.floor_tau = delta / 20.0;
  r.floor_error = error_at(r.floor_tau);
  return r;
}

}  // namespace pal
