#include "pal/rfim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

namespace pal {

void RfimConfig::validate() const {
  if (N < 1) throw DomainError("N must be at least 1");
  if (!(J >= 0.0)) throw DomainError("coupling J must be non-negative");
  if (!(disorder_std >= 0.0)) throw DomainError("disorder std must be non-negative");
  if (H_grid.empty()) throw DomainError("field grid is empty");
  for (double h : H_grid) {
    if (!std::isfinite(h)) throw DomainError("field grid has a non-finite value");
  }
}

std::vector<double> loop_grid(double h_max, double step) {
  if (!(step > 0.0) || !(h_max > 0.0)) throw DomainError("loop grid needs positive max and step");
  const auto n = static_cast<std::size_t>(std::llround(2.0 * h_max / step));
  std::vector<double> g;
  for (std::size_t i = 0; i <= n; ++i) g.push_back(-h_max + 2.0 * h_max * static_cast<double>(i) / n);
  for (std::size_t i = n; i-- > 0;) g.push_back(g[i]);
  return g;
}

RfimConfig load_rfim_config_json(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    RfimConfig c;
    c.N = j.value("N", c.N);
    c.J = j.value("J", c.J);
    c.disorder_std = j.value("disorder_std", c.disorder_std);
    c.seed = j.value("seed", c.seed);
    if (j.contains("H_grid")) {
      c.H_grid = j.at("H_grid").get<std::vector<double>>();
    } else if (j.contains("H_loop")) {
      c.H_grid = loop_grid(j.at("H_loop").at("max").get<double>(), j.at("H_loop").at("step").get<double>());
    } else {
      c.H_grid = loop_grid(3.0 * c.disorder_std + 2.0 * c.J, 0.05);
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("rfim config: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("rfim config: ") + e.what());
  }
}

RfimConfig load_rfim_config_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return load_rfim_config_json(f);
}

std::vector<double> gaussian_fields(std::size_t N, double std_dev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> h(N);
  for (auto& x : h) x = std_dev * g(rng);
  return h;
}

// ---------------------------------------------------------------------------

RfimSystem::RfimSystem(std::vector<double> fields, double J) : J_(J) {
  if (fields.empty()) throw DomainError("RFIM needs at least one spin");
  order_.resize(fields.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return fields[a] < fields[b]; });
  sorted_.reserve(fields.size());
  for (std::size_t i : order_) sorted_.push_back(fields[i]);
  spins_.assign(fields.size(), -1);
}

double RfimSystem::magnetisation() const {
  const double n = static_cast<double>(sorted_.size());
  return (2.0 * static_cast<double>(k_) - n) / n;
}

void RfimSystem::set_up_count(std::size_t k) {
  const std::size_t n = sorted_.size();
  for (std::size_t s = n - std::max(k, k_); s < n - std::min(k, k_); ++s) {
    spins_[order_[s]] = k > k_ ? 1 : -1;
  }
  k_ = k;
}

std::size_t RfimSystem::relax(double H) {
  const std::size_t n = sorted_.size();
  std::size_t flips = 0;
  for (std::size_t it = 0; it <= n + 1; ++it) {
    // local field J m + h + H is positive iff h > c
    const double c = -J_ * magnetisation() - H;
    const auto want_up = static_cast<std::size_t>(sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), c));
    const auto want_down = static_cast<std::size_t>(std::lower_bound(sorted_.begin(), sorted_.end(), c) - sorted_.begin());
    if (want_up > k_) {
      flips += want_up - k_;
      set_up_count(want_up);
    } else if (n - want_down < k_) {
      flips += k_ - (n - want_down);
      set_up_count(n - want_down);
    } else {
      return flips;
    }
  }
  throw std::logic_error("zero-temperature relaxation did not settle");
}

std::size_t RfimSystem::ascend_event_driven() {
  const std::size_t n = sorted_.size();
  std::size_t best = 0;
  while (k_ < n) {
    const std::size_t start = k_;
    // the next spin sits at zero local field here; nudge it and relax
    const double H = -sorted_[n - k_ - 1] - J_ * magnetisation();
    set_up_count(k_ + 1);
    relax(H);
    best = std::max(best, k_ - start);
  }
  return best;
}

SweepResult rfim_sweep(const RfimConfig& cfg) {
  cfg.validate();
  RfimSystem sys(gaussian_fields(cfg.N, cfg.disorder_std, cfg.seed), cfg.J);
  SweepResult r;
  r.points.reserve(cfg.H_grid.size());
  int branch = 1;
  for (std::size_t t = 0; t < cfg.H_grid.size(); ++t) {
    const double H = cfg.H_grid[t];
    if (t > 0 && H != cfg.H_grid[t - 1]) branch = H > cfg.H_grid[t - 1] ? 1 : -1;
    const std::size_t flips = sys.relax(H);
    r.points.push_back({H, sys.magnetisation(), branch, flips});
  }
  return r;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "H,m,branch,avalanche_size\n";
  out.precision(17);
  for (const auto& p : r.points) out << p.H << ',' << p.m << ',' << p.branch << ',' << p.avalanche << '\n';
}

PreisachCheck preisach_equiv_check(const RfimConfig& cfg) {
  cfg.validate();
  const auto fields = gaussian_fields(cfg.N, cfg.disorder_std, cfg.seed);
  RfimSystem spins(fields, cfg.J);
  const auto& sorted = spins.sorted_fields();
  const double n = static_cast<double>(cfg.N);

  std::vector<RelayState> relays(cfg.N, RelayState::off);
  double m = -1.0;
  PreisachCheck out;
  for (double H : cfg.H_grid) {
    spins.relax(H);
    // relay i is ON iff H >= -h_i - J m, i.e. h_i >= -J m - H
    auto F = [&](double mm) {
      const double c = -cfg.J * mm - H;
      const auto on = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), c);
      return 2.0 * static_cast<double>(on) / n - 1.0;
    };
    const FixedPoint fp = damped_fixed_point(F, m);
    out.max_residual = std::max(out.max_residual, fp.residual);
    out.max_iterations = std::max(out.max_iterations, fp.iterations);
    std::size_t on = 0;
    for (std::size_t i = 0; i < cfg.N; ++i) {
      const double a = -fields[i] - cfg.J * fp.m;
      relays[i] = relay_step(relays[i], H, RelayThresholds<double>{a, a});
      on += relays[i] == RelayState::on;
    }
    m = (2.0 * static_cast<double>(on) - n) / n;
    out.max_deviation = std::max(out.max_deviation, std::abs(m - spins.magnetisation()));
  }
  return out;
}

std::vector<double> mean_field_curve(double J, double disorder_std, const std::vector<double>& H_grid) {
  if (!(disorder_std > 0.0)) throw DomainError("mean-field curve needs positive disorder");
  std::vector<double> out;
  out.reserve(H_grid.size());
  double m = -1.0;
  for (double H : H_grid) {
    auto G = [&](double mm) { return std::erf((J * mm + H) / (disorder_std * std::sqrt(2.0))); };
    m = damped_fixed_point(G, m).m;
    out.push_back(m);
  }
  return out;
}

double mean_field_deviation(const RfimConfig& cfg) {
  const auto sweep = rfim_sweep(cfg);
  const auto mf = mean_field_curve(cfg.J, cfg.disorder_std, cfg.H_grid);
  double dev = 0.0;
  for (std::size_t t = 0; t < mf.size(); ++t) dev = std::max(dev, std::abs(mf[t] - sweep.points[t].m));
  return dev;
}

double critical_disorder(double J) { return std::sqrt(2.0 / std::acos(-1.0)) * J; }

namespace {

double max_jump(double J, double disorder, const std::vector<double>& unit_fields) {
  std::vector<double> h(unit_fields);
  for (auto& x : h) x *= disorder;
  RfimSystem sys(std::move(h), J);
  return 2.0 * static_cast<double>(sys.ascend_event_driven()) / static_cast<double>(unit_fields.size());
}

}  // namespace

std::vector<CriticalityPoint> criticality_scan(double J, const std::vector<double>& disorders, std::size_t N,
                                               std::uint64_t seed) {
  const auto unit = gaussian_fields(N, 1.0, seed);
  std::vector<std::future<double>> jobs;
  for (double d : disorders) {
    if (!(d > 0.0)) throw DomainError("disorder must be positive");
    jobs.push_back(std::async(std::launch::async, [&unit, J, d] { return max_jump(J, d, unit); }));
  }
  std::vector<CriticalityPoint> out;
  for (std::size_t i = 0; i < disorders.size(); ++i) out.push_back({disorders[i], jobs[i].get()});
  return out;
}

double critical_disorder_estimate(double J, std::size_t N, std::uint64_t seed, double level, double lo, double hi,
                                  int iters) {
  const auto unit = gaussian_fields(N, 1.0, seed);
  if (!(max_jump(J, lo, unit) > level) || max_jump(J, hi, unit) > level) {
    throw DomainError("bisection bracket does not straddle the jump level");
  }
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    (max_jump(J, mid, unit) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

double NonDominatedSum::push(double x) {
  while (!stack_.empty() && stack_.back() < x) {
    stack_.pop_back();
    prefix_.pop_back();
  }
  stack_.push_back(x);
  prefix_.push_back(prefix_.empty() ? x : prefix_.back() + x);
  return prefix_.back();
}

std::vector<double> streaming_non_dominated_sum(std::span<const double> stream) {
  NonDominatedSum s;
  std::vector<double> out;
  out.reserve(stream.size());
  for (double x : stream) out.push_back(s.push(x));
  return out;
}

void PatternStore::add(std::vector<double> pattern) {
  double sq = 0.0;
  for (double x : pattern) sq += x * x;
  const double s = std::sqrt(sq);
  if (std::find(strengths_.begin(), strengths_.end(), s) != strengths_.end()) {
    throw DomainError("pattern strengths must be distinct");
  }
  patterns_.push_back(std::move(pattern));
  strengths_.push_back(s);
  rm_.update(s);
  by_strength_.clear();
}

std::vector<std::size_t> PatternStore::survivors() const {
  std::map<double, std::size_t> index;
  for (std::size_t i = 0; i < strengths_.size(); ++i) index.emplace(strengths_[i], i);
  std::vector<std::size_t> out;
  for (double c : rm_.corners()) out.push_back(index.at(c));
  return out;
}

std::optional<std::size_t> PatternStore::retrieve(double q, double tol) const {
  if (by_strength_.empty() && !rm_.empty()) {
    for (std::size_t i : survivors()) by_strength_.emplace_back(strengths_[i], i);
    std::sort(by_strength_.begin(), by_strength_.end());
  }
  auto it = std::lower_bound(by_strength_.begin(), by_strength_.end(), std::make_pair(q - tol, std::size_t{0}));
  if (it == by_strength_.end() || it->first > q + tol) return std::nullopt;
  return it->second;
}

PatternStore hopfield_store(const std::vector<std::vector<double>>& patterns) {
  PatternStore s;
  for (const auto& p : patterns) s.add(p);
  return s;
}

std::optional<std::vector<double>> hopfield_retrieve(const PatternStore& store, double q, double tol) {
  const auto i = store.retrieve(q, tol);
  if (!i) return std::nullopt;
  return store.pattern(*i);
}

}  // namespace pal
