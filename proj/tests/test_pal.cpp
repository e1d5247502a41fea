#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "pal/pal.hpp"
#include "support.hpp"

using namespace pal;
using pal::testing::Rng;

namespace {

using Vec = std::vector<double>;

// Oracle that never touches the corner list: replay every relay on the raw
// history.
template <typename T>
T replay_pal(const TriangularMeasure<T>& m, const std::vector<T>& u) {
  const auto& g = m.grid();
  T sum(0);
  for (int i = 1; i <= g.L; ++i) {
    for (int j = 1; j <= i; ++j) {
      if (m.at(i, j) == T(0)) continue;
      if (relay_replay<T>(u, RelayThresholds<T>{g.alpha(i), g.beta(j)}) == RelayState::on) {
        sum += m.at(i, j);
      }
    }
  }
  return sum;
}

TriangularMeasure<double> random_measure(Rng& rng, const HalfPlaneGrid<double>& g, double density) {
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  TriangularMeasure<double> m(g);
  for (int i = 1; i <= g.L; ++i) {
    for (int j = 1; j <= i; ++j) {
      if (keep(rng)) m.set(i, j, w(rng));
    }
  }
  return m;
}

TriangularMeasure<Rational> random_measure_q(Rng& rng, const HalfPlaneGrid<Rational>& g) {
  TriangularMeasure<Rational> m(g);
  for (int i = 1; i <= g.L; ++i) {
    for (int j = 1; j <= i; ++j) {
      if (rng() % 3 == 0) m.set(i, j, Rational(static_cast<long>(rng() % 21) - 10, 1 + static_cast<long>(rng() % 7)));
    }
  }
  return m;
}

bool rel_close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("grid index helpers are exact at the nodes") {
  HalfPlaneGrid<double> g(8, 0.5, -2.0);
  CHECK(g.count_le(-2.0) == 0);
  CHECK(g.count_le(-1.5) == 1);
  CHECK(g.count_lt(-1.5) == 0);
  CHECK(g.count_le(100.0) == 8);
  CHECK(g.count_le(-100.0) == 0);
  CHECK(g.count_lt(0.0) == 3);
  CHECK(g.count_le(0.0) == 4);
  CHECK_THROWS_AS(HalfPlaneGrid<double>(0, 1.0), DomainError);
  CHECK_THROWS_AS(HalfPlaneGrid<double>(4, 0.0), DomainError);
}

TEST_CASE("measure cells outside the triangle are rejected") {
  TriangularMeasure<double> m(HalfPlaneGrid<double>(4, 1.0));
  CHECK_THROWS_AS(m.set(2, 3, 1.0), DomainError);
  CHECK_THROWS_AS(m.set(5, 1, 1.0), DomainError);
  std::istringstream bad("i,j,mu\n1,2,0.5\n");
  CHECK_THROWS_AS(read_measure_csv(bad, HalfPlaneGrid<double>(4, 1.0)), ParseError);
  std::istringstream ok("i,j,mu\n3,1,2.5\n4,4,-1\n");
  const auto r = read_measure_csv(ok, HalfPlaneGrid<double>(4, 1.0));
  CHECK(r.at(3, 1) == 2.5);
  CHECK(r.total() == 1.5);
  std::ostringstream out;
  write_measure_csv(out, r);
  CHECK(out.str() == "i,j,mu\n3,1,2.5\n4,4,-1\n");
}

TEST_CASE("evaluation examples") {
  // single atom at (alpha=1, beta=-1)
  HalfPlaneGrid<double> g(4, 1.0, -2.0);
  TriangularMeasure<double> atom(g);
  atom.set(3, 1, 2.5);
  REQUIRE(g.alpha(3) == 1.0);
  REQUIRE(g.beta(1) == -1.0);
  const auto rm = build_memory<double>(Vec{0, 2});
  CHECK(pal_eval_naive(atom, rm) == 2.5);
  CHECK(pal_eval_staircase(atom, rm) == 2.5);

  TriangularMeasure<double> zero(g);
  CHECK(pal_eval_naive(zero, rm) == 0.0);
  CHECK(pal_eval_staircase(zero, rm) == 0.0);

  // unit weights on the 10-cell triangle; cells with alpha <= 3.5 are rows 1..3
  TriangularMeasure<double> ones(HalfPlaneGrid<double>(4, 1.0));
  for (int i = 1; i <= 4; ++i)
    for (int j = 1; j <= i; ++j) ones.set(i, j, 1.0);
  const Vec h{0, 3.5};
  const double expect = replay_pal(ones, h);
  CHECK(expect == 6.0);
  CHECK(pal_eval_naive(ones, build_memory<double>(h)) == expect);
  CHECK(pal_eval_staircase(ones, build_memory<double>(h)) == expect);

  CHECK(pal_eval_staircase(ones, ReducedMemory<double>{}) == 0.0);
  CHECK(pal_eval_staircase(ones, build_memory<double>(Vec{0, 10})) == ones.total());
}

TEST_CASE("incremental path: plateau and saturation") {
  TriangularMeasure<double> ones(HalfPlaneGrid<double>(6, 1.0));
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= i; ++j) ones.set(i, j, 1.0);
  auto rm = build_memory<double>(Vec{0, 3, 1});
  const double v = pal_eval_staircase(ones, rm);
  CHECK(pal_eval_incremental(ones, rm, 1.0, v) == v);
  CHECK(pal_eval_incremental(ones, rm, 50.0, v) == ones.total());

  PalStream<double> s(ones);
  for (double x : {0.0, 1.0, 2.0, 4.0, 7.0}) s.step(x);
  CHECK(s.value() == ones.total());
}

TEST_CASE("naive, staircase and incremental agree with relay replay (float)") {
  Rng rng(21);
  for (int rep = 0; rep < 300; ++rep) {
    const int L = 1 + static_cast<int>(rng() % 12);
    HalfPlaneGrid<double> g(L, 0.5 + (rng() % 4) * 0.25, -3.0);
    const auto m = random_measure(rng, g, 0.5);
    const Vec u = pal::testing::random_signal(rng, 1 + rng() % 30, -4, 4, rep % 2 ? 8 : 0);
    PalStream<double> stream(m);
    ReducedMemory<double> rm;
    double cached = 0.0;
    for (std::size_t t = 0; t < u.size(); ++t) {
      const double inc = pal_eval_incremental(m, rm, u[t], cached);
      rm.update(u[t]);
      cached = pal_eval_staircase(m, rm);
      REQUIRE(rel_close(inc, cached));
      REQUIRE(rel_close(stream.step(u[t]), cached));
    }
    const double oracle = replay_pal(m, u);
    REQUIRE(rel_close(pal_eval_naive(m, rm), oracle));
    REQUIRE(rel_close(pal_eval_staircase(m, rm), oracle));
  }
}

TEST_CASE("paths are exactly equal in rational mode") {
  Rng rng(8);
  for (int rep = 0; rep < 150; ++rep) {
    const int L = 1 + static_cast<int>(rng() % 9);
    HalfPlaneGrid<Rational> g(L, Rational(1, 2), Rational(-2));
    const auto m = random_measure_q(rng, g);
    std::vector<Rational> u;
    for (std::size_t k = 0, n = 1 + rng() % 25; k < n; ++k) u.emplace_back(static_cast<long>(rng() % 17) - 8, 4);
    for (auto& q : u) q.canonicalize();
    PalStream<Rational> stream(m);
    for (const auto& x : u) stream.step(x);
    const auto rm = build_memory<Rational>(u);
    const Rational oracle = replay_pal(m, u);
    REQUIRE(pal_eval_naive(m, rm) == oracle);
    REQUIRE(pal_eval_staircase(m, rm) == oracle);
    REQUIRE(stream.value() == oracle);
  }
}

TEST_CASE("linearity in the measure and stack sufficiency") {
  Rng rng(4);
  HalfPlaneGrid<Rational> g(7, Rational(1), Rational(-4));
  for (int rep = 0; rep < 50; ++rep) {
    const auto mu = random_measure_q(rng, g);
    const auto nu = random_measure_q(rng, g);
    Rational a(static_cast<long>(rng() % 7) - 3, 2), b(static_cast<long>(rng() % 5) - 2, 3);
    a.canonicalize();
    b.canonicalize();
    TriangularMeasure<Rational> mix(g);
    mix.scale_add(a, mu).scale_add(b, nu);
    std::vector<Rational> u;
    for (int k = 0; k < 12; ++k) u.emplace_back(static_cast<long>(rng() % 9) - 4);
    const auto rm = build_memory<Rational>(u);
    REQUIRE(pal_eval_staircase(mix, rm) == a * pal_eval_staircase(mu, rm) + b * pal_eval_staircase(nu, rm));

    // a different history with the same corner list
    std::vector<Rational> v = rm.corners();
    v.insert(v.begin(), rm.corners().front());
    REQUIRE(build_memory<Rational>(v).corners() == rm.corners());
    REQUIRE(replay_pal(mu, v) == replay_pal(mu, u));
  }
}

TEST_CASE("multi-head PAL") {
  HalfPlaneGrid<double> g(4, 1.0, -2.0);
  TriangularMeasure<double> atom(g);
  atom.set(3, 1, 2.5);
  std::vector<HeadConfig<double>> one{{{1, 0}, {1, 0}, atom}};
  const std::vector<Vec> x{{0, 7}, {2, -3}};
  CHECK(mpal_forward(one, x) == Vec{2.5, 0});

  TriangularMeasure<double> other(g);
  other.set(2, 2, 1.0);
  std::vector<HeadConfig<double>> two{{{1, 0}, {1, 0}, atom}, {{0, 1}, {0, 1}, other}};
  std::vector<HeadConfig<double>> second{{{0, 1}, {0, 1}, other}};
  const auto y = mpal_forward(two, x);
  const auto y1 = mpal_forward(one, x);
  const auto y2 = mpal_forward(second, x);
  CHECK(y[0] == y1[0] + y2[0]);
  CHECK(y[1] == y1[1] + y2[1]);

  std::vector<HeadConfig<double>> bad{{{1, 0, 0}, {1, 0}, atom}};
  CHECK_THROWS_AS(mpal_forward(bad, x), DomainError);

  Rng rng(17);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t d = 3;
    HalfPlaneGrid<double> gg(10, 0.5, -2.5);
    std::vector<HeadConfig<double>> heads;
    for (int h = 0; h < 4; ++h) {
      HeadConfig<double> hc{Vec(d), Vec(d), random_measure(rng, gg, 0.4)};
      for (auto& v : hc.in_proj) v = nd(rng);
      for (auto& v : hc.out_proj) v = nd(rng);
      heads.push_back(hc);
    }
    std::vector<Vec> xs(1 + rng() % 15, Vec(d));
    for (auto& v : xs)
      for (auto& c : v) c = nd(rng);
    Vec expect(d, 0.0);
    for (const auto& hc : heads) {
      std::vector<double> s;
      for (const auto& v : xs) s.push_back(dot(hc.in_proj, v));
      const double p = pal_eval_naive(hc.measure, build_memory<double>(s));
      for (std::size_t k = 0; k < d; ++k) expect[k] += hc.out_proj[k] * p;
    }
    const auto got = mpal_forward(heads, xs);
    for (std::size_t k = 0; k < d; ++k) REQUIRE(rel_close(got[k], expect[k]));
  }
}

TEST_CASE("bit-decode measures") {
  HalfPlaneGrid<double> g(40, 1.0, 0.0);
  auto two = bit_decode_measures<double>(g, {5.0, 9.0});
  REQUIRE(two.size() == 1);
  CHECK(two[0].at(5, 4) == 0.0);
  CHECK(two[0].at(9, 8) == 1.0);
  CHECK(two[0].total() == 1.0);

  // twelve codes; index 5 carries the smallest value
  Vec codes(12);
  for (int k = 0; k < 12; ++k) codes[k] = 10.0 + 2.0 * k;
  codes[5] = 3.0;
  const auto heads = bit_decode_measures(g, codes);
  REQUIRE(heads.size() == 4);
  const auto rm = build_memory<double>(Vec{0.5, 3.0});
  std::vector<double> bits;
  for (const auto& h : heads) bits.push_back(pal_eval_staircase(h, rm));
  CHECK(bits == Vec{1, 0, 1, 0});
  CHECK(decode_top(bits) == 5);
  CHECK(decode_top(std::vector<int>{0, 0, 0, 0}) == 0);
  CHECK(decode_top(std::vector<int>{1, 0, 1, 0}) == 5);
  CHECK_THROWS_AS(decode_top(std::vector<int>{2, 0}), DomainError);

  // every index is recovered from the weights its narrow cell carries
  for (std::size_t k = 0; k < codes.size(); ++k) {
    const auto [i, j] = code_cell(g, codes[k]);
    std::vector<int> w;
    for (const auto& h : heads) w.push_back(static_cast<int>(h.at(i, j)));
    REQUIRE(decode_top(w) == k);
  }

  CHECK_THROWS_AS(bit_decode_measures<double>(g, {5.0, 5.5}), DomainError);
}

TEST_CASE("bit-decode map on stack histories is not injective") {
  // Linear depth codes c(i, d) = C - (d(k+1) + i) for k = 3 symbols and
  // depth <= 3, pushed by emitting c + eps then c - eps. The head outputs
  // depend only on the final sample, so stacks sharing a top collide.
  const int k = 3, dmax = 3;
  const double C = dmax * (k + 1), eps = 0.25;
  HalfPlaneGrid<double> g(30, 1.0, -10.0);
  Vec codes;
  for (int idx = 0; idx < (dmax + 1) * (k + 1); ++idx) codes.push_back(C - idx);
  const auto heads = bit_decode_measures(g, codes);
  REQUIRE(heads.size() == 4);

  std::map<std::vector<double>, std::vector<int>> seen;
  std::vector<int> first, second;
  std::vector<double> collided;
  std::vector<std::vector<int>> stacks{{}};
  for (int depth = 1; depth <= dmax; ++depth) {
    std::vector<std::vector<int>> next;
    for (const auto& s : stacks)
      if (static_cast<int>(s.size()) == depth - 1)
        for (int sym = 1; sym <= k; ++sym) {
          auto t = s;
          t.push_back(sym);
          next.push_back(t);
        }
    stacks.insert(stacks.end(), next.begin(), next.end());
  }
  for (const auto& s : stacks) {
    Vec u{C + 1.0};
    for (std::size_t d = 0; d < s.size(); ++d) {
      const double c = C - (static_cast<double>(d) * (k + 1) + s[d]);
      u.push_back(c + eps);
      u.push_back(c - eps);
    }
    const auto rm = build_memory<double>(u);
    std::vector<double> out;
    for (const auto& h : heads) out.push_back(pal_eval_staircase(h, rm));
    auto [it, fresh] = seen.emplace(out, s);
    if (!fresh && first.empty()) {
      first = it->second;
      second = s;
      collided = out;
    }
  }
  REQUIRE_FALSE(first.empty());
  CHECK(first != second);
  MESSAGE("collision: stacks of size " << first.size() << " and " << second.size()
                                       << " share head outputs");
}
