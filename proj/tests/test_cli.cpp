#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pal/efo.hpp"
#include "pal/hysteresis.hpp"
#include "pal/measure.hpp"
#include "pal/signal_io.hpp"
#include "palc_cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using pal::testing::Rng;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_palc(std::vector<std::string> args) {
  args.insert(args.begin(), "palc");
  std::ostringstream out, err;
  const int code = palc::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() : dir_(fs::temp_directory_path() / ("palc_test_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~TempDir() { fs::remove_all(dir_); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = dir_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string signal_csv(const std::vector<double>& u) {
  std::ostringstream s;
  pal::write_signal_csv(s, u);
  return s.str();
}

std::vector<double> column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<double> v;
  while (std::getline(in, line)) v.push_back(std::stod(line.substr(line.find(',') + 1)));
  return v;
}

std::string last_line(const std::string& s) {
  const auto e = s.find_last_not_of('\n');
  const auto b = s.rfind('\n', e);
  return s.substr(b == std::string::npos ? 0 : b + 1, e - (b == std::string::npos ? 0 : b + 1) + 1);
}

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = run_palc({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("schema 1") != std::string::npos);
  CHECK(run_palc({}).code == 2);
  CHECK(run_palc({"stack-trace"}).code == 2);
  CHECK(run_palc({"pal-eval", "-m", "x", "-i", "y", "--mode", "slow"}).code == 2);
  CHECK(run_palc({"--help"}).code == 0);
}

TEST_CASE("stack-trace") {
  TempDir tmp;
  const auto r = run_palc({"stack-trace", "-i", tmp.file("six.csv", "u\n0\n3\n1\n2\n0.5\n4\n")});
  CHECK(r.code == 0);
  CHECK(last_line(r.out) == "5,0;4");

  const auto e = run_palc({"stack-trace", "-i", tmp.file("empty.csv", "")});
  CHECK(e.code == 0);
  CHECK(e.out == "step,corners\n");

  const auto bad = run_palc({"stack-trace", "-i", tmp.file("bad.csv", "u\n1\nabc\n")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("line 3") != std::string::npos);
  CHECK(run_palc({"stack-trace", "-i", tmp.path("missing.csv")}).code == 2);

  const auto o = tmp.path("trace.csv");
  CHECK(run_palc({"stack-trace", "-i", tmp.path("six.csv"), "-o", o}).code == 0);
  std::ifstream f(o);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == r.out);
}

TEST_CASE("pal-eval modes agree") {
  TempDir tmp;
  // one atom on the relay (alpha, beta) = (1, -1): L = 8, delta = 0.5, origin -2
  const std::vector<std::string> grid{"-L", "8", "--delta", "0.5", "--origin", "-2"};
  const auto atom = tmp.file("atom.csv", "i,j,mu\n6,2,2.5\n");
  const auto sig = tmp.file("s.csv", signal_csv({0, 2, 0, -2, 0}));
  auto args = std::vector<std::string>{"pal-eval", "-m", atom, "-i", sig, "--mode", "naive"};
  args.insert(args.end(), grid.begin(), grid.end());
  const auto r = run_palc(args);
  REQUIRE(r.code == 0);
  CHECK(column(r.out) == std::vector<double>{0, 2.5, 2.5, 0, 0});

  const auto zero = tmp.file("zero.csv", "i,j,mu\n");
  const auto z = run_palc({"pal-eval", "-m", zero, "-i", sig});
  CHECK(column(z.out) == std::vector<double>(5, 0.0));

  CHECK(run_palc({"pal-eval", "-m", tmp.file("bad.csv", "i,j,mu\n1,2,1\n"), "-i", sig}).code == 2);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    pal::TriangularMeasure<double> m(pal::HalfPlaneGrid<double>{16, 0.5, -4.5});
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    for (int i = 1; i <= 16; ++i)
      for (int j = 1; j <= i; ++j)
        if (rng() % 3 == 0) m.set(i, j, w(rng));
    std::ostringstream ms;
    pal::write_measure_csv(ms, m);
    const auto mp = tmp.file("m.csv", ms.str());
    const auto up = tmp.file("u.csv", signal_csv(pal::testing::random_signal(rng, 200, -4.0, 4.0, trial % 2 ? 16 : 0)));
    std::vector<std::vector<double>> outs;
    for (const char* mode : {"naive", "fast", "incremental"}) {
      const auto res = run_palc({"pal-eval", "-m", mp, "-i", up, "--mode", mode, "--check", "-L", "16", "--delta", "0.5",
                             "--origin", "-4.5"});
      REQUIRE(res.code == 0);
      outs.push_back(column(res.out));
    }
    for (std::size_t t = 0; t < outs[0].size(); ++t) {
      REQUIRE(outs[1][t] == doctest::Approx(outs[0][t]).epsilon(1e-9));
      REQUIRE(outs[2][t] == doctest::Approx(outs[0][t]).epsilon(1e-9));
    }
  }
  CHECK(run_palc({"pal-eval", "-m", zero, "-i", sig, "-L", "0"}).code == 1);
}

TEST_CASE("pda-run") {
  TempDir tmp;
  auto a = run_palc({"pda-run", "--word", "(())", "--check-oracle"});
  CHECK(a.code == 0);
  CHECK(last_line(a.out).find("\"accepted\":true") != std::string::npos);
  const auto trace = tmp.path("t.jsonl");
  auto b = run_palc({"pda-run", "--word", "(()", "--trace", trace, "--check-oracle"});
  CHECK(b.code == 0);
  CHECK(b.out == "reject\n");
  auto c = run_palc({"pda-run", "--machine", "anbncn", "--word", "aabbcc", "--vpal", "--check-oracle", "--trace", trace});
  CHECK(c.out == "accept\n");
  CHECK(run_palc({"pda-run", "--spec", tmp.file("bad.json", "{\"states\": 3}"), "--word", "()"}).code == 2);
  CHECK(run_palc({"pda-run", "--word", "(x)"}).code == 1);
  // deterministic output
  CHECK(run_palc({"pda-run", "--word", "(()())"}).out == run_palc({"pda-run", "--word", "(()())"}).out);
}

TEST_CASE("efo") {
  TempDir tmp;
  Rng rng(32);
  const auto range = pal::efo::to_string(pal::efo::range_formula());
  const auto fpath = tmp.file("range.efo", range);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = pal::testing::random_signal(rng, 1 + rng() % 30, -5.0, 5.0);
    const auto r = run_palc({"efo", "-f", fpath, "-i", tmp.file("u.csv", signal_csv(u))});
    REQUIRE(r.code == 0);
    CHECK(std::stod(r.out) == pal::rm_range(pal::build_memory<double>(u)));
  }
  const auto sig = tmp.file("six.csv", signal_csv({0, 3, 1, 2, 0.5, 4}));
  CHECK(run_palc({"efo", "-e", "forall^ext i . u[i] >= u[i]", "-i", sig}).out == "true\n");
  const auto bad = run_palc({"efo", "-e", "exists^ext i . u[j] >= 0", "-i", sig});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("1:18") != std::string::npos);
  CHECK(run_palc({"efo", "-e", "true"}).code == 2);

  // compile, then evaluate the measure through pal-eval
  const auto mpath = tmp.path("agg.csv");
  const auto c = run_palc({"efo", "-e", "extagg i [u[i]] where (u[i] >= 0)", "--compile", "-L", "32", "--delta", "0.5",
                       "--origin", "-8.5", "-o", mpath, "-i", sig});
  REQUIRE(c.code == 0);
  CHECK(c.out.find("pal=") != std::string::npos);
  const auto p = run_palc({"pal-eval", "-m", mpath, "-i", sig, "-L", "32", "--delta", "0.5", "--origin", "-8.5"});
  REQUIRE(p.code == 0);
  const double pal_last = column(p.out).back();
  const auto pos = c.out.find("pal=") + 4;
  CHECK(pal_last == doctest::Approx(std::stod(c.out.substr(pos))));
  CHECK(run_palc({"efo", "-e", "extagg i [1] where (u[i] >= 0 | u[i] <= 1)", "--compile"}).code == 1);
}

TEST_CASE("rfim") {
  TempDir tmp;
  const auto cfg = tmp.file("c.json", R"({"N": 2000, "J": 1, "disorder_std": 1.2, "seed": 0, "H_loop": {"max": 6, "step": 0.1}})");
  const auto s = run_palc({"rfim", "sweep", "-c", cfg});
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("H,m,branch,avalanche_size\n-6,-1,1,0\n", 0) == 0);
  CHECK(s.out.find("\n6,1,1,") != std::string::npos);
  CHECK(run_palc({"rfim", "sweep", "-c", cfg}).out == s.out);
  const auto p = run_palc({"rfim", "preisach", "-c", cfg});
  CHECK(p.out.rfind("max_deviation=0 ", 0) == 0);
  const auto sc = run_palc({"rfim", "scan", "--N", "20000", "--disorders", "0.5,1.2"});
  REQUIRE(sc.code == 0);
  CHECK(sc.out.rfind("disorder,max_jump\n0.5,", 0) == 0);
  CHECK(run_palc({"rfim", "sweep", "-c", tmp.file("bad.json", R"({"N": 0})")}).code == 2);
  CHECK(run_palc({"rfim", "sweep", "-c", tmp.file("junk.json", "{")}).code == 2);
}

TEST_CASE("bench, relax, layer") {
  const auto b = run_palc({"bench", "--n-max", "10000", "--runs", "1", "--naive-max", "1000", "-L", "16"});
  REQUIRE(b.code == 0);
  CHECK(b.out.find("fast,10000,16,") != std::string::npos);
  CHECK(b.out.find("naive,1000,16,") != std::string::npos);
  CHECK(b.out.find("false") == std::string::npos);
  CHECK(b.err.find("speedup=") != std::string::npos);

  TempDir tmp;
  const auto sig = tmp.file("u.csv", signal_csv({0, 2, 0.5, -1}));
  const auto r = run_palc({"relax", "-i", sig, "--tau", "0.2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\"fd_max_rel_error\"") != std::string::npos);
  CHECK(run_palc({"relax", "-i", sig, "--tau", "-1"}).code == 1);

  const auto model = tmp.file("layer.json", R"({"version": 1, "d": 2, "heads": [],
    "mlp": {"w1": [[0, 0]], "b1": [0], "w2": [[0], [0]], "b2": [0, 0]},
    "ln": {"gain1": [1, 1], "bias1": [0, 0], "gain2": [1, 1], "bias2": [0, 0]},
    "pe": {"enabled": false, "base": 10000}})");
  const auto x = tmp.file("x.csv", "x0,x1\n1,3\n2,2\n");
  const auto l = run_palc({"layer", "--model", model, "-i", x});
  CHECK(l.code == 0);
  CHECK(l.out.rfind("y0,y1\n-1,1\n", 0) == 0);
}
