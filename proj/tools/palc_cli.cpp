#include "palc_cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "pal/bench.hpp"
#include "pal/efo.hpp"
#include "pal/pal.hpp"
#include "pal/pda.hpp"
#include "pal/relax.hpp"
#include "pal/rfim.hpp"
#include "pal/signal_io.hpp"
#include "pal/transformer.hpp"

namespace palc {

namespace {

using namespace pal;

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return f;
}

// Writes to `path`, or to `out` when the path is empty.
void with_output(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  fn(f);
  if (!f) throw ParseError("write failed: " + path);
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

struct GridOpts {
  int L = 64;
  double delta = 0.25;
  double origin = -8.25;

  void add(CLI::App* app) {
    app->add_option("--grid,-L", L, "grid size L")->capture_default_str();
    app->add_option("--delta", delta, "grid spacing")->capture_default_str();
    app->add_option("--origin", origin, "node(i) = origin + i * delta")->capture_default_str();
  }
  HalfPlaneGrid<double> grid() const {
    if (L < 1) throw DomainError("grid size must be positive");
    if (!(delta > 0.0)) throw DomainError("grid spacing must be positive");
    return {L, delta, origin};
  }
};

// Multi-column numeric CSV with a header row.
Matrix read_matrix_csv(std::istream& in) {
  Matrix x;
  std::string line;
  if (!std::getline(in, line)) return x;
  const std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Vector row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto v = parse_double(cell);
      if (!v) throw ParseError("line " + std::to_string(lineno) + ": not a number: '" + cell + "'");
      row.push_back(*v);
    }
    if (row.size() != cols) throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns");
    x.push_back(std::move(row));
  }
  return x;
}

// ---------------------------------------------------------------------------

void cmd_stack_trace(const std::string& input, const std::string& output, std::ostream& out) {
  auto f = open_in(input);
  const auto u = read_signal_csv(f);
  with_output(output, out, [&](std::ostream& o) {
    CornerTraceWriter w(o);
    ReducedMemory<double> rm;
    for (std::size_t t = 0; t < u.size(); ++t) {
      rm.update(u[t]);
      w.write(t, rm.corners());
    }
  });
}

void cmd_pal_eval(const std::string& measure, const std::string& input, const std::string& mode, bool check,
                  const GridOpts& g, const std::string& output, std::ostream& out) {
  auto mf = open_in(measure);
  const auto m = read_measure_csv(mf, g.grid());
  auto uf = open_in(input);
  const auto u = read_signal_csv(uf);
  m.prepare();

  std::vector<double> values;
  values.reserve(u.size());
  if (mode == "incremental") {
    PalStream<double> s(m);
    for (double x : u) values.push_back(s.step(x));
  } else {
    ReducedMemory<double> rm;
    for (double x : u) {
      rm.update(x);
      values.push_back(mode == "naive" ? pal_eval_naive(m, rm) : pal_eval_staircase(m, rm));
    }
  }
  if (check) {
    ReducedMemory<double> rm;
    for (std::size_t t = 0; t < u.size(); ++t) {
      rm.update(u[t]);
      const double ref = pal_eval_naive(m, rm);
      const double scale = std::max(1.0, std::abs(ref));
      if (std::abs(values[t] - ref) > 1e-9 * scale) {
        throw DomainError("mode " + mode + " disagrees with naive at step " + std::to_string(t) + ": " +
                          num(values[t]) + " vs " + num(ref));
      }
    }
  }
  with_output(output, out, [&](std::ostream& o) {
    o << "step,value\n";
    for (std::size_t t = 0; t < values.size(); ++t) o << t << ',' << num(values[t]) << '\n';
  });
}

bool same_trace(const SimResult& a, const SimResult& b) {
  if (a.accepted != b.accepted || a.trace.size() != b.trace.size()) return false;
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    if (!a.trace[k].same_config(b.trace[k])) return false;
  }
  return true;
}

void cmd_pda_run(const std::string& spec_path, const std::string& machine, const std::string& word, bool oracle,
                 bool vpal, std::size_t max_depth, const std::string& trace_path, std::ostream& out) {
  PdaSpec spec;
  if (!spec_path.empty()) {
    spec = load_pda_json_file(spec_path);
  } else if (machine == "bracket") {
    spec = bracket_machine();
  } else if (machine == "anbncn") {
    spec = anbncn_machine();
  } else {
    throw ParseError("unknown machine '" + machine + "' (bracket, anbncn) and no --spec given");
  }
  const auto w = parse_word(spec, word);
  const SimResult r = vpal ? run_vpal(spec, w, max_depth) : run_channels(spec, w, max_depth);
  if (oracle) {
    const SimResult ref = run_reference(spec, w);
    if (!same_trace(r, ref)) throw DomainError("channel run disagrees with the reference interpreter");
    if (vpal && !same_trace(r, run_channels(spec, w, max_depth))) {
      throw DomainError("two-coordinate run disagrees with the four-channel run");
    }
  }
  if (trace_path.empty()) {
    write_trace_jsonl(out, spec, r);
  } else {
    with_output(trace_path, out, [&](std::ostream& o) { write_trace_jsonl(o, spec, r); });
    out << (r.accepted ? "accept" : "reject") << '\n';
  }
}

void cmd_efo(const std::string& formula_path, const std::string& expr, const std::string& input, bool compile,
             const GridOpts& g, const std::string& output, std::ostream& out) {
  std::string text = expr;
  if (!formula_path.empty()) {
    auto f = open_in(formula_path);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  if (text.empty()) throw ParseError("no formula: give --formula or --expr");
  const auto f = efo::parse(text);
  std::optional<std::vector<double>> u;
  if (!input.empty()) {
    auto in = open_in(input);
    u = read_signal_csv(in);
  }
  if (compile) {
    const auto c = efo::compile_extagg(f, g.grid());
    with_output(output, out, [&](std::ostream& o) { write_measure_csv(o, c.measure); });
    if (u && !u->empty()) {
      const auto chk = efo::check_compiled(c, *u);
      std::ostream& report = output.empty() ? std::cerr : out;
      report << "pal=" << num(chk.pal) << " direct=" << num(chk.direct) << " error=" << num(chk.error)
             << " tolerance=" << num(chk.tolerance) << (chk.within() ? " within" : " outside") << '\n';
    }
    return;
  }
  if (!u) throw ParseError("evaluation needs --input");
  const auto v = efo::eval(f, *u);
  with_output(output, out, [&](std::ostream& o) {
    if (v.type == efo::Type::boolean) {
      o << (v.b ? "true" : "false") << '\n';
    } else {
      o << num(v.r) << '\n';
    }
  });
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto x = parse_double(cell);
    if (!x) throw ParseError("not a number in list: '" + cell + "'");
    v.push_back(*x);
  }
  return v;
}

void cmd_relax(const std::string& input, double alpha, double beta, double tau, double s0, std::ostream& out) {
  auto f = open_in(input);
  const auto u = read_signal_csv(f);
  const auto r = fd_check(u, {alpha, beta, tau}, s0);
  out << "{\"value\": " << num(r.analytic.value) << ", \"d_alpha\": " << num(r.analytic.d_alpha)
      << ", \"d_beta\": " << num(r.analytic.d_beta) << ", \"d_tau\": " << num(r.analytic.d_tau)
      << ", \"d_s0\": " << num(r.analytic.d_s0) << ", \"fd_max_rel_error\": " << num(r.max_rel_error)
      << ", \"fd_worst\": \"" << r.worst << "\"}\n";
}

void cmd_layer(const std::string& model, const std::string& input, const std::string& output, std::ostream& out) {
  const auto layer = load_layer_json_file(model);
  auto f = open_in(input);
  const auto x = read_matrix_csv(f);
  const auto y = pal_transformer_forward(layer, x);
  with_output(output, out, [&](std::ostream& o) {
    for (std::size_t k = 0; k < layer.d; ++k) o << (k ? "," : "") << 'y' << k;
    o << '\n';
    for (const auto& row : y) {
      for (std::size_t k = 0; k < row.size(); ++k) o << (k ? "," : "") << num(row[k]);
      o << '\n';
    }
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preisach attention toolkit", "palc"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string input, output, mode = "incremental", measure, spec_path, machine = "bracket", word, trace_path;
  std::string formula_path, expr, config_path;
  bool check = false, oracle = false, vpal = false, compile = false;
  std::size_t max_depth = 64;
  GridOpts grid;
  std::uint64_t seed = 0;

  auto* st = app.add_subcommand("stack-trace", "corner list after every sample");
  st->add_option("--input,-i", input, "signal CSV (header u)")->required();
  st->add_option("--output,-o", output, "trace CSV (default stdout)");

  auto* pe = app.add_subcommand("pal-eval", "PAL output after every sample");
  pe->add_option("--measure,-m", measure, "measure CSV (i,j,mu)")->required();
  pe->add_option("--input,-i", input, "signal CSV (header u)")->required();
  pe->add_option("--mode", mode, "naive | fast | incremental")
      ->check(CLI::IsMember({"naive", "fast", "incremental"}))
      ->capture_default_str();
  pe->add_flag("--check", check, "cross-check every step against the naive path");
  pe->add_option("--output,-o", output, "output CSV (default stdout)");
  grid.add(pe);

  auto* pd = app.add_subcommand("pda-run", "two-stack machine on hysteresis channels");
  pd->add_option("--spec", spec_path, "machine JSON");
  pd->add_option("--machine", machine, "built-in machine when no --spec: bracket | anbncn")->capture_default_str();
  pd->add_option("--word,-w", word, "input word")->required();
  pd->add_flag("--check-oracle", oracle, "compare every step with the reference interpreter");
  pd->add_flag("--vpal", vpal, "run both stacks as one two-coordinate signal");
  pd->add_option("--max-depth", max_depth, "stack depth bound")->capture_default_str();
  pd->add_option("--trace", trace_path, "write the JSON-lines trace here and print accept/reject");

  auto* ef = app.add_subcommand("efo", "evaluate or compile an extremum first-order formula");
  ef->add_option("--formula,-f", formula_path, "formula file");
  ef->add_option("--expr,-e", expr, "formula text");
  ef->add_option("--input,-i", input, "signal CSV (header u)");
  ef->add_flag("--compile", compile, "compile a depth-1 extagg term to a measure CSV");
  ef->add_option("--output,-o", output, "output (default stdout)");
  grid.add(ef);

  auto* rf = app.add_subcommand("rfim", "mean-field random-field Ising model");
  rf->require_subcommand(1);
  auto* sweep = rf->add_subcommand("sweep", "hysteresis loop along the configured field grid");
  sweep->add_option("--config,-c", config_path, "config JSON")->required();
  sweep->add_option("--output,-o", output, "CSV H,m,branch,avalanche_size");
  auto* preisach = rf->add_subcommand("preisach", "relay-ensemble deviation from the spin dynamics");
  preisach->add_option("--config,-c", config_path, "config JSON")->required();
  double J = 1.0;
  std::size_t N = 100000;
  std::string disorders = "0.5,0.8,1.2";
  auto* scan = rf->add_subcommand("scan", "largest magnetisation jump per disorder");
  scan->add_option("--J", J, "coupling")->capture_default_str();
  scan->add_option("--N", N, "spin count")->capture_default_str();
  scan->add_option("--disorders", disorders, "comma-separated disorder stds")->capture_default_str();
  scan->add_option("--seed", seed, "seed")->capture_default_str();
  scan->add_option("--output,-o", output, "CSV disorder,max_jump");

  std::size_t n_max = 1000000, naive_max = 100000;
  int runs = 5;
  auto* be = app.add_subcommand("bench", "fast vs naive PAL timings");
  be->add_option("--n-max", n_max, "largest n (powers of ten from 1e3)")->capture_default_str();
  be->add_option("--grid,-L", grid.L, "grid size L")->capture_default_str();
  be->add_option("--naive-max", naive_max, "largest n on the naive path")->capture_default_str();
  be->add_option("--runs", runs, "timed runs per point (median)")->capture_default_str();
  be->add_option("--seed", seed, "seed")->capture_default_str();
  be->add_option("--output,-o", output, "timing CSV (default stdout)");

  double alpha = 1.0, beta = -1.0, tau = 0.1, s0 = 0.0;
  auto* rx = app.add_subcommand("relax", "smooth relay gradients with a finite-difference check");
  rx->add_option("--input,-i", input, "signal CSV (header u)")->required();
  rx->add_option("--alpha", alpha)->capture_default_str();
  rx->add_option("--beta", beta)->capture_default_str();
  rx->add_option("--tau", tau)->capture_default_str();
  rx->add_option("--s0", s0)->capture_default_str();

  std::string model;
  auto* ly = app.add_subcommand("layer", "one PAL transformer layer over a vector sequence");
  ly->add_option("--model", model, "layer JSON")->required();
  ly->add_option("--input,-i", input, "CSV with one column per coordinate")->required();
  ly->add_option("--output,-o", output, "output CSV (default stdout)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*st) {
      cmd_stack_trace(input, output, out);
    } else if (*pe) {
      cmd_pal_eval(measure, input, mode, check, grid, output, out);
    } else if (*pd) {
      cmd_pda_run(spec_path, machine, word, oracle, vpal, max_depth, trace_path, out);
    } else if (*ef) {
      cmd_efo(formula_path, expr, input, compile, grid, output, out);
    } else if (*sweep) {
      const auto cfg = load_rfim_config_json_file(config_path);
      const auto r = rfim_sweep(cfg);
      with_output(output, out, [&](std::ostream& o) { write_sweep_csv(o, r); });
    } else if (*preisach) {
      const auto cfg = load_rfim_config_json_file(config_path);
      const auto r = preisach_equiv_check(cfg);
      out << "max_deviation=" << num(r.max_deviation) << " max_residual=" << num(r.max_residual)
          << " max_iterations=" << r.max_iterations << '\n';
    } else if (*scan) {
      const auto s = criticality_scan(J, parse_list(disorders), N, seed);
      with_output(output, out, [&](std::ostream& o) {
        o << "disorder,max_jump\n";
        for (const auto& p : s) o << num(p.disorder) << ',' << num(p.max_jump) << '\n';
      });
    } else if (*be) {
      const auto r = run_bench(n_max, grid.L, seed, runs, naive_max);
      with_output(output, out, [&](std::ostream& o) { write_bench_csv(o, r); });
      err << "fast_slope=" << num(r.fast_slope) << " speedup=" << num(r.speedup) << " at n=" << r.speedup_n
          << " ops_within_2n=" << (r.ops_ok ? "true" : "false") << '\n';
    } else if (*rx) {
      cmd_relax(input, alpha, beta, tau, s0, out);
    } else if (*ly) {
      cmd_layer(model, input, output, out);
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace palc
