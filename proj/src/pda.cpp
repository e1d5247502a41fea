#include "pal/pda.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

namespace pal {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Coder

NestedIntervalCoder::NestedIntervalCoder(int k) : k_(k) {
  if (k < 1) throw DomainError("stack alphabet must be nonempty");
}

Rational NestedIntervalCoder::part(const Interval& p) const {
  Rational w = (p.hi - p.lo) / Rational(2 * k_ + 1);
  w.canonicalize();
  return w;
}

Interval NestedIntervalCoder::child(const Interval& p, int i) const {
  if (i < 1 || i > k_) {
    throw DomainError("symbol index " + std::to_string(i) + " outside 1.." + std::to_string(k_));
  }
  const Rational w = part(p);
  return {p.lo + Rational(2 * i - 1) * w, p.lo + Rational(2 * i) * w};
}

int NestedIntervalCoder::symbol_of(const Interval& p, const Interval& c) const {
  const Rational w = part(p);
  if (c.hi - c.lo != w) throw DomainError("corrupt channel: child width is not one slot");
  Rational slots = (c.lo - p.lo) / w;
  slots.canonicalize();
  if (slots.get_den() != 1) throw DomainError("corrupt channel: corner off the coder lattice");
  const long s = slots.get_num().get_si();
  if (s < 1 || s > 2 * k_ - 1 || s % 2 == 0) throw DomainError("corrupt channel: corner in a margin slot");
  return static_cast<int>((s + 1) / 2);
}

namespace {

template <typename F>
void walk_pairs(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder, F&& on_level) {
  const auto& e = rm.corners();
  if (e.size() < 2 || e[0] != 1 || e[1] != 0 || e.size() % 2 != 0) {
    throw DomainError("corrupt channel: corners do not form nested pairs above the root");
  }
  Interval parent = NestedIntervalCoder::root();
  for (std::size_t k = 2; k < e.size(); k += 2) {
    const Interval c{e[k + 1], e[k]};
    const int sym = coder.symbol_of(parent, c);
    on_level(sym, c);
    parent = c;
  }
}

}  // namespace

std::vector<int> decode_stack(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder) {
  std::vector<int> out;
  walk_pairs(rm, coder, [&](int sym, const Interval&) { out.push_back(sym); });
  return out;
}

Interval top_interval(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder) {
  Interval top = NestedIntervalCoder::root();
  walk_pairs(rm, coder, [&](int, const Interval& c) { top = c; });
  return top;
}

std::optional<TopSymbol> top_decode(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder) {
  std::optional<TopSymbol> top;
  std::size_t depth = 0;
  walk_pairs(rm, coder, [&](int sym, const Interval&) { top = TopSymbol{sym, ++depth}; });
  return top;
}

std::array<Rational, 2> push_signals(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder,
                                     int symbol, std::size_t max_depth) {
  const std::size_t depth = (rm.size() - 2) / 2;
  if (depth >= max_depth) throw DomainError("stack depth bound " + std::to_string(max_depth) + " exceeded");
  const Interval c = coder.child(top_interval(rm, coder), symbol);
  return {c.hi, c.lo};
}

std::array<Rational, 2> pop_signals(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder) {
  const auto& e = rm.corners();
  if (e.size() < 4) throw DomainError("pop on an empty stack");
  // Parent interval of the top element, needed for the margin width.
  Interval parent = NestedIntervalCoder::root();
  Interval top = parent;
  walk_pairs(rm, coder, [&](int, const Interval& c) {
    parent = top;
    top = c;
  });
  // Half a slot above the top pair: wipes it and stays below the parent's hi.
  const Rational u1 = top.hi + coder.part(parent) / 2;
  // Falling back to the parent's lo closes the transient loop by equality.
  return {u1, parent.lo};
}

Channel::Channel(int k, std::size_t max_depth) : coder_(k), max_depth_(max_depth) {
  rm_.update(Rational(1));
  rm_.update(Rational(0));
}

std::array<Rational, 2> Channel::push(int symbol) {
  auto s = push_signals(rm_, coder_, symbol, max_depth_);
  for (const auto& u : s) rm_.update(u);
  return s;
}

std::array<Rational, 2> Channel::pop() {
  auto s = pop_signals(rm_, coder_);
  for (const auto& u : s) rm_.update(u);
  return s;
}

// ---------------------------------------------------------------------------
// Spec

namespace {

int find_name(const std::vector<std::string>& names, const std::string& n, const char* what, int base) {
  const auto it = std::find(names.begin(), names.end(), n);
  if (it == names.end()) throw DomainError(std::string("unknown ") + what + " '" + n + "'");
  return static_cast<int>(it - names.begin()) + base;
}

}  // namespace

int PdaSpec::state_index(const std::string& n) const { return find_name(states, n, "state", 0); }
int PdaSpec::input_index(const std::string& n) const { return find_name(input_alphabet, n, "input symbol", 1); }
int PdaSpec::stack_index(const std::string& n) const { return find_name(stack_alphabet, n, "stack symbol", 1); }

bool PdaSpec::accepting(int q) const { return std::find(accept.begin(), accept.end(), q) != accept.end(); }

void PdaSpec::validate() const {
  const int nq = static_cast<int>(states.size());
  const int na = static_cast<int>(input_alphabet.size());
  const int ng = static_cast<int>(stack_alphabet.size());
  if (nq == 0) throw DomainError("machine has no states");
  if (ng == 0) throw DomainError("machine has no stack symbols");
  if (q0 < 0 || q0 >= nq) throw DomainError("initial state out of range");
  if (z0 < 1 || z0 > ng) throw DomainError("bottom marker out of range");
  for (int q : accept)
    if (q < 0 || q >= nq) throw DomainError("accepting state out of range");
  std::set<std::tuple<int, int, int, int>> seen;
  for (const auto& t : delta) {
    if (t.from < 0 || t.from >= nq || t.to < 0 || t.to >= nq) throw DomainError("transition state out of range");
    if (t.input < 0 || t.input > na) throw DomainError("transition input out of range");
    if (t.top1 < 1 || t.top1 > ng || t.top2 < 1 || t.top2 > ng) {
      throw DomainError("transition stack tops out of range");
    }
    for (const auto* ops : {&t.ops1, &t.ops2})
      for (const auto& op : *ops)
        if (op.push && (op.symbol < 1 || op.symbol > ng)) throw DomainError("pushed symbol out of range");
    if (!seen.insert({t.from, t.input, t.top1, t.top2}).second) {
      throw DomainError("nondeterministic machine: duplicate transition from state '" + states[t.from] + "'");
    }
  }
  // An epsilon move must not compete with an input move on the same tops.
  for (const auto& t : delta) {
    if (t.input != 0) continue;
    for (const auto& u : delta) {
      if (u.input != 0 && u.from == t.from && u.top1 == t.top1 && u.top2 == t.top2) {
        throw DomainError("nondeterministic machine: epsilon and input moves share a configuration");
      }
    }
  }
}

namespace {

std::vector<StackOp> parse_ops(const PdaSpec& s, const json& j) {
  std::vector<StackOp> ops;
  for (const auto& o : j) {
    const std::string text = o.get<std::string>();
    if (text == "pop") {
      ops.push_back({false, 0});
    } else if (text.rfind("push ", 0) == 0) {
      ops.push_back({true, s.stack_index(text.substr(5))});
    } else {
      throw ParseError("bad stack op '" + text + "' (expected \"pop\" or \"push X\")");
    }
  }
  return ops;
}

json ops_json(const PdaSpec& s, const std::vector<StackOp>& ops) {
  json out = json::array();
  for (const auto& op : ops) out.push_back(op.push ? "push " + s.stack_alphabet[op.symbol - 1] : "pop");
  return out;
}

}  // namespace

PdaSpec load_pda_json(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("machine file: ") + e.what());
  }
  try {
    PdaSpec s;
    s.states = j.at("states").get<std::vector<std::string>>();
    s.input_alphabet = j.at("input_alphabet").get<std::vector<std::string>>();
    s.stack_alphabet = j.at("stack_alphabet").get<std::vector<std::string>>();
    s.q0 = s.state_index(j.at("q0").get<std::string>());
    s.z0 = s.stack_index(j.at("z0").get<std::string>());
    for (const auto& q : j.at("accept")) s.accept.push_back(s.state_index(q.get<std::string>()));
    for (const auto& t : j.at("delta")) {
      Transition tr;
      tr.from = s.state_index(t.at("from").get<std::string>());
      const auto& inp = t.at("input");
      tr.input = (inp.is_null() || inp.get<std::string>().empty()) ? 0 : s.input_index(inp.get<std::string>());
      tr.top1 = s.stack_index(t.at("top1").get<std::string>());
      tr.top2 = s.stack_index(t.at("top2").get<std::string>());
      tr.to = s.state_index(t.at("to").get<std::string>());
      tr.ops1 = parse_ops(s, t.value("ops1", json::array()));
      tr.ops2 = parse_ops(s, t.value("ops2", json::array()));
      s.delta.push_back(std::move(tr));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("machine file: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("machine file: ") + e.what());
  }
}

PdaSpec load_pda_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return load_pda_json(in);
}

std::string pda_to_json(const PdaSpec& s) {
  json delta = json::array();
  for (const auto& t : s.delta) {
    delta.push_back({{"from", s.states[t.from]},
                     {"input", t.input == 0 ? json(nullptr) : json(s.input_alphabet[t.input - 1])},
                     {"top1", s.stack_alphabet[t.top1 - 1]},
                     {"top2", s.stack_alphabet[t.top2 - 1]},
                     {"to", s.states[t.to]},
                     {"ops1", ops_json(s, t.ops1)},
                     {"ops2", ops_json(s, t.ops2)}});
  }
  json accept = json::array();
  for (int q : s.accept) accept.push_back(s.states[q]);
  const json j = {{"states", s.states},
                  {"input_alphabet", s.input_alphabet},
                  {"stack_alphabet", s.stack_alphabet},
                  {"q0", s.states[s.q0]},
                  {"z0", s.stack_alphabet[s.z0 - 1]},
                  {"accept", accept},
                  {"delta", delta}};
  return j.dump(2);
}

PdaSpec bracket_machine() {
  PdaSpec s;
  s.states = {"q"};
  s.input_alphabet = {"(", ")"};
  s.stack_alphabet = {"Z", "X"};
  s.q0 = 0;
  s.z0 = 1;
  s.accept = {0};
  const StackOp pop{false, 0}, push_x{true, 2};
  // stack 2 stays at its bottom marker
  s.delta.push_back({0, 1, 1, 1, 0, {push_x}, {}});
  s.delta.push_back({0, 1, 2, 1, 0, {push_x}, {}});
  s.delta.push_back({0, 2, 2, 1, 0, {pop}, {}});
  s.validate();
  return s;
}

PdaSpec anbncn_machine() {
  PdaSpec s;
  s.states = {"A", "B", "C"};
  s.input_alphabet = {"a", "b", "c"};
  s.stack_alphabet = {"Z", "X", "Y"};
  s.q0 = 0;
  s.z0 = 1;
  s.accept = {0, 2};
  const StackOp pop{false, 0}, push_x{true, 2}, push_y{true, 3};
  const int A = 0, B = 1, C = 2, a = 1, b = 2, c = 3, Z = 1, X = 2, Y = 3;
  s.delta.push_back({A, a, Z, Z, A, {push_x}, {}});
  s.delta.push_back({A, a, X, Z, A, {push_x}, {}});
  s.delta.push_back({A, b, X, Z, B, {pop}, {push_y}});
  s.delta.push_back({B, b, X, Y, B, {pop}, {push_y}});
  s.delta.push_back({B, c, Z, Y, C, {}, {pop}});
  s.delta.push_back({C, c, Z, Y, C, {}, {pop}});
  s.validate();
  return s;
}

std::vector<int> parse_word(const PdaSpec& s, const std::string& word) {
  std::vector<int> out;
  for (char ch : word) {
    const auto it = std::find(s.input_alphabet.begin(), s.input_alphabet.end(), std::string(1, ch));
    if (it == s.input_alphabet.end()) throw DomainError(std::string("symbol '") + ch + "' not in the input alphabet");
    out.push_back(static_cast<int>(it - s.input_alphabet.begin()) + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transition table

TransitionTable::TransitionTable(const PdaSpec& spec)
    : nq_(spec.states.size()), na_(spec.input_alphabet.size() + 1), ng_(spec.stack_alphabet.size()) {
  for (const auto& t : spec.delta) {
    units_.push_back({static_cast<std::size_t>(t.from), nq_ + static_cast<std::size_t>(t.input),
                      nq_ + na_ + static_cast<std::size_t>(t.top1 - 1),
                      nq_ + na_ + ng_ + static_cast<std::size_t>(t.top2 - 1)});
  }
}

int TransitionTable::lookup(int state, int input, int top1, int top2) const {
  if (top1 < 1 || top2 < 1) return -1;  // an empty stack has no top to match
  std::vector<int> x(nq_ + na_ + 2 * ng_, 0);
  x[static_cast<std::size_t>(state)] = 1;
  x[nq_ + static_cast<std::size_t>(input)] = 1;
  x[nq_ + na_ + static_cast<std::size_t>(top1 - 1)] = 1;
  x[nq_ + na_ + ng_ + static_cast<std::size_t>(top2 - 1)] = 1;
  // hidden unit e: relu(sum of its four one-hot inputs - 3); output sum_e h_e (e + 1) - 1
  int out = 0;
  for (std::size_t e = 0; e < units_.size(); ++e) {
    const int pre = x[units_[e][0]] + x[units_[e][1]] + x[units_[e][2]] + x[units_[e][3]] - 3;
    out += std::max(pre, 0) * static_cast<int>(e + 1);
  }
  return out - 1;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

std::size_t default_steps(std::size_t n) { return 64 * (n + 1) + 1024; }

struct ListBackend {
  const PdaSpec& spec;
  int q;
  std::vector<int> s[2];
  std::map<std::tuple<int, int, int, int>, int> index;

  explicit ListBackend(const PdaSpec& sp) : spec(sp), q(sp.q0) {
    s[0] = {sp.z0};
    s[1] = {sp.z0};
    for (std::size_t e = 0; e < sp.delta.size(); ++e) {
      const auto& t = sp.delta[e];
      index[{t.from, t.input, t.top1, t.top2}] = static_cast<int>(e);
    }
  }
  int state() const { return q; }
  void set_state(int nq) { q = nq; }
  void consume(int) {}
  int top(int k) const { return s[k].empty() ? 0 : s[k].back(); }
  int lookup(int input, int t1, int t2) const {
    const auto it = index.find({q, input, t1, t2});
    return it == index.end() ? -1 : it->second;
  }
  bool apply(int k, const std::vector<StackOp>& ops, std::vector<Rational>&) {
    for (const auto& op : ops) {
      if (op.push) {
        s[k].push_back(op.symbol);
      } else {
        if (s[k].empty()) return false;
        s[k].pop_back();
      }
    }
    return true;
  }
  std::vector<int> stack(int k) const { return s[k]; }
};

struct ChannelBackend {
  const PdaSpec& spec;
  TransitionTable table;
  ReducedMemory<Rational> state_ch;
  ReducedMemory<Rational> input_ch;
  Channel st[2];

  ChannelBackend(const PdaSpec& sp, std::size_t max_depth)
      : spec(sp),
        table(sp),
        st{Channel(static_cast<int>(sp.stack_alphabet.size()), max_depth),
           Channel(static_cast<int>(sp.stack_alphabet.size()), max_depth)} {
    state_ch.update(Rational(sp.q0 + 1));
    for (auto& c : st) c.push(sp.z0);
  }
  int state() const { return static_cast<int>(state_ch.corners().back().get_num().get_si()) - 1; }
  void set_state(int nq) { state_ch.update(Rational(nq + 1)); }
  void consume(int a) { input_ch.update(Rational(a)); }
  int top(int k) const {
    const auto t = st[k].top();
    return t ? t->symbol : 0;
  }
  int lookup(int input, int t1, int t2) const { return table.lookup(state(), input, t1, t2); }
  bool apply(int k, const std::vector<StackOp>& ops, std::vector<Rational>& sig) {
    for (const auto& op : ops) {
      if (!op.push && st[k].depth() == 0) return false;
      const auto s = op.push ? st[k].push(op.symbol) : st[k].pop();
      sig.insert(sig.end(), s.begin(), s.end());
    }
    return true;
  }
  std::vector<int> stack(int k) const { return st[k].decode(); }
};

/// One head, two memories over a 2-D signal; the state is kept by the driver.
struct VpalBackend {
  const PdaSpec& spec;
  TransitionTable table;
  NestedIntervalCoder coder;
  std::size_t max_depth;
  ReducedMemory<Rational> rm[2];
  Rational last[2];
  int q;

  VpalBackend(const PdaSpec& sp, std::size_t md)
      : spec(sp), table(sp), coder(static_cast<int>(sp.stack_alphabet.size())), max_depth(md), q(sp.q0) {
    feed({Rational(1), Rational(1)});
    feed({Rational(0), Rational(0)});
    std::vector<Rational> sink;
    apply(0, {{true, sp.z0}}, sink);
    apply(1, {{true, sp.z0}}, sink);
  }
  void feed(std::array<Rational, 2> x) {
    for (int k = 0; k < 2; ++k) {
      rm[k].update(x[k]);
      last[k] = x[k];
    }
  }
  int state() const { return q; }
  void set_state(int nq) { q = nq; }
  void consume(int) {}
  int top(int k) const {
    const auto t = top_decode(rm[k], coder);
    return t ? t->symbol : 0;
  }
  int lookup(int input, int t1, int t2) const { return table.lookup(q, input, t1, t2); }
  bool apply(int k, const std::vector<StackOp>& ops, std::vector<Rational>& sig) {
    for (const auto& op : ops) {
      if (!op.push && (rm[k].size() - 2) / 2 == 0) return false;
      const auto s = op.push ? push_signals(rm[k], coder, op.symbol, max_depth) : pop_signals(rm[k], coder);
      for (const auto& u : s) {
        std::array<Rational, 2> x{last[0], last[1]};
        x[k] = u;
        feed(x);
        sig.push_back(u);
      }
    }
    return true;
  }
  std::vector<int> stack(int k) const { return decode_stack(rm[k], coder); }
};

template <typename Backend>
SimResult drive(const PdaSpec& spec, Backend& b, const std::vector<int>& word, std::size_t max_steps) {
  if (max_steps == 0) max_steps = default_steps(word.size());
  SimResult r;
  auto record = [&](std::size_t step, int input, std::vector<Rational> s1, std::vector<Rational> s2) {
    r.trace.push_back({step, b.state(), b.stack(0), b.stack(1), input, std::move(s1), std::move(s2)});
  };
  record(0, 0, {}, {});
  std::size_t pos = 0;
  bool ok = true;
  for (std::size_t step = 1;; ++step) {
    if (step > max_steps) {
      r.step_limit = true;
      break;
    }
    const int t1 = b.top(0), t2 = b.top(1);
    int input = 0;
    int e = b.lookup(0, t1, t2);
    if (e < 0 && pos < word.size()) {
      e = b.lookup(word[pos], t1, t2);
      input = word[pos];
    }
    if (e < 0) break;
    const auto& t = spec.delta[static_cast<std::size_t>(e)];
    std::vector<Rational> s1, s2;
    if (!b.apply(0, t.ops1, s1) || !b.apply(1, t.ops2, s2)) {
      ok = false;
      break;
    }
    if (input != 0) {
      b.consume(input);
      ++pos;
    }
    b.set_state(t.to);
    record(step, input, std::move(s1), std::move(s2));
  }
  r.consumed_all = pos == word.size();
  const std::vector<int> bottom{spec.z0};
  r.accepted = ok && !r.step_limit && r.consumed_all && spec.accepting(b.state()) &&
               b.stack(0) == bottom && b.stack(1) == bottom;
  return r;
}

}  // namespace

SimResult run_reference(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_steps) {
  spec.validate();
  ListBackend b(spec);
  return drive(spec, b, word, max_steps);
}

SimResult run_channels(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_depth,
                       std::size_t max_steps) {
  spec.validate();
  ChannelBackend b(spec, max_depth);
  return drive(spec, b, word, max_steps);
}

SimResult run_vpal(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_depth,
                   std::size_t max_steps) {
  spec.validate();
  VpalBackend b(spec, max_depth);
  return drive(spec, b, word, max_steps);
}

void write_trace_jsonl(std::ostream& out, const PdaSpec& spec, const SimResult& r) {
  auto names = [&](const std::vector<int>& st) {
    json a = json::array();
    for (int s : st) a.push_back(spec.stack_alphabet[static_cast<std::size_t>(s - 1)]);
    return a;
  };
  auto sigs = [](const std::vector<Rational>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x.get_str());
    return a;
  };
  for (const auto& s : r.trace) {
    const json j = {{"step", s.step},
                    {"state", spec.states[static_cast<std::size_t>(s.state)]},
                    {"input", s.input == 0 ? json(nullptr) : json(spec.input_alphabet[s.input - 1])},
                    {"stack1", names(s.stack1)},
                    {"stack2", names(s.stack2)},
                    {"signals1", sigs(s.signals1)},
                    {"signals2", sigs(s.signals2)}};
    out << j.dump() << '\n';
  }
  const json fin = {{"accepted", r.accepted}, {"consumed_all", r.consumed_all}, {"step_limit", r.step_limit}};
  out << fin.dump() << '\n';
}

}  // namespace pal
