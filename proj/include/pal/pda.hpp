#pragma once

// Two-stack pushdown automata simulated on hysteresis channels.
//
// Each stack lives in the corner list of an exact-rational reduced memory.
// Symbol a_i at depth d occupies slot 2i of the depth-(d-1) interval cut into
// 2k+1 equal parts, so every push adds a strictly nested (hi, lo) corner pair
// and decoding is exact interval arithmetic.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "pal/hysteresis.hpp"

namespace pal {

struct Interval {
  Rational lo;
  Rational hi;
  bool operator==(const Interval&) const = default;
};

class NestedIntervalCoder {
 public:
  explicit NestedIntervalCoder(int k);

  int k() const { return k_; }
  static Interval root() { return {Rational(0), Rational(1)}; }

  /// Slot 2i of `parent`: [lo + (2i-1)w/(2k+1), lo + 2i w/(2k+1)].
  Interval child(const Interval& parent, int i) const;
  /// Inverse of child(); throws DomainError when `c` is not a slot of `parent`.
  int symbol_of(const Interval& parent, const Interval& c) const;
  /// Width of one of the 2k+1 parts of `parent`.
  Rational part(const Interval& parent) const;

 private:
  int k_;
};

/// Decoded view of a channel memory: the symbol indices bottom to top.
/// Corners must read [1, 0, hi_1, lo_1, ..., hi_D, lo_D].
std::vector<int> decode_stack(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder);
/// Interval of the top element (the root interval for an empty stack).
Interval top_interval(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder);

struct TopSymbol {
  int symbol;
  std::size_t depth;
};
/// Symbol and depth of the top element, read from the last corner pair and
/// checked against the whole chain; nullopt on an empty stack.
std::optional<TopSymbol> top_decode(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder);

std::array<Rational, 2> push_signals(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder,
                                     int symbol, std::size_t max_depth);
std::array<Rational, 2> pop_signals(const ReducedMemory<Rational>& rm, const NestedIntervalCoder& coder);

/// One stack channel: a reduced memory primed with the root pair (1, 0).
class Channel {
 public:
  Channel(int k, std::size_t max_depth = 64);

  std::array<Rational, 2> push(int symbol);
  std::array<Rational, 2> pop();
  std::optional<TopSymbol> top() const { return top_decode(rm_, coder_); }
  std::vector<int> decode() const { return decode_stack(rm_, coder_); }
  std::size_t depth() const { return (rm_.size() - 2) / 2; }
  void feed(const Rational& u) { rm_.update(u); }

  const ReducedMemory<Rational>& memory() const { return rm_; }
  const NestedIntervalCoder& coder() const { return coder_; }
  std::size_t max_depth() const { return max_depth_; }

 private:
  NestedIntervalCoder coder_;
  std::size_t max_depth_;
  ReducedMemory<Rational> rm_;
};

// ---------------------------------------------------------------------------
// Machines

struct StackOp {
  bool push = false;
  int symbol = 0;  // 1-based stack symbol when push
};

struct Transition {
  int from = 0;
  int input = 0;  // 0 = epsilon, else 1-based input symbol
  int top1 = 0;   // 1-based stack symbols
  int top2 = 0;
  int to = 0;
  std::vector<StackOp> ops1;
  std::vector<StackOp> ops2;
};

/// Deterministic two-stack PDA. States are 0-based; input and stack symbols
/// are 1-based (input 0 is epsilon, stack symbol i is coder slot a_i).
struct PdaSpec {
  std::vector<std::string> states;
  std::vector<std::string> input_alphabet;
  std::vector<std::string> stack_alphabet;
  int q0 = 0;
  int z0 = 1;
  std::vector<int> accept;
  std::vector<Transition> delta;

  int state_index(const std::string& name) const;
  int input_index(const std::string& name) const;
  int stack_index(const std::string& name) const;
  bool accepting(int q) const;
  /// Checks names, determinism and epsilon/input conflicts.
  void validate() const;
};

PdaSpec load_pda_json(std::istream& in);
PdaSpec load_pda_json_file(const std::string& path);
std::string pda_to_json(const PdaSpec& spec);

PdaSpec bracket_machine();
PdaSpec anbncn_machine();

/// Word as input-symbol indices; throws DomainError on unknown characters.
/// Each symbol must be a single character.
std::vector<int> parse_word(const PdaSpec& spec, const std::string& word);

// ---------------------------------------------------------------------------
// Runs

struct StepRecord {
  std::size_t step = 0;
  int state = 0;
  std::vector<int> stack1;  // bottom to top
  std::vector<int> stack2;
  int input = 0;  // consumed symbol, 0 for an epsilon move
  std::vector<Rational> signals1;
  std::vector<Rational> signals2;

  /// Compares the logical content (state, stacks, input) only.
  bool same_config(const StepRecord& o) const {
    return state == o.state && stack1 == o.stack1 && stack2 == o.stack2 && input == o.input;
  }
};

struct SimResult {
  bool accepted = false;
  bool consumed_all = false;
  bool step_limit = false;
  std::vector<StepRecord> trace;  // trace[0] is the initial configuration
};

/// Plain interpreter with list stacks and map lookup; the oracle.
SimResult run_reference(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_steps = 0);

/// Four hysteresis channels (state, stack 1, stack 2, input). The driver
/// supplies input symbols; transitions are applied through an indicator table.
SimResult run_channels(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_depth = 64,
                       std::size_t max_steps = 0);

/// Both stacks as the two coordinates of one 2-D signal read by a single head
/// with two memories; the idle coordinate repeats its last value.
SimResult run_vpal(const PdaSpec& spec, const std::vector<int>& word, std::size_t max_depth = 64,
                   std::size_t max_steps = 0);

/// JSON-lines trace, one object per step.
void write_trace_jsonl(std::ostream& out, const PdaSpec& spec, const SimResult& r);

/// Dense indicator table over (state, input-or-eps, top1, top2): one hidden
/// unit per transition fires on an exact one-hot match.
class TransitionTable {
 public:
  explicit TransitionTable(const PdaSpec& spec);
  /// Index into spec.delta, or -1.
  int lookup(int state, int input, int top1, int top2) const;

 private:
  std::size_t nq_, na_, ng_;
  std::vector<std::array<std::size_t, 4>> units_;  // one-hot positions per transition
};

}  // namespace pal
