#pragma once

// Extremum first-order logic: quantifiers range over the extremal positions
// of a scalar signal, ExtAgg sums a term over those positions.
//
// Concrete syntax (lowest to highest precedence):
//   |    &    !    comparisons (>= <= > <)    + -    *    unary -
// Primaries: true, false, numbers, u[i], `i <ext j`, parentheses,
//   exists^ext i . phi      forall^ext i . phi      (bodies extend right)
//   extagg i [term] where phi   (phi is a primary, `!` chain or parenthesised)

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pal/measure.hpp"

namespace pal::efo {

enum class Kind {
  True, False, Number, Sample, Compare, Before, And, Or, Not,
  Exists, Forall, ExtAgg, Add, Sub, Mul, Neg,
};

enum class CmpOp { ge, le, gt, lt };

enum class Type { boolean, real };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Kind kind;
  Type type;
  double number = 0.0;
  CmpOp op = CmpOp::ge;
  std::string var;   // Sample / quantified variable / left of <ext
  std::string var2;  // right of <ext
  std::vector<NodePtr> kids;  // ExtAgg: {term, where}
  int line = 1;
  int col = 1;
};

/// Throws ParseError ("line:col: message") on lexical, syntax, scope and
/// type errors. Formulas must be closed.
NodePtr parse(const std::string& text);

std::string to_string(const NodePtr& f);

/// Interior strict extrema of the plateau-compressed signal (first index of
/// each plateau) plus positions 0 and n-1.
std::vector<std::size_t> extremal_positions(std::span<const double> u);

struct Value {
  Type type;
  bool b = false;
  double r = 0.0;
};

Value eval(const NodePtr& f, std::span<const double> u);
/// Throw DomainError when the formula has the other type.
bool eval_bool(const NodePtr& f, std::span<const double> u);
double eval_real(const NodePtr& f, std::span<const double> u);

// Builders used by the relay and range constructions.
NodePtr relay_as_efo(double alpha, double beta);
/// Earliest global maximum minus earliest global minimum, as two ExtAgg terms.
NodePtr range_formula();

/// ExtAgg[1, phi] > 0 for an Exists node.
bool exists_via_threshold(const NodePtr& exists, std::span<const double> u);

/// Rectifier identities for Boolean combinations on {0,1}.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double mlp_and(double a, double b) { return relu(a + b - 1.0); }
inline double mlp_or(double a, double b) { return relu(a + b) - relu(a + b - 1.0); }
inline double mlp_not(double a) { return 1.0 - a; }

/// Projection used to scalarise vector sequences before evaluation.
std::vector<double> scalarise(const std::vector<std::vector<double>>& x, const std::vector<double>& projection);

struct AffineTerm {
  double a = 0.0;  // f(v) = a v + b
  double b = 0.0;
};

struct ThresholdAtom {
  CmpOp op;
  double c;
  bool holds(double v) const;
};

struct CompiledAgg {
  TriangularMeasure<double> measure;
  AffineTerm f;
  std::vector<ThresholdAtom> where;
};

/// Depth-1 ExtAgg compiled to a measure by putting f(alpha_i) * 1[phi(alpha_i)]
/// on the narrow cell (i, i-1). Throws DomainError for unsupported shapes
/// (non-affine term, atoms on other variables, disjunctions, nesting).
CompiledAgg compile_extagg(const NodePtr& agg, const HalfPlaneGrid<double>& grid);

struct CompileCheck {
  double pal = 0.0;        // PAL value of the compiled measure
  double direct = 0.0;     // evaluator value
  double error = 0.0;      // |pal - direct|
  double tolerance = 0.0;  // quantisation budget of the extremal values
  bool within() const { return error <= tolerance; }
};

/// Tolerance: every extremal value may move by one grid step (|a| Delta) and
/// extremal values within one step of a threshold may flip the filter
/// (max |f| over the signal range each).
CompileCheck check_compiled(const CompiledAgg& c, std::span<const double> u);

}  // namespace pal::efo
