#include "pal/efo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "pal/numeric.hpp"
#include "pal/pal.hpp"

namespace pal::efo {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
  end, ident, number, lbrack, rbrack, lparen, rparen, dot, amp, bar, bang,
  ge, le, gt, lt, plus, minus, star, caret, before,
};

struct Token {
  Tok kind;
  std::string text;
  double value = 0.0;
  int line, col;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    throw ParseError(std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  };
  auto advance = [&](std::size_t k) {
    for (std::size_t j = 0; j < k; ++j, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t{Tok::end, {}, 0.0, line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::ident;
      t.text = s.substr(i, j - i);
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() &&
                                                               std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
          j = k;
        }
      }
      t.kind = Tok::number;
      t.text = s.substr(i, j - i);
      t.value = std::stod(t.text);
      advance(j - i);
    } else {
      auto two = [&](char a, char b) { return c == a && i + 1 < s.size() && s[i + 1] == b; };
      std::size_t len = 1;
      if (c == '<' && s.compare(i, 4, "<ext") == 0 &&
          (i + 4 == s.size() || !(std::isalnum(static_cast<unsigned char>(s[i + 4])) || s[i + 4] == '_'))) {
        t.kind = Tok::before;
        len = 4;
      } else if (two('>', '=')) {
        t.kind = Tok::ge;
        len = 2;
      } else if (two('<', '=')) {
        t.kind = Tok::le;
        len = 2;
      } else {
        switch (c) {
          case '[': t.kind = Tok::lbrack; break;
          case ']': t.kind = Tok::rbrack; break;
          case '(': t.kind = Tok::lparen; break;
          case ')': t.kind = Tok::rparen; break;
          case '.': t.kind = Tok::dot; break;
          case '&': t.kind = Tok::amp; break;
          case '|': t.kind = Tok::bar; break;
          case '!': t.kind = Tok::bang; break;
          case '>': t.kind = Tok::gt; break;
          case '<': t.kind = Tok::lt; break;
          case '+': t.kind = Tok::plus; break;
          case '-': t.kind = Tok::minus; break;
          case '*': t.kind = Tok::star; break;
          case '^': t.kind = Tok::caret; break;
          default: fail(std::string("unexpected character '") + c + "'");
        }
      }
      t.text = s.substr(i, len);
      advance(len);
    }
    out.push_back(std::move(t));
  }
  out.push_back({Tok::end, "end of input", 0.0, line, col});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  NodePtr run() {
    NodePtr f = parse_or();
    if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "'");
    return f;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<std::string> scope_;

  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  bool keyword(const char* w) const { return peek().kind == Tok::ident && peek().text == w; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError(std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + msg);
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) fail(peek(), std::string("expected ") + what + ", found '" + peek().text + "'");
    return take();
  }

  static std::shared_ptr<Node> make(Kind k, Type ty, const Token& at) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->type = ty;
    n->line = at.line;
    n->col = at.col;
    return n;
  }
  static void want(const NodePtr& n, Type ty, const char* ctx) {
    if (n->type != ty) {
      throw ParseError(std::to_string(n->line) + ":" + std::to_string(n->col) + ": " + ctx + " needs a " +
                       (ty == Type::boolean ? "Boolean formula" : "real term"));
    }
  }
  void bound(const Token& t) const {
    if (std::find(scope_.begin(), scope_.end(), t.text) == scope_.end()) {
      fail(t, "unbound variable '" + t.text + "'");
    }
  }
  static bool reserved(const std::string& w) {
    return w == "true" || w == "false" || w == "u" || w == "exists" || w == "forall" || w == "extagg" ||
           w == "where" || w == "ext";
  }
  const Token& variable() {
    const Token& t = expect(Tok::ident, "variable");
    if (reserved(t.text)) fail(t, "'" + t.text + "' is reserved");
    return t;
  }

  NodePtr binary(Kind k, Type ty, const Token& at, NodePtr a, NodePtr b) {
    auto n = make(k, ty, at);
    n->kids = {std::move(a), std::move(b)};
    return n;
  }

  NodePtr parse_or() {
    NodePtr a = parse_and();
    while (peek().kind == Tok::bar) {
      const Token& t = take();
      NodePtr b = parse_and();
      want(a, Type::boolean, "'|'");
      want(b, Type::boolean, "'|'");
      a = binary(Kind::Or, Type::boolean, t, a, b);
    }
    return a;
  }
  NodePtr parse_and() {
    NodePtr a = parse_not();
    while (peek().kind == Tok::amp) {
      const Token& t = take();
      NodePtr b = parse_not();
      want(a, Type::boolean, "'&'");
      want(b, Type::boolean, "'&'");
      a = binary(Kind::And, Type::boolean, t, a, b);
    }
    return a;
  }
  NodePtr parse_not() {
    if (peek().kind == Tok::bang) {
      const Token& t = take();
      NodePtr a = parse_not();
      want(a, Type::boolean, "'!'");
      auto n = make(Kind::Not, Type::boolean, t);
      n->kids = {a};
      return n;
    }
    return parse_cmp();
  }
  NodePtr parse_cmp() {
    NodePtr a = parse_sum();
    CmpOp op;
    switch (peek().kind) {
      case Tok::ge: op = CmpOp::ge; break;
      case Tok::le: op = CmpOp::le; break;
      case Tok::gt: op = CmpOp::gt; break;
      case Tok::lt: op = CmpOp::lt; break;
      default: return a;
    }
    const Token& t = take();
    NodePtr b = parse_sum();
    want(a, Type::real, "comparison");
    want(b, Type::real, "comparison");
    auto n = make(Kind::Compare, Type::boolean, t);
    n->kids = {a, b};
    n->op = op;
    return n;
  }
  NodePtr parse_sum() {
    NodePtr a = parse_prod();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& t = take();
      NodePtr b = parse_prod();
      want(a, Type::real, "arithmetic");
      want(b, Type::real, "arithmetic");
      a = binary(t.kind == Tok::plus ? Kind::Add : Kind::Sub, Type::real, t, a, b);
    }
    return a;
  }
  NodePtr parse_prod() {
    NodePtr a = parse_unary();
    while (peek().kind == Tok::star) {
      const Token& t = take();
      NodePtr b = parse_unary();
      want(a, Type::real, "arithmetic");
      want(b, Type::real, "arithmetic");
      a = binary(Kind::Mul, Type::real, t, a, b);
    }
    return a;
  }
  NodePtr parse_unary() {
    if (peek().kind == Tok::minus) {
      const Token& t = take();
      NodePtr a = parse_unary();
      want(a, Type::real, "negation");
      if (a->kind == Kind::Number) {
        auto n = make(Kind::Number, Type::real, t);
        n->number = -a->number;
        return n;
      }
      auto n = make(Kind::Neg, Type::real, t);
      n->kids = {a};
      return n;
    }
    return parse_primary();
  }

  NodePtr quantifier(Kind k, const Token& at) {
    take();
    expect(Tok::caret, "'^ext'");
    const Token& e = expect(Tok::ident, "'ext'");
    if (e.text != "ext") fail(e, "expected 'ext'");
    const Token& v = variable();
    expect(Tok::dot, "'.'");
    scope_.push_back(v.text);
    NodePtr body = parse_or();
    scope_.pop_back();
    want(body, Type::boolean, "quantifier body");
    auto n = make(k, Type::boolean, at);
    n->var = v.text;
    n->kids = {body};
    return n;
  }

  // where-clause: a primary or a chain of '!' on one
  NodePtr where_clause() {
    if (peek().kind == Tok::bang) {
      const Token& t = take();
      NodePtr a = where_clause();
      want(a, Type::boolean, "'!'");
      auto n = make(Kind::Not, Type::boolean, t);
      n->kids = {a};
      return n;
    }
    return parse_primary();
  }

  NodePtr parse_primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        take();
        auto n = make(Kind::Number, Type::real, t);
        n->number = t.value;
        return n;
      }
      case Tok::lparen: {
        take();
        NodePtr a = parse_or();
        expect(Tok::rparen, "')'");
        return a;
      }
      case Tok::ident: break;
      default: fail(t, "unexpected '" + t.text + "'");
    }
    if (t.text == "true" || t.text == "false") {
      take();
      return make(t.text == "true" ? Kind::True : Kind::False, Type::boolean, t);
    }
    if (t.text == "u") {
      take();
      expect(Tok::lbrack, "'['");
      const Token& v = variable();
      bound(v);
      expect(Tok::rbrack, "']'");
      auto n = make(Kind::Sample, Type::real, t);
      n->var = v.text;
      return n;
    }
    if (t.text == "exists") return quantifier(Kind::Exists, t);
    if (t.text == "forall") return quantifier(Kind::Forall, t);
    if (t.text == "extagg") {
      take();
      const Token& v = variable();
      scope_.push_back(v.text);
      expect(Tok::lbrack, "'['");
      NodePtr f = parse_or();
      expect(Tok::rbrack, "']'");
      want(f, Type::real, "extagg term");
      if (!keyword("where")) fail(peek(), "expected 'where'");
      take();
      NodePtr phi = where_clause();
      want(phi, Type::boolean, "where clause");
      scope_.pop_back();
      auto n = make(Kind::ExtAgg, Type::real, t);
      n->var = v.text;
      n->kids = {f, phi};
      return n;
    }
    if (reserved(t.text)) fail(t, "unexpected '" + t.text + "'");
    take();
    bound(t);
    const Token& b = peek();
    if (b.kind != Tok::before) fail(b, "expected '<ext' after variable '" + t.text + "'");
    take();
    const Token& v2 = variable();
    bound(v2);
    auto n = make(Kind::Before, Type::boolean, b);
    n->var = t.text;
    n->var2 = v2.text;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Printer

void print(std::ostream& os, const NodePtr& f) {
  auto op_text = [](CmpOp op) {
    switch (op) {
      case CmpOp::ge: return ">=";
      case CmpOp::le: return "<=";
      case CmpOp::gt: return ">";
      case CmpOp::lt: return "<";
    }
    return "?";
  };
  auto bin = [&](const char* s) {
    os << '(';
    print(os, f->kids[0]);
    os << ' ' << s << ' ';
    print(os, f->kids[1]);
    os << ')';
  };
  switch (f->kind) {
    case Kind::True: os << "true"; break;
    case Kind::False: os << "false"; break;
    case Kind::Number: {
      std::ostringstream n;
      n.precision(17);
      n << f->number;
      os << (f->number < 0 ? "(" + n.str() + ")" : n.str());
      break;
    }
    case Kind::Sample: os << "u[" << f->var << ']'; break;
    case Kind::Compare: bin(op_text(f->op)); break;
    case Kind::Before: os << f->var << " <ext " << f->var2; break;
    case Kind::And: bin("&"); break;
    case Kind::Or: bin("|"); break;
    case Kind::Not:
      os << '!';
      print(os, f->kids[0]);
      break;
    case Kind::Exists:
    case Kind::Forall:
      os << '(' << (f->kind == Kind::Exists ? "exists" : "forall") << "^ext " << f->var << " . ";
      print(os, f->kids[0]);
      os << ')';
      break;
    case Kind::ExtAgg:
      os << "(extagg " << f->var << " [";
      print(os, f->kids[0]);
      os << "] where (";
      print(os, f->kids[1]);
      os << "))";
      break;
    case Kind::Add: bin("+"); break;
    case Kind::Sub: bin("-"); break;
    case Kind::Mul: bin("*"); break;
    case Kind::Neg:
      os << "(-";
      print(os, f->kids[0]);
      os << ')';
      break;
  }
}

// ---------------------------------------------------------------------------
// Evaluator

struct Env {
  std::span<const double> u;
  const std::vector<std::size_t>& ext;
  std::vector<std::pair<std::string, std::size_t>> binding;  // innermost last

  std::size_t lookup(const std::string& v) const {
    for (auto it = binding.rbegin(); it != binding.rend(); ++it) {
      if (it->first == v) return it->second;
    }
    throw DomainError("unbound variable '" + v + "'");
  }
};

bool compare(CmpOp op, double a, double b) {
  switch (op) {
    case CmpOp::ge: return a >= b;
    case CmpOp::le: return a <= b;
    case CmpOp::gt: return a > b;
    case CmpOp::lt: return a < b;
  }
  return false;
}

double real(const NodePtr& f, Env& env);

bool boolean(const NodePtr& f, Env& env) {
  switch (f->kind) {
    case Kind::True: return true;
    case Kind::False: return false;
    case Kind::Compare: return compare(f->op, real(f->kids[0], env), real(f->kids[1], env));
    case Kind::Before: return env.lookup(f->var) < env.lookup(f->var2);
    case Kind::And: return boolean(f->kids[0], env) && boolean(f->kids[1], env);
    case Kind::Or: return boolean(f->kids[0], env) || boolean(f->kids[1], env);
    case Kind::Not: return !boolean(f->kids[0], env);
    case Kind::Exists:
    case Kind::Forall: {
      const bool want = f->kind == Kind::Exists;
      bool result = !want;
      env.binding.emplace_back(f->var, 0);
      for (std::size_t p : env.ext) {
        env.binding.back().second = p;
        if (boolean(f->kids[0], env) == want) {
          result = want;
          break;
        }
      }
      env.binding.pop_back();
      return result;
    }
    default: throw DomainError("expected a Boolean formula");
  }
}

double real(const NodePtr& f, Env& env) {
  switch (f->kind) {
    case Kind::Number: return f->number;
    case Kind::Sample: return env.u[env.lookup(f->var)];
    case Kind::Add: return real(f->kids[0], env) + real(f->kids[1], env);
    case Kind::Sub: return real(f->kids[0], env) - real(f->kids[1], env);
    case Kind::Mul: return real(f->kids[0], env) * real(f->kids[1], env);
    case Kind::Neg: return -real(f->kids[0], env);
    case Kind::ExtAgg: {
      double sum = 0.0;
      env.binding.emplace_back(f->var, 0);
      for (std::size_t p : env.ext) {
        env.binding.back().second = p;
        if (boolean(f->kids[1], env)) sum += real(f->kids[0], env);
      }
      env.binding.pop_back();
      return sum;
    }
    default: throw DomainError("expected a real term");
  }
}

// ---------------------------------------------------------------------------
// Builders

std::shared_ptr<Node> node(Kind k, Type ty, std::vector<NodePtr> kids = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->type = ty;
  n->kids = std::move(kids);
  return n;
}
NodePtr num(double c) {
  auto n = node(Kind::Number, Type::real);
  n->number = c;
  return n;
}
NodePtr sample(const std::string& v) {
  auto n = node(Kind::Sample, Type::real);
  n->var = v;
  return n;
}
NodePtr cmp(CmpOp op, NodePtr a, NodePtr b) {
  auto n = node(Kind::Compare, Type::boolean, {std::move(a), std::move(b)});
  n->op = op;
  return n;
}
NodePtr before(const std::string& a, const std::string& b) {
  auto n = node(Kind::Before, Type::boolean);
  n->var = a;
  n->var2 = b;
  return n;
}
NodePtr quant(Kind k, const std::string& v, NodePtr body) {
  auto n = node(k, Type::boolean, {std::move(body)});
  n->var = v;
  return n;
}
NodePtr extagg(const std::string& v, NodePtr f, NodePtr where) {
  auto n = node(Kind::ExtAgg, Type::real, {std::move(f), std::move(where)});
  n->var = v;
  return n;
}

// Earliest extremal position i whose sample beats every other one under
// `strict`/`weak`: forall j. u[j] weak u[i], and strictly for j <ext i.
NodePtr earliest_extreme(const std::string& i, const std::string& j, CmpOp weak, CmpOp strict) {
  NodePtr all = quant(Kind::Forall, j, cmp(weak, sample(j), sample(i)));
  NodePtr first = quant(Kind::Forall, j,
                        node(Kind::Or, Type::boolean,
                             {node(Kind::Not, Type::boolean, {before(j, i)}), cmp(strict, sample(j), sample(i))}));
  return node(Kind::And, Type::boolean, {all, first});
}

// ---------------------------------------------------------------------------
// Depth-1 compiler helpers

AffineTerm affine_of(const NodePtr& f, const std::string& v) {
  switch (f->kind) {
    case Kind::Number: return {0.0, f->number};
    case Kind::Sample:
      if (f->var != v) throw DomainError("term reads a variable other than the aggregated one");
      return {1.0, 0.0};
    case Kind::Add:
    case Kind::Sub: {
      const AffineTerm a = affine_of(f->kids[0], v), b = affine_of(f->kids[1], v);
      const double s = f->kind == Kind::Add ? 1.0 : -1.0;
      return {a.a + s * b.a, a.b + s * b.b};
    }
    case Kind::Neg: {
      const AffineTerm a = affine_of(f->kids[0], v);
      return {-a.a, -a.b};
    }
    case Kind::Mul: {
      const AffineTerm a = affine_of(f->kids[0], v), b = affine_of(f->kids[1], v);
      if (a.a != 0.0 && b.a != 0.0) throw DomainError("term is not affine in the aggregated sample");
      return {a.a * b.b + b.a * a.b, a.b * b.b};
    }
    default: throw DomainError("unsupported term in extagg");
  }
}

CmpOp flip(CmpOp op) {
  switch (op) {
    case CmpOp::ge: return CmpOp::le;
    case CmpOp::le: return CmpOp::ge;
    case CmpOp::gt: return CmpOp::lt;
    case CmpOp::lt: return CmpOp::gt;
  }
  return op;
}

void collect_atoms(const NodePtr& phi, const std::string& v, std::vector<ThresholdAtom>& out) {
  switch (phi->kind) {
    case Kind::True: return;
    case Kind::And:
      collect_atoms(phi->kids[0], v, out);
      collect_atoms(phi->kids[1], v, out);
      return;
    case Kind::Compare: {
      const NodePtr& a = phi->kids[0];
      const NodePtr& b = phi->kids[1];
      if (a->kind == Kind::Sample && a->var == v && b->kind == Kind::Number) {
        out.push_back({phi->op, b->number});
        return;
      }
      if (b->kind == Kind::Sample && b->var == v && a->kind == Kind::Number) {
        out.push_back({flip(phi->op), a->number});
        return;
      }
      throw DomainError("where clause atoms must compare u[" + v + "] with a constant");
    }
    default: throw DomainError("where clause must be a conjunction of threshold atoms");
  }
}

}  // namespace

NodePtr parse(const std::string& text) { return Parser(lex(text)).run(); }

std::string to_string(const NodePtr& f) {
  std::ostringstream os;
  print(os, f);
  return os.str();
}

std::vector<std::size_t> extremal_positions(std::span<const double> u) {
  std::vector<std::size_t> out;
  if (u.empty()) return out;
  out.push_back(0);
  // Walk the signal tracking the direction of the last strict move and the
  // first index of the current plateau; a direction flip marks that plateau.
  int dir = 0;
  std::size_t run_start = 0;
  for (std::size_t t = 1; t < u.size(); ++t) {
    if (u[t] == u[t - 1]) continue;
    const int d = u[t] > u[t - 1] ? 1 : -1;
    if (dir != 0 && d != dir) out.push_back(run_start);
    dir = d;
    run_start = t;
  }
  if (u.size() > 1) out.push_back(u.size() - 1);
  return out;
}

Value eval(const NodePtr& f, std::span<const double> u) {
  if (u.empty()) throw DomainError("signal must be nonempty");
  const auto ext = extremal_positions(u);
  Env env{u, ext, {}};
  Value v{f->type};
  if (f->type == Type::boolean) {
    v.b = boolean(f, env);
  } else {
    v.r = real(f, env);
  }
  return v;
}

bool eval_bool(const NodePtr& f, std::span<const double> u) {
  if (f->type != Type::boolean) throw DomainError("formula is a real term, not a Boolean formula");
  return eval(f, u).b;
}

double eval_real(const NodePtr& f, std::span<const double> u) {
  if (f->type != Type::real) throw DomainError("formula is Boolean where a real term is expected");
  return eval(f, u).r;
}

NodePtr relay_as_efo(double alpha, double beta) {
  if (alpha < beta) throw DomainError("relay requires alpha >= beta");
  const NodePtr stays = quant(Kind::Forall, "t",
                              node(Kind::Or, Type::boolean,
                                   {node(Kind::Not, Type::boolean, {before("s", "t")}),
                                    cmp(CmpOp::gt, sample("t"), num(beta))}));
  return quant(Kind::Exists, "s",
               node(Kind::And, Type::boolean, {cmp(CmpOp::ge, sample("s"), num(alpha)), stays}));
}

NodePtr range_formula() {
  const NodePtr hi = extagg("i", sample("i"), earliest_extreme("i", "j", CmpOp::le, CmpOp::lt));
  const NodePtr lo = extagg("k", sample("k"), earliest_extreme("k", "j", CmpOp::ge, CmpOp::gt));
  return node(Kind::Sub, Type::real, {hi, lo});
}

bool exists_via_threshold(const NodePtr& exists, std::span<const double> u) {
  if (exists->kind != Kind::Exists) throw DomainError("expected an exists^ext formula");
  return eval_real(extagg(exists->var, num(1.0), exists->kids[0]), u) > 0.0;
}

std::vector<double> scalarise(const std::vector<std::vector<double>>& x, const std::vector<double>& projection) {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& row : x) {
    if (row.size() != projection.size()) throw DomainError("projection dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) s += row[k] * projection[k];
    out.push_back(s);
  }
  return out;
}

bool ThresholdAtom::holds(double v) const { return compare(op, v, c); }

CompiledAgg compile_extagg(const NodePtr& agg, const HalfPlaneGrid<double>& grid) {
  if (agg->kind != Kind::ExtAgg) throw DomainError("expected an extagg term");
  CompiledAgg out{TriangularMeasure<double>(grid), affine_of(agg->kids[0], agg->var), {}};
  collect_atoms(agg->kids[1], agg->var, out.where);
  for (int i = 2; i <= grid.L; ++i) {
    const double v = grid.alpha(i);
    bool ok = true;
    for (const auto& a : out.where) ok = ok && a.holds(v);
    const double w = ok ? out.f.a * v + out.f.b : 0.0;
    if (w != 0.0) out.measure.set(i, i - 1, w);
  }
  return out;
}

CompileCheck check_compiled(const CompiledAgg& c, std::span<const double> u) {
  if (u.empty()) throw DomainError("signal must be nonempty");
  CompileCheck r;
  const auto rm = build_memory<double>(u);
  r.pal = pal_eval_staircase(c.measure, rm);
  const auto ext = extremal_positions(u);
  const double delta = c.measure.grid().delta;
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double fmax = std::max(std::abs(c.f.a * *lo + c.f.b), std::abs(c.f.a * *hi + c.f.b)) + std::abs(c.f.a) * delta;
  for (std::size_t p : ext) {
    const double v = u[p];
    bool ok = true, near = false;
    for (const auto& a : c.where) {
      ok = ok && a.holds(v);
      near = near || std::abs(v - a.c) <= delta;
    }
    if (ok) r.direct += c.f.a * v + c.f.b;
    r.tolerance += std::abs(c.f.a) * delta + (near ? fmax : 0.0);
  }
  r.error = std::abs(r.pal - r.direct);
  return r;
}

}  // namespace pal::efo
