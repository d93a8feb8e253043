#include "hisd/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

namespace hisd::expr {

namespace {

double apply_unary(UnaryOp op, double v) {
  switch (op) {
    case UnaryOp::Neg: return -v;
    case UnaryOp::Exp: return std::exp(v);
    case UnaryOp::Log: return std::log(v);
    case UnaryOp::Sin: return std::sin(v);
    case UnaryOp::Cos: return std::cos(v);
    case UnaryOp::Tan: return std::tan(v);
    case UnaryOp::Sqrt: return std::sqrt(v);
    case UnaryOp::Abs: return std::abs(v);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double apply_binary(BinaryOp op, double l, double r) {
  switch (op) {
    case BinaryOp::Add: return l + r;
    case BinaryOp::Sub: return l - r;
    case BinaryOp::Mul: return l * r;
    case BinaryOp::Div: return l / r;
    case BinaryOp::Pow: return std::pow(l, r);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

NodePtr Node::constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = v;
  return n;
}

NodePtr Node::variable(int index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->index = index;
  return n;
}

NodePtr Node::unary(UnaryOp op, NodePtr child) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->uop = op;
  n->a = std::move(child);
  return n;
}

NodePtr Node::binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  return n;
}

Expr::Expr(NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

namespace {

double eval_node(const Node& n, const Eigen::VectorXd& x) {
  switch (n.kind) {
    case Node::Kind::Constant: return n.value;
    case Node::Kind::Variable: return x[n.index - 1];
    case Node::Kind::Unary: return apply_unary(n.uop, eval_node(*n.a, x));
    case Node::Kind::Binary:
      return apply_binary(n.bop, eval_node(*n.a, x), eval_node(*n.b, x));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int max_var(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Constant: return 0;
    case Node::Kind::Variable: return n.index;
    case Node::Kind::Unary: return max_var(*n.a);
    case Node::Kind::Binary: return std::max(max_var(*n.a), max_var(*n.b));
  }
  return 0;
}

}  // namespace

double Expr::eval(const Eigen::VectorXd& x) const { return eval_node(*root_, x); }

int Expr::max_var_index() const { return root_ ? max_var(*root_) : 0; }

ParseError::ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what), position_(position) {}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Parser {
  std::string_view src;
  std::size_t pos = 0;
  int dim = 0;

  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ParseError(msg + " at position " + std::to_string(at), at);
  }

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  bool peek(char c) {
    skip_ws();
    return pos < src.size() && src[pos] == c;
  }

  // '**' must win over '*'.
  bool eat_pow() {
    skip_ws();
    if (pos + 1 < src.size() && src[pos] == '*' && src[pos + 1] == '*') {
      pos += 2;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        lhs = Node::binary(BinaryOp::Add, lhs, term());
      } else if (eat('-')) {
        lhs = Node::binary(BinaryOp::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      skip_ws();
      if (eat('*')) {
        lhs = Node::binary(BinaryOp::Mul, lhs, factor());
      } else if (eat('/')) {
        lhs = Node::binary(BinaryOp::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  // Unary minus binds looser than '**': -x1**2 parses as -(x1**2).
  NodePtr factor() {
    skip_ws();
    if (eat('-')) return Node::unary(UnaryOp::Neg, factor());
    if (eat('+')) return factor();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat_pow()) {
      // Right-associative; the exponent may carry its own unary minus.
      return Node::binary(BinaryOp::Pow, base, factor());
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of expression", pos);
    char c = src[pos];
    if (c == '(') {
      ++pos;
      NodePtr inner = expression();
      if (!eat(')')) fail("expected ')'", pos);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'", pos);
  }

  NodePtr number() {
    std::size_t start = pos;
    while (pos < src.size() && (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
      ++pos;
    if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
      std::size_t mark = pos;
      ++pos;
      if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
      if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      } else {
        pos = mark;  // bare 'e' belongs to the next token
      }
    }
    std::string text(src.substr(start, pos - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') fail("malformed number '" + text + "'", start);
    return Node::constant(v);
  }

  NodePtr identifier() {
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name(src.substr(start, pos - start));

    if (name.size() > 1 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
      int index = std::atoi(name.c_str() + 1);
      if (index < 1 || index > dim)
        fail("variable index out of range: " + name + " with dim " + std::to_string(dim), start);
      return Node::variable(index);
    }

    static const std::pair<const char*, UnaryOp> kFunctions[] = {
        {"exp", UnaryOp::Exp}, {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
        {"cos", UnaryOp::Cos}, {"tan", UnaryOp::Tan},   {"sqrt", UnaryOp::Sqrt},
        {"abs", UnaryOp::Abs},
    };
    for (const auto& [fname, op] : kFunctions) {
      if (name == fname) {
        if (!eat('(')) fail("expected '(' after function " + name, pos);
        NodePtr arg = expression();
        if (!eat(')')) fail("expected ')'", pos);
        return Node::unary(op, arg);
      }
    }
    fail("unknown identifier '" + name + "'", start);
  }
};

}  // namespace

Expr parse_expression(std::string_view source, int dim) {
  if (dim < 1) throw ParseError("dimension must be positive", 0);
  Parser p{source, 0, dim};
  NodePtr root = p.expression();
  p.skip_ws();
  if (p.pos != source.size()) p.fail("trailing input", p.pos);
  return Expr(root, dim);
}

// ---------------------------------------------------------------------------
// Differentiation with folding constructors
// ---------------------------------------------------------------------------

namespace {

bool is_const(const NodePtr& n, double v) {
  return n->kind == Node::Kind::Constant && n->value == v;
}

bool is_const(const NodePtr& n) { return n->kind == Node::Kind::Constant; }

NodePtr mk_unary(UnaryOp op, NodePtr a) {
  if (is_const(a)) return Node::constant(apply_unary(op, a->value));
  if (op == UnaryOp::Neg && a->kind == Node::Kind::Unary && a->uop == UnaryOp::Neg) return a->a;
  return Node::unary(op, std::move(a));
}

NodePtr mk_add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value + b->value);
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Node::binary(BinaryOp::Add, std::move(a), std::move(b));
}

NodePtr mk_sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value - b->value);
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return mk_unary(UnaryOp::Neg, std::move(b));
  return Node::binary(BinaryOp::Sub, std::move(a), std::move(b));
}

NodePtr mk_mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(a->value * b->value);
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Node::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return Node::binary(BinaryOp::Mul, std::move(a), std::move(b));
}

NodePtr mk_div(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b) && b->value != 0.0) return Node::constant(a->value / b->value);
  if (is_const(a, 0.0)) return Node::constant(0.0);
  if (is_const(b, 1.0)) return a;
  return Node::binary(BinaryOp::Div, std::move(a), std::move(b));
}

NodePtr mk_pow(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b)) return Node::constant(std::pow(a->value, b->value));
  if (is_const(b, 1.0)) return a;
  if (is_const(b, 0.0)) return Node::constant(1.0);
  return Node::binary(BinaryOp::Pow, std::move(a), std::move(b));
}

NodePtr diff_node(const NodePtr& n, int var) {
  switch (n->kind) {
    case Node::Kind::Constant:
      return Node::constant(0.0);
    case Node::Kind::Variable:
      return Node::constant(n->index == var ? 1.0 : 0.0);
    case Node::Kind::Unary: {
      NodePtr u = n->a;
      NodePtr du = diff_node(u, var);
      switch (n->uop) {
        case UnaryOp::Neg: return mk_unary(UnaryOp::Neg, du);
        case UnaryOp::Exp: return mk_mul(Node::unary(UnaryOp::Exp, u), du);
        case UnaryOp::Log: return mk_div(du, u);
        case UnaryOp::Sin: return mk_mul(Node::unary(UnaryOp::Cos, u), du);
        case UnaryOp::Cos:
          return mk_unary(UnaryOp::Neg, mk_mul(Node::unary(UnaryOp::Sin, u), du));
        case UnaryOp::Tan:
          return mk_div(du, mk_pow(Node::unary(UnaryOp::Cos, u), Node::constant(2.0)));
        case UnaryOp::Sqrt:
          return mk_div(du, mk_mul(Node::constant(2.0), Node::unary(UnaryOp::Sqrt, u)));
        case UnaryOp::Abs:
          // d|u| = u/|u| * u'; evaluates to NaN at u = 0.
          return mk_mul(mk_div(u, Node::unary(UnaryOp::Abs, u)), du);
      }
      break;
    }
    case Node::Kind::Binary: {
      NodePtr u = n->a;
      NodePtr v = n->b;
      NodePtr du = diff_node(u, var);
      NodePtr dv = diff_node(v, var);
      switch (n->bop) {
        case BinaryOp::Add: return mk_add(du, dv);
        case BinaryOp::Sub: return mk_sub(du, dv);
        case BinaryOp::Mul: return mk_add(mk_mul(du, v), mk_mul(u, dv));
        case BinaryOp::Div:
          return mk_div(mk_sub(mk_mul(du, v), mk_mul(u, dv)),
                        mk_pow(v, Node::constant(2.0)));
        case BinaryOp::Pow:
          if (is_const(v)) {
            // d(u^c) = c*u^(c-1)*u'; keeps polynomial derivatives finite at
            // u = 0 where the general rule would divide by u.
            return mk_mul(mk_mul(v, mk_pow(u, Node::constant(v->value - 1.0))), du);
          }
          // d(u^v) = u^v * (v'*ln(u) + v*u'/u)
          return mk_mul(mk_pow(u, v),
                        mk_add(mk_mul(dv, Node::unary(UnaryOp::Log, u)),
                               mk_mul(v, mk_div(du, u))));
      }
      break;
    }
  }
  return Node::constant(std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

Expr differentiate(const Expr& e, int var) {
  if (var < 1 || var > e.dim())
    throw std::out_of_range("differentiate: variable index " + std::to_string(var) +
                            " out of range for dim " + std::to_string(e.dim()));
  return Expr(diff_node(e.root(), var), e.dim());
}

// ---------------------------------------------------------------------------
// Unparse
// ---------------------------------------------------------------------------

namespace {

// Larger binds tighter. Pow sits above unary minus per the grammar.
int precedence(const Node& n) {
  switch (n.kind) {
    case Node::Kind::Constant: return n.value < 0.0 ? 2 : 5;
    case Node::Kind::Variable: return 5;
    case Node::Kind::Unary: return n.uop == UnaryOp::Neg ? 2 : 5;
    case Node::Kind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 3;
        case BinaryOp::Pow: return 4;
      }
  }
  return 5;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void unparse_node(const Node& n, std::string& out);

void unparse_child(const Node& child, int parent_prec, bool tight, std::string& out) {
  int child_prec = precedence(child);
  bool parens = tight ? child_prec <= parent_prec : child_prec < parent_prec;
  if (parens) out += '(';
  unparse_node(child, out);
  if (parens) out += ')';
}

void unparse_node(const Node& n, std::string& out) {
  switch (n.kind) {
    case Node::Kind::Constant:
      out += format_number(n.value);
      return;
    case Node::Kind::Variable:
      out += 'x';
      out += std::to_string(n.index);
      return;
    case Node::Kind::Unary: {
      static const char* names[] = {"-", "exp", "log", "sin", "cos", "tan", "sqrt", "abs"};
      if (n.uop == UnaryOp::Neg) {
        out += '-';
        unparse_child(*n.a, 2, true, out);
      } else {
        out += names[static_cast<int>(n.uop)];
        out += '(';
        unparse_node(*n.a, out);
        out += ')';
      }
      return;
    }
    case Node::Kind::Binary: {
      int prec = precedence(n);
      switch (n.bop) {
        case BinaryOp::Add:
          unparse_child(*n.a, prec, false, out);
          out += " + ";
          unparse_child(*n.b, prec, false, out);
          return;
        case BinaryOp::Sub:
          unparse_child(*n.a, prec, false, out);
          out += " - ";
          unparse_child(*n.b, prec, true, out);
          return;
        case BinaryOp::Mul:
          unparse_child(*n.a, prec, false, out);
          out += "*";
          unparse_child(*n.b, prec, false, out);
          return;
        case BinaryOp::Div:
          unparse_child(*n.a, prec, false, out);
          out += "/";
          unparse_child(*n.b, prec, true, out);
          return;
        case BinaryOp::Pow:
          unparse_child(*n.a, prec, true, out);
          out += "**";
          unparse_child(*n.b, prec, false, out);
          return;
      }
    }
  }
}

}  // namespace

std::string Expr::unparse() const {
  std::string out;
  unparse_node(*root_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Compilation to a postfix tape
// ---------------------------------------------------------------------------

namespace {

struct Tape {
  enum Code : int {
    kConst,
    kVar,
    kNeg,
    kExp,
    kLog,
    kSin,
    kCos,
    kTan,
    kSqrt,
    kAbs,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kPow,
  };

  struct Instr {
    Code code;
    double value = 0.0;
    int index = 0;
  };

  std::vector<Instr> prog;
  int max_stack = 0;

  static Code unary_code(UnaryOp op) {
    switch (op) {
      case UnaryOp::Neg: return kNeg;
      case UnaryOp::Exp: return kExp;
      case UnaryOp::Log: return kLog;
      case UnaryOp::Sin: return kSin;
      case UnaryOp::Cos: return kCos;
      case UnaryOp::Tan: return kTan;
      case UnaryOp::Sqrt: return kSqrt;
      case UnaryOp::Abs: return kAbs;
    }
    return kNeg;
  }

  static Code binary_code(BinaryOp op) {
    switch (op) {
      case BinaryOp::Add: return kAdd;
      case BinaryOp::Sub: return kSub;
      case BinaryOp::Mul: return kMul;
      case BinaryOp::Div: return kDiv;
      case BinaryOp::Pow: return kPow;
    }
    return kAdd;
  }

  // Post-order flatten; returns the stack depth the subtree needs.
  int flatten(const Node& n) {
    switch (n.kind) {
      case Node::Kind::Constant:
        prog.push_back({kConst, n.value, 0});
        return 1;
      case Node::Kind::Variable:
        prog.push_back({kVar, 0.0, n.index - 1});
        return 1;
      case Node::Kind::Unary: {
        int d = flatten(*n.a);
        prog.push_back({unary_code(n.uop), 0.0, 0});
        return d;
      }
      case Node::Kind::Binary: {
        int dl = flatten(*n.a);
        int dr = flatten(*n.b);
        prog.push_back({binary_code(n.bop), 0.0, 0});
        return std::max(dl, dr + 1);
      }
    }
    return 1;
  }

  double run(const Eigen::VectorXd& x) const {
    static thread_local std::vector<double> stack;
    stack.resize(static_cast<std::size_t>(max_stack));
    double* sp = stack.data();
    for (const Instr& ins : prog) {
      switch (ins.code) {
        case kConst: *sp++ = ins.value; break;
        case kVar: *sp++ = x[ins.index]; break;
        case kNeg: sp[-1] = -sp[-1]; break;
        case kExp: sp[-1] = std::exp(sp[-1]); break;
        case kLog: sp[-1] = std::log(sp[-1]); break;
        case kSin: sp[-1] = std::sin(sp[-1]); break;
        case kCos: sp[-1] = std::cos(sp[-1]); break;
        case kTan: sp[-1] = std::tan(sp[-1]); break;
        case kSqrt: sp[-1] = std::sqrt(sp[-1]); break;
        case kAbs: sp[-1] = std::abs(sp[-1]); break;
        case kAdd: --sp; sp[-1] += *sp; break;
        case kSub: --sp; sp[-1] -= *sp; break;
        case kMul: --sp; sp[-1] *= *sp; break;
        case kDiv: --sp; sp[-1] /= *sp; break;
        case kPow: --sp; sp[-1] = std::pow(sp[-1], *sp); break;
      }
    }
    return sp[-1];
  }
};

std::shared_ptr<const Tape> build_tape(const Expr& e) {
  auto tape = std::make_shared<Tape>();
  tape->max_stack = tape->flatten(*e.root());
  return tape;
}

}  // namespace

CompiledScalarFn compile_scalar(const Expr& e) {
  auto tape = build_tape(e);
  return CompiledScalarFn(e.dim(),
                          [tape](const Eigen::VectorXd& x) { return tape->run(x); });
}

CompiledVectorFn compile_gradient(const Expr& e) {
  int d = e.dim();
  std::vector<std::shared_ptr<const Tape>> tapes;
  tapes.reserve(static_cast<std::size_t>(d));
  for (int i = 1; i <= d; ++i) tapes.push_back(build_tape(differentiate(e, i)));
  return CompiledVectorFn(d, [tapes, d](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(d);
    for (int i = 0; i < d; ++i) g[i] = tapes[static_cast<std::size_t>(i)]->run(x);
    return g;
  });
}

}  // namespace hisd::expr
