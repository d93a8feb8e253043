#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace hisd::expr {

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Tan, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable expression tree node. Subtrees are shared freely, so derivative
// trees reuse pieces of the original expression.
struct Node {
  enum class Kind { Constant, Variable, Unary, Binary };

  Kind kind;
  double value = 0.0;  // Constant
  int index = 0;       // Variable, 1-based
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  NodePtr a;  // unary child / binary lhs
  NodePtr b;  // binary rhs

  static NodePtr constant(double v);
  static NodePtr variable(int index);
  static NodePtr unary(UnaryOp op, NodePtr child);
  static NodePtr binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
};

// Scalar expression in variables x1..xd.
class Expr {
 public:
  Expr() = default;
  Expr(NodePtr root, int dim);

  int dim() const { return dim_; }
  const NodePtr& root() const { return root_; }

  // Direct recursive tree walk; the reference route against which compiled
  // evaluators are checked.
  double eval(const Eigen::VectorXd& x) const;

  // Emits text in the same grammar parse_expression accepts.
  std::string unparse() const;

  int max_var_index() const;

 private:
  NodePtr root_;
  int dim_ = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Compiled evaluators are immutable after construction and safe to call from
// concurrent searches.
class CompiledScalarFn {
 public:
  CompiledScalarFn() = default;
  CompiledScalarFn(int dim, std::function<double(const Eigen::VectorXd&)> fn)
      : dim_(dim), fn_(std::move(fn)) {}

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }
  double operator()(const Eigen::VectorXd& x) const { return fn_(x); }

 private:
  int dim_ = 0;
  std::function<double(const Eigen::VectorXd&)> fn_;
};

class CompiledVectorFn {
 public:
  CompiledVectorFn() = default;
  CompiledVectorFn(int dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn)
      : dim_(dim), fn_(std::move(fn)) {}

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return fn_(x); }

 private:
  int dim_ = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn_;
};

// Parses `source` over variables x1..x{dim} with operators + - * / ** and
// functions exp, log, sin, cos, tan, sqrt, abs. Standard precedence, pow
// right-associative and binding tighter than unary minus.
Expr parse_expression(std::string_view source, int dim);

// Exact symbolic partial derivative with respect to x{var}. Constant folding
// and identity elimination only; no canonical simplification.
Expr differentiate(const Expr& e, int var);

// Flattens the tree into a postfix program evaluated on a scratch stack.
CompiledScalarFn compile_scalar(const Expr& e);

// Compiles (dE/dx1, ..., dE/dxd), each component from differentiate().
CompiledVectorFn compile_gradient(const Expr& e);

}  // namespace hisd::expr
