#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "hisd/expr.hpp"
#include "hisd/system.hpp"

namespace hisd {

enum class HessianMode { Dimer, ExactSymbolic };

// Matrix of exact second partials, entry (i,j) = d^2 e / dx_i dx_j.
std::vector<std::vector<expr::Expr>> symbolic_hessian(const expr::Expr& e);

// The Hessian in operator form. For gradient systems products equal H(x) v;
// for non-gradient systems they equal -J(x) v under the sign convention, so a
// negative eigenvalue always marks an unstable direction.
class HessianOperator {
 public:
  static HessianOperator dimer(SystemPtr spec, double hessian_dimer_length);

  // Requires the system to carry an energy expression.
  static HessianOperator exact(SystemPtr spec);

  int dim() const { return spec_->dim; }
  bool symmetric() const { return spec_->is_gradient; }
  HessianMode mode() const { return mode_; }
  const SystemPtr& system() const { return spec_; }
  double dimer_length() const { return length_; }

  // Single product; dimer mode costs two force evaluations.
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

  // Column i equals hvp(x, V.col(i)); bit-identical to stacking single calls.
  Eigen::MatrixXd batch_hvp(const Eigen::VectorXd& x, const Eigen::MatrixXd& V) const;

  // Dense reconstruction; dimer mode applies the operator to the identity.
  Eigen::MatrixXd dense(const Eigen::VectorXd& x) const;

 private:
  HessianOperator(SystemPtr spec, HessianMode mode, double length);

  SystemPtr spec_;
  HessianMode mode_;
  double length_;
  // exact mode: compiled second partials, row-major d*d
  std::shared_ptr<const std::vector<expr::CompiledScalarFn>> entries_;
};

}  // namespace hisd
