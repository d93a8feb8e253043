#include "hisd/hessian.hpp"

#include <stdexcept>

#include "hisd/log.hpp"

namespace hisd {

std::vector<std::vector<expr::Expr>> symbolic_hessian(const expr::Expr& e) {
  int d = e.dim();
  std::vector<expr::Expr> firsts;
  firsts.reserve(static_cast<std::size_t>(d));
  for (int i = 1; i <= d; ++i) firsts.push_back(differentiate(e, i));
  std::vector<std::vector<expr::Expr>> h(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    h[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(d));
    for (int j = 1; j <= d; ++j)
      h[static_cast<std::size_t>(i)].push_back(
          differentiate(firsts[static_cast<std::size_t>(i)], j));
  }
  return h;
}

HessianOperator::HessianOperator(SystemPtr spec, HessianMode mode, double length)
    : spec_(std::move(spec)), mode_(mode), length_(length) {}

HessianOperator HessianOperator::dimer(SystemPtr spec, double hessian_dimer_length) {
  if (hessian_dimer_length <= 0.0)
    throw std::invalid_argument("HessianOperator: dimer length must be positive");
  return HessianOperator(std::move(spec), HessianMode::Dimer, hessian_dimer_length);
}

HessianOperator HessianOperator::exact(SystemPtr spec) {
  if (!spec->energy_expression)
    throw std::invalid_argument("HessianOperator::exact requires a symbolic energy");
  HessianOperator op(spec, HessianMode::ExactSymbolic, spec->dimer_length);
  auto table = std::make_shared<std::vector<expr::CompiledScalarFn>>();
  auto h = symbolic_hessian(*spec->energy_expression);
  int d = spec->dim;
  table->reserve(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      table->push_back(compile_scalar(h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  op.entries_ = table;
  return op;
}

Eigen::VectorXd HessianOperator::hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
  spec_->counter->hvp_evals.fetch_add(1, std::memory_order_relaxed);
  if (mode_ == HessianMode::Dimer) {
    return (spec_->field(x + length_ * v) - spec_->field(x - length_ * v)) / (2.0 * length_);
  }
  int d = spec_->dim;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j)
      acc += (*entries_)[static_cast<std::size_t>(i * d + j)](x) * v[j];
    out[i] = acc;
  }
  return out;
}

Eigen::MatrixXd HessianOperator::batch_hvp(const Eigen::VectorXd& x,
                                           const Eigen::MatrixXd& V) const {
  Eigen::MatrixXd out(V.rows(), V.cols());
  for (Eigen::Index c = 0; c < V.cols(); ++c) out.col(c) = hvp(x, V.col(c));
  return out;
}

Eigen::MatrixXd HessianOperator::dense(const Eigen::VectorXd& x) const {
  int d = spec_->dim;
  if (mode_ == HessianMode::ExactSymbolic) {
    Eigen::MatrixXd h(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        h(i, j) = (*entries_)[static_cast<std::size_t>(i * d + j)](x);
    return h;
  }
  if (d > 2000)
    log::warn("dense Hessian reconstruction at dim " + std::to_string(d) +
              " costs " + std::to_string(2 * d) + " force evaluations");
  return batch_hvp(x, Eigen::MatrixXd::Identity(d, d));
}

}  // namespace hisd
