#pragma once

// Test-only reference computations, kept independent of the solver paths
// they are used to check.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hisd/rng.hpp"

namespace oracles {

inline Eigen::VectorXd central_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    double fp = f(p);
    p[i] = x[i] - h;
    double fm = f(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Largest principal angle between the column spaces of two orthonormal blocks.
inline double principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  double smallest_cos = svd.singularValues().minCoeff();
  smallest_cos = std::min(1.0, std::max(-1.0, smallest_cos));
  return std::acos(smallest_cos);
}

// Random polynomial in x1..xd of total degree <= degree, as expression text.
inline std::string random_polynomial(hisd::Rng& rng, int dim, int degree, int terms) {
  std::string out;
  for (int t = 0; t < terms; ++t) {
    double coeff = rng.uniform(-2.0, 2.0);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", coeff);
    std::string term = buf;
    int budget = static_cast<int>(rng.uniform01() * (degree + 1));
    for (int v = 1; v <= dim && budget > 0; ++v) {
      int p = static_cast<int>(rng.uniform01() * (budget + 1));
      if (p == 0) continue;
      budget -= p;
      term += "*x" + std::to_string(v);
      if (p > 1) term += "**" + std::to_string(p);
    }
    out += (t == 0 ? "" : " + ") + term;
  }
  return out;
}

// Random symmetric matrix with eigenvalue gap at least `gap` after position
// `split` (0-based): spectrum ... lam[split] + gap <= lam[split+1] ...
inline Eigen::MatrixXd random_symmetric_with_gap(hisd::Rng& rng, int n, int split, double gap) {
  Eigen::MatrixXd raw(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) raw(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lam(n);
  double value = rng.uniform(-5.0, -3.0);
  for (int i = 0; i < n; ++i) {
    lam[i] = value;
    value += rng.uniform(0.05, 0.5);
    if (i == split) value += gap;
  }
  return q * lam.asDiagonal() * q.transpose();
}

// Newton iteration on a 2-D gradient, used to enumerate stationary points.
inline bool newton_stationary(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                              const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& hess,
                              Eigen::VectorXd& x, int max_iter = 100, double tol = 1e-12) {
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd g = grad(x);
    if (!g.allFinite()) return false;
    if (g.norm() < tol) return true;
    Eigen::MatrixXd h = hess(x);
    Eigen::VectorXd step = h.fullPivLu().solve(g);
    if (!step.allFinite() || step.norm() > 10.0) return false;
    x -= step;
    if (x.norm() > 100.0) return false;
  }
  return false;
}

}  // namespace oracles
