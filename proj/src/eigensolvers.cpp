#include "hisd/eigensolvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hisd/log.hpp"

namespace hisd {

namespace {

constexpr int kDenseLimit = 2000;
constexpr double kRankTol = 1e-12;

// Replace a collapsed column with a random direction orthogonal to the
// already-fixed columns.
Eigen::VectorXd fresh_direction(const Eigen::MatrixXd& fixed, int upto, Rng& rng) {
  const int d = static_cast<int>(fixed.rows());
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::VectorXd w = rng.gaussian_vector(d);
    for (int j = 0; j < upto; ++j) w -= fixed.col(j).dot(w) * fixed.col(j);
    double n = w.norm();
    if (n > 1e-8) return w / n;
  }
  throw std::runtime_error("eigensolvers: could not draw an orthogonal direction");
}

// Sequential Gram-Schmidt with two projection passes. Collapsed columns are
// replaced with random orthogonal directions and a warning is recorded.
void orthonormalize_columns(Eigen::MatrixXd& V, Rng& rng) {
  const int k = static_cast<int>(V.cols());
  for (int i = 0; i < k; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) V.col(i) -= V.col(j).dot(V.col(i)) * V.col(j);
    double n = V.col(i).norm();
    if (n < kRankTol) {
      log::warn("subspace rank collapse; inserting a random orthogonal direction");
      V.col(i) = fresh_direction(V, i, rng);
    } else {
      V.col(i) /= n;
    }
  }
}

Eigen::MatrixXd dense_operator(const HessianOperator& op, const Eigen::VectorXd& x) {
  return op.dense(x);
}

// Ascending eigen decomposition of the symmetrized operator.
void symmetric_eigs(const Eigen::MatrixXd& m, Eigen::VectorXd& values,
                    Eigen::MatrixXd& vectors) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  values = es.eigenvalues();
  vectors = es.eigenvectors();
}

void fix_column_signs(Eigen::MatrixXd& V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
      if (V(r, c) != 0.0) {
        if (V(r, c) < 0.0) V.col(c) = -V.col(c);
        break;
      }
    }
  }
}

}  // namespace

void orthonormalize(Eigen::MatrixXd& V, Rng& rng) { orthonormalize_columns(V, rng); }

// ---------------------------------------------------------------------------
// Subspace updates
// ---------------------------------------------------------------------------

EigenUpdateResult euler_update(const HessianOperator& op, const Eigen::VectorXd& x,
                               const SubspaceBasis& basis, double gamma, int substeps,
                               bool is_gradient, double precision_tol, Rng& rng) {
  if (substeps < 1) substeps = 1;
  const int k = basis.k();
  Eigen::MatrixXd V = basis.V;
  Eigen::VectorXd rayleigh = Eigen::VectorXd::Zero(k);
  const double step = gamma / substeps;

  for (int s = 0; s < substeps; ++s) {
    const Eigen::MatrixXd U = op.batch_hvp(x, V);  // u_i = H v_i at the snapshot V
    for (int i = 0; i < k; ++i) rayleigh[i] = V.col(i).dot(U.col(i));
    if (is_gradient) {
      Eigen::MatrixXd Vnew = V;
      for (int i = 0; i < k; ++i) {
        Eigen::VectorXd di = -U.col(i) + rayleigh[i] * V.col(i);
        for (int j = 0; j < i; ++j) di += 2.0 * V.col(j).dot(U.col(i)) * V.col(j);
        Eigen::VectorXd w = V.col(i) + step * di;
        for (int pass = 0; pass < 2; ++pass)
          for (int j = 0; j < i; ++j) w -= Vnew.col(j).dot(w) * Vnew.col(j);
        double n = w.norm();
        if (n < kRankTol) {
          log::warn("subspace rank collapse; inserting a random orthogonal direction");
          Vnew.col(i) = fresh_direction(Vnew, i, rng);
        } else {
          Vnew.col(i) = w / n;
        }
      }
      V = Vnew;
    } else {
      // v + gamma J v realized through the sign convention J v = -hvp.
      V -= step * U;
      orthonormalize_columns(V, rng);
    }
  }

  EigenUpdateResult out;
  out.basis = SubspaceBasis{std::move(V), rayleigh};
  out.at_least_index_k = k == 0 || (rayleigh.array() < precision_tol).all();
  return out;
}

EigenUpdateResult power_update(const HessianOperator& op, const Eigen::VectorXd& x,
                               const SubspaceBasis& basis, double gamma, int substeps,
                               double precision_tol, Rng& rng) {
  if (substeps < 1) substeps = 1;
  const int k = basis.k();
  Eigen::MatrixXd V = basis.V;
  Eigen::VectorXd rayleigh = Eigen::VectorXd::Zero(k);
  const double step = gamma / substeps;

  for (int s = 0; s < substeps; ++s) {
    const Eigen::MatrixXd U = op.batch_hvp(x, V);
    for (int i = 0; i < k; ++i) rayleigh[i] = V.col(i).dot(U.col(i));
    Eigen::MatrixXd W = V - step * U;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(W.rows(), k);
    Eigen::MatrixXd R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    bool degenerate = false;
    for (int i = 0; i < k; ++i) {
      if (std::abs(R(i, i)) < kRankTol) degenerate = true;
      if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);
    }
    if (degenerate) {
      log::warn("subspace rank collapse in QR; re-orthonormalizing with replacements");
      orthonormalize_columns(W, rng);
      V = W;
    } else {
      V = Q;
    }
  }

  EigenUpdateResult out;
  out.basis = SubspaceBasis{std::move(V), rayleigh};
  out.at_least_index_k = k == 0 || (rayleigh.array() < precision_tol).all();
  return out;
}

EigenUpdateResult lobpcg_smallest(const HessianOperator& op, const Eigen::VectorXd& x,
                                  const SubspaceBasis& guess, int max_iter, double step_tol,
                                  double precision_tol, double fallback_gamma, Rng& rng) {
  if (!op.symmetric())
    throw std::logic_error("lobpcg_smallest requires a gradient (symmetric) system");
  const int d = op.dim();
  const int k = guess.k();
  if (k == 0) {
    EigenUpdateResult out;
    out.basis = SubspaceBasis{Eigen::MatrixXd(d, 0), Eigen::VectorXd(0)};
    out.at_least_index_k = true;
    return out;
  }

  Eigen::MatrixXd X = guess.V;
  orthonormalize_columns(X, rng);
  Eigen::MatrixXd AX = op.batch_hvp(x, X);
  Eigen::MatrixXd P(d, 0);
  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(k);

  auto rayleigh_ritz_block = [&](const Eigen::MatrixXd& S, const Eigen::MatrixXd& AS) {
    Eigen::MatrixXd T = S.transpose() * AS;
    T = 0.5 * (T + T.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    return std::make_pair(es.eigenvalues(), es.eigenvectors());
  };

  for (int it = 0; it < max_iter; ++it) {
    // Ritz step inside span(X) keeps the block orthonormal and sorted.
    auto [lam_x, w_x] = rayleigh_ritz_block(X, AX);
    X = X * w_x;
    AX = AX * w_x;
    ritz = lam_x;

    Eigen::MatrixXd R = AX - X * ritz.asDiagonal();
    double worst = 0.0;
    for (int i = 0; i < k; ++i) worst = std::max(worst, R.col(i).norm());
    if (worst <= step_tol) break;

    // Trial subspace [X R P], orthonormalized with rank filtering.
    Eigen::MatrixXd S(d, X.cols() + R.cols() + P.cols());
    S << X, R, P;
    int filled = 0;
    Eigen::MatrixXd Q(d, S.cols());
    for (int c = 0; c < S.cols(); ++c) {
      Eigen::VectorXd w = S.col(c);
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < filled; ++j) w -= Q.col(j).dot(w) * Q.col(j);
      double n = w.norm();
      if (n > 1e-10) {
        Q.col(filled) = w / n;
        ++filled;
      }
    }
    if (filled < k) {
      log::warn("lobpcg breakdown: trial subspace lost rank; falling back to one euler step");
      return euler_update(op, x, guess, fallback_gamma, 1, true, precision_tol, rng);
    }
    Eigen::MatrixXd Sq = Q.leftCols(filled);
    Eigen::MatrixXd ASq = op.batch_hvp(x, Sq);

    auto [lam_s, w_s] = rayleigh_ritz_block(Sq, ASq);
    Eigen::MatrixXd C = w_s.leftCols(k);
    Eigen::MatrixXd Xnew = Sq * C;
    Eigen::MatrixXd AXnew = ASq * C;

    // Locally-optimal recurrence: the component of the new block outside
    // span(X) becomes the next P.
    Eigen::MatrixXd Cp = C;
    Cp.topRows(k).setZero();
    Eigen::MatrixXd Pnew = Sq * Cp;
    std::vector<int> pcols;
    for (int c = 0; c < Pnew.cols(); ++c)
      if (Pnew.col(c).norm() > 1e-12) pcols.push_back(c);
    Eigen::MatrixXd Pk(d, static_cast<int>(pcols.size()));
    for (std::size_t i = 0; i < pcols.size(); ++i)
      Pk.col(static_cast<int>(i)) = Pnew.col(pcols[i]) / Pnew.col(pcols[i]).norm();
    P = Pk;
    X = Xnew;
    AX = AXnew;
    ritz = lam_s.head(k);
  }

  // Final Ritz pass for a clean orthonormal block and ascending values.
  auto [lam, w] = [&] {
    Eigen::MatrixXd T = X.transpose() * AX;
    T = 0.5 * (T + T.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    return std::make_pair(es.eigenvalues(), es.eigenvectors());
  }();
  Eigen::MatrixXd Xr = X * w;
  orthonormalize_columns(Xr, rng);

  EigenUpdateResult out;
  out.basis = SubspaceBasis{Xr, lam};
  out.at_least_index_k = lam[k - 1] < precision_tol;
  return out;
}

// ---------------------------------------------------------------------------
// Index verification
// ---------------------------------------------------------------------------

bool check_index_k(const HessianOperator& op, const Eigen::VectorXd& x, int k,
                   double precision_tol) {
  if (k <= 0) return true;
  const Eigen::MatrixXd m = dense_operator(op, x);
  int below = 0;
  if (op.symmetric()) {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    symmetric_eigs(m, values, vectors);
    below = static_cast<int>((values.array() < precision_tol).count());
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    below = static_cast<int>((es.eigenvalues().real().array() < precision_tol).count());
  }
  return below >= k;
}

IndexReport find_index(const HessianOperator& op, const Eigen::VectorXd& x,
                       double precision_tol) {
  const int d = op.dim();
  const Eigen::MatrixXd m = dense_operator(op, x);
  IndexReport report;

  if (op.symmetric()) {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    symmetric_eigs(m, values, vectors);
    report.spectrum = values;
    for (int i = 0; i < d; ++i) {
      if (values[i] < -precision_tol)
        ++report.neg;
      else if (values[i] <= precision_tol)
        ++report.zero;
      else
        ++report.pos;
    }
    report.neg_vectors = vectors.leftCols(report.neg);
    fix_column_signs(report.neg_vectors);
    return report;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(m, true);
  Eigen::VectorXcd values = es.eigenvalues();
  Eigen::MatrixXcd vectors = es.eigenvectors();

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[a].real() != values[b].real()) return values[a].real() < values[b].real();
    return values[a].imag() < values[b].imag();
  });

  report.spectrum.resize(d);
  for (int i = 0; i < d; ++i) report.spectrum[i] = values[order[static_cast<std::size_t>(i)]].real();

  std::vector<Eigen::VectorXd> columns;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (int pos = 0; pos < d; ++pos) {
    int i = order[static_cast<std::size_t>(pos)];
    double re = values[i].real();
    if (re < -precision_tol) ++report.neg;
    else if (re <= precision_tol) ++report.zero;
    else ++report.pos;

    if (re >= -precision_tol || used[static_cast<std::size_t>(i)]) continue;
    used[static_cast<std::size_t>(i)] = true;
    if (std::abs(values[i].imag()) <= 1e-12 * std::max(1.0, std::abs(re))) {
      columns.push_back(vectors.col(i).real());
    } else {
      // Complex pair: real span from Re and Im once; mark the conjugate twin.
      columns.push_back(vectors.col(i).real());
      columns.push_back(vectors.col(i).imag());
      for (int j = 0; j < d; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        if (std::abs(values[j].real() - values[i].real()) < 1e-10 &&
            std::abs(values[j].imag() + values[i].imag()) < 1e-10) {
          used[static_cast<std::size_t>(j)] = true;
          break;
        }
      }
    }
  }

  Eigen::MatrixXd raw(d, static_cast<int>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) raw.col(static_cast<int>(c)) = columns[c];
  // Orthonormalize; the collected real spans can overlap slightly in floats.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(d, std::min<int>(d, raw.cols()));
  report.neg_vectors = q.leftCols(std::min<int>(report.neg, static_cast<int>(raw.cols())));
  fix_column_signs(report.neg_vectors);
  return report;
}

SubspaceBasis give_initial_eigenvectors(const HessianOperator& op, const Eigen::VectorXd& x,
                                        int k, Rng& rng) {
  const int d = op.dim();
  if (k <= 0) return SubspaceBasis{Eigen::MatrixXd(d, 0), Eigen::VectorXd(0)};
  if (d > kDenseLimit) {
    // Only orthonormality is required at this scale.
    Eigen::MatrixXd V(d, k);
    for (int c = 0; c < k; ++c) V.col(c) = rng.gaussian_vector(d);
    orthonormalize_columns(V, rng);
    Eigen::VectorXd ray(k);
    for (int c = 0; c < k; ++c) ray[c] = V.col(c).dot(op.hvp(x, V.col(c)));
    return SubspaceBasis{V, ray};
  }
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  symmetric_eigs(dense_operator(op, x), values, vectors);
  Eigen::MatrixXd V = vectors.leftCols(k);
  fix_column_signs(V);
  return SubspaceBasis{V, values.head(k)};
}

// ---------------------------------------------------------------------------
// Canonicalization
// ---------------------------------------------------------------------------

namespace {

// Reduced row echelon form with exact unit pivots and exact zeros in the
// eliminated positions. Returns false when the numerical rank is deficient.
bool rref(Eigen::MatrixXd& a) {
  const int rows = static_cast<int>(a.rows());
  const int cols = static_cast<int>(a.cols());
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return rows == 0;
  const double tol = 1e-10 * scale;

  int row = 0;
  for (int col = 0; col < cols && row < rows; ++col) {
    int pivot = -1;
    double best = tol;
    for (int r = row; r < rows; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (pivot < 0) continue;
    a.row(row).swap(a.row(pivot));
    a.row(row) /= a(row, col);
    a(row, col) = 1.0;
    for (int r = 0; r < rows; ++r) {
      if (r == row) continue;
      double f = a(r, col);
      if (f != 0.0) {
        a.row(r) -= f * a.row(row);
        a(r, col) = 0.0;
      }
    }
    ++row;
  }
  return row == rows;
}

}  // namespace

Eigen::MatrixXd canonicalize_matrix(const Eigen::MatrixXd& block) {
  const int d = static_cast<int>(block.rows());
  const int m = static_cast<int>(block.cols());
  if (m == 0) return block;
  Eigen::MatrixXd a = block.transpose();
  if (!rref(a))
    throw std::invalid_argument("canonicalize: rank-deficient eigenblock (inconsistent grouping)");

  Eigen::MatrixXd out(d, m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd w = a.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) w -= out.col(j).dot(w) * out.col(j);
    double n = w.norm();
    if (n < kRankTol)
      throw std::invalid_argument("canonicalize: rank-deficient eigenblock (inconsistent grouping)");
    out.col(i) = w / n;
  }
  fix_column_signs(out);
  return out;
}

std::vector<std::pair<double, Eigen::MatrixXd>> canonicalize_eigens(
    const std::vector<std::pair<double, Eigen::MatrixXd>>& blocks) {
  std::vector<std::pair<double, Eigen::MatrixXd>> out;
  out.reserve(blocks.size());
  for (const auto& [value, block] : blocks) out.emplace_back(value, canonicalize_matrix(block));
  return out;
}

Eigen::MatrixXd canonicalize_by_multiplicity(const Eigen::VectorXd& values,
                                             const Eigen::MatrixXd& vectors, double tol) {
  const int n = static_cast<int>(values.size());
  Eigen::MatrixXd out = vectors;
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n && std::abs(values[end] - values[end - 1]) <= tol) ++end;
    out.middleCols(start, end - start) =
        canonicalize_matrix(vectors.middleCols(start, end - start));
    start = end;
  }
  return out;
}

}  // namespace hisd
