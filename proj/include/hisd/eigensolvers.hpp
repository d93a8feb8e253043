#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hisd/hessian.hpp"
#include "hisd/rng.hpp"

namespace hisd {

// Orthonormal basis tracking the k most unstable directions, with Rayleigh
// estimates diag(V^T H V) of the corresponding eigenvalues.
struct SubspaceBasis {
  Eigen::MatrixXd V;         // d x k, orthonormal columns
  Eigen::VectorXd rayleigh;  // k approximate eigenvalues

  int k() const { return static_cast<int>(V.cols()); }
};

// Spectrum classification against the zero tolerance. neg counts eigenvalues
// with real part below -tol, zero those within tol, pos the rest.
struct IndexReport {
  int neg = 0;
  int zero = 0;
  int pos = 0;
  Eigen::MatrixXd neg_vectors;      // d x neg, real orthonormal unstable basis
  Eigen::VectorXd spectrum;         // real parts, ascending
};

struct EigenUpdateResult {
  SubspaceBasis basis;
  bool at_least_index_k = false;
};

// One saddle-dynamics subspace step: k Rayleigh-quotient descent directions
// followed by Gram-Schmidt, repeated `substeps` times with step gamma/substeps.
// Non-gradient systems use the simplified form v + gamma J v and a full
// re-orthonormalization.
EigenUpdateResult euler_update(const HessianOperator& op, const Eigen::VectorXd& x,
                               const SubspaceBasis& basis, double gamma, int substeps,
                               bool is_gradient, double precision_tol, Rng& rng);

// Simplified discretization: V <- orth(V + gamma J V) with a QR factorization
// of the full block.
EigenUpdateResult power_update(const HessianOperator& op, const Eigen::VectorXd& x,
                               const SubspaceBasis& basis, double gamma, int substeps,
                               double precision_tol, Rng& rng);

// Unpreconditioned block LOBPCG for the k algebraically smallest eigenpairs of
// a symmetric operator; eigenvalues returned ascending. Falls back to one
// euler step on Rayleigh-Ritz breakdown.
EigenUpdateResult lobpcg_smallest(const HessianOperator& op, const Eigen::VectorXd& x,
                                  const SubspaceBasis& guess, int max_iter, double step_tol,
                                  double precision_tol, double fallback_gamma, Rng& rng);

// Trusted verification that at least k eigenvalue real parts lie below
// precision_tol, via a dense solve of the reconstructed operator.
bool check_index_k(const HessianOperator& op, const Eigen::VectorXd& x, int k,
                   double precision_tol);

// Full spectrum classification at x. For complex pairs the unstable basis
// holds the real and imaginary parts of the eigenvectors.
IndexReport find_index(const HessianOperator& op, const Eigen::VectorXd& x,
                       double precision_tol);

// Eigenvectors of the symmetrized dense operator for the k smallest
// eigenvalues; a random orthonormal block above the dense-size cutoff.
SubspaceBasis give_initial_eigenvectors(const HessianOperator& op, const Eigen::VectorXd& x,
                                        int k, Rng& rng);

// Deterministic representative of each eigenblock's column space: row echelon
// reduction of the transposed block, Gram-Schmidt, and a first-nonzero-positive
// sign convention. Throws on rank-deficient blocks.
std::vector<std::pair<double, Eigen::MatrixXd>> canonicalize_eigens(
    const std::vector<std::pair<double, Eigen::MatrixXd>>& blocks);

Eigen::MatrixXd canonicalize_matrix(const Eigen::MatrixXd& block);

// Groups ascending eigenvalues into multiplicity blocks (gap <= tol) and
// canonicalizes the associated columns in place.
Eigen::MatrixXd canonicalize_by_multiplicity(const Eigen::VectorXd& values,
                                             const Eigen::MatrixXd& vectors, double tol);

// Sequential Gram-Schmidt; collapsed columns are replaced with random
// orthogonal directions.
void orthonormalize(Eigen::MatrixXd& V, Rng& rng);

}  // namespace hisd
