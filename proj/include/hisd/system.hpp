#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "hisd/expr.hpp"
#include "hisd/rng.hpp"

namespace hisd {

// Instrumentation shared by everything that touches a system. Counters are
// atomic so concurrent searches may share one instance.
struct EvalCounter {
  std::atomic<long long> force_evals{0};
  std::atomic<long long> hvp_evals{0};
};

// A normalized dynamical system. `force` evaluates the internal field G:
// the energy gradient for gradient systems, minus the vector field for
// general autonomous systems. All downstream modules consume only G.
struct SystemSpec {
  int dim = 0;
  expr::CompiledVectorFn force;  // G(x)
  std::optional<expr::CompiledScalarFn> energy;
  std::optional<expr::Expr> energy_expression;  // kept for exact Hessians and exports
  bool is_gradient = false;
  double dimer_length = 1e-5;
  std::string description;  // human-readable origin, hashed into manifests
  std::shared_ptr<EvalCounter> counter = std::make_shared<EvalCounter>();

  Eigen::VectorXd field(const Eigen::VectorXd& x) const {
    counter->force_evals.fetch_add(1, std::memory_order_relaxed);
    return force(x);
  }
};

using SystemPtr = std::shared_ptr<const SystemSpec>;

struct SystemOptions {
  std::optional<bool> claimed_gradient;
  bool symmetry_check = true;
  bool numerical_grad = false;
  double numerical_grad_h = 1e-6;
  double dimer_length = 1e-5;
  int probe_samples = 10;
  double probe_tol = 1e-6;
  std::uint64_t probe_seed = 1121;
  std::optional<Eigen::VectorXd> probe_center;  // box center, defaults to the origin
};

// Builds a gradient system from an energy expression; G = grad E compiled
// symbolically, or by central differences when options.numerical_grad is set.
SystemPtr build_from_energy(const expr::Expr& energy, const SystemOptions& options = {});

// Gradient system from a callable energy; the gradient is always numerical.
SystemPtr build_from_energy(expr::CompiledScalarFn energy, int dim,
                            const SystemOptions& options = {});

// Wraps a caller-supplied normalized field G. When no gradient claim is made
// the symmetry probe decides; an explicit claim is honored, with a warning if
// the probe disagrees.
SystemPtr build_from_force(expr::CompiledVectorFn force, int dim,
                           const SystemOptions& options = {},
                           std::optional<expr::CompiledScalarFn> energy = {},
                           std::string description = {});

// Central difference gradient, component i = (E(x+h e_i) - E(x-h e_i)) / 2h.
Eigen::VectorXd numerical_gradient(const expr::CompiledScalarFn& energy,
                                   const Eigen::VectorXd& x, double h);

// Samples (x, u, v) triples and compares <u, J(x) v> with <v, J(x) u> through
// dimer products of the field; true when the Jacobian looks symmetric.
bool symmetry_probe(const expr::CompiledVectorFn& force, int dim, int samples, double tol,
                    double dimer_length, Rng& rng,
                    const std::optional<Eigen::VectorXd>& center = {});

}  // namespace hisd
