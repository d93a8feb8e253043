#include "hisd/system.hpp"

#include <cmath>
#include <stdexcept>

#include "hisd/log.hpp"

namespace hisd {

Eigen::VectorXd numerical_gradient(const expr::CompiledScalarFn& energy,
                                   const Eigen::VectorXd& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("numerical_gradient: h must be positive");
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (int i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    double fp = energy(p);
    p[i] = x[i] - h;
    double fm = energy(p);
    p[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

bool symmetry_probe(const expr::CompiledVectorFn& force, int dim, int samples, double tol,
                    double dimer_length, Rng& rng,
                    const std::optional<Eigen::VectorXd>& center) {
  Eigen::VectorXd c = center.value_or(Eigen::VectorXd::Zero(dim));
  const double l = dimer_length;
  auto jacobian_product = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    return (force(x + l * v) - force(x - l * v)) / (2.0 * l);
  };
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x = c + rng.uniform_vector(dim, -1.0, 1.0);
    Eigen::VectorXd u = rng.unit_vector(dim);
    Eigen::VectorXd v = rng.unit_vector(dim);
    double a = u.dot(jacobian_product(x, v));
    double b = v.dot(jacobian_product(x, u));
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    if (std::abs(a - b) / scale > tol) return false;
  }
  return true;
}

namespace {

// Spot check that a declared energy matches the field at a few points.
void check_energy_consistency(const expr::CompiledScalarFn& energy,
                              const expr::CompiledVectorFn& force, int dim,
                              std::uint64_t seed) {
  Rng rng(seed);
  for (int s = 0; s < 5; ++s) {
    Eigen::VectorXd x = rng.uniform_vector(dim, -1.0, 1.0);
    Eigen::VectorXd g = force(x);
    Eigen::VectorXd fd = numerical_gradient(energy, x, 1e-6);
    double scale = std::max(1.0, g.norm());
    if (!g.allFinite() || !fd.allFinite()) continue;
    if ((g - fd).norm() / scale > 1e-4)
      throw std::invalid_argument(
          "system: declared energy does not match the supplied field (finite-difference check)");
  }
}

}  // namespace

SystemPtr build_from_energy(const expr::Expr& energy, const SystemOptions& options) {
  int used = energy.max_var_index();
  if (used > energy.dim())
    throw std::invalid_argument("build_from_energy: expression uses x" + std::to_string(used) +
                                " but dim is " + std::to_string(energy.dim()));
  auto spec = std::make_shared<SystemSpec>();
  spec->dim = energy.dim();
  spec->energy = compile_scalar(energy);
  spec->energy_expression = energy;
  spec->is_gradient = true;
  spec->dimer_length = options.dimer_length;
  spec->description = "energy:" + energy.unparse();
  if (options.numerical_grad) {
    expr::CompiledScalarFn e = *spec->energy;
    double h = options.numerical_grad_h;
    spec->force = expr::CompiledVectorFn(
        spec->dim, [e, h](const Eigen::VectorXd& x) { return numerical_gradient(e, x, h); });
  } else {
    spec->force = compile_gradient(energy);
  }
  return spec;
}

SystemPtr build_from_energy(expr::CompiledScalarFn energy, int dim,
                            const SystemOptions& options) {
  if (dim < 1) throw std::invalid_argument("build_from_energy: dim must be positive");
  auto spec = std::make_shared<SystemSpec>();
  spec->dim = dim;
  spec->energy = energy;
  spec->is_gradient = true;
  spec->dimer_length = options.dimer_length;
  spec->description = "energy:callable";
  double h = options.numerical_grad_h;
  spec->force = expr::CompiledVectorFn(
      dim, [energy, h](const Eigen::VectorXd& x) { return numerical_gradient(energy, x, h); });
  return spec;
}

SystemPtr build_from_force(expr::CompiledVectorFn force, int dim, const SystemOptions& options,
                           std::optional<expr::CompiledScalarFn> energy,
                           std::string description) {
  if (dim < 1) throw std::invalid_argument("build_from_force: dim must be positive");
  auto spec = std::make_shared<SystemSpec>();
  spec->dim = dim;
  spec->dimer_length = options.dimer_length;
  spec->description = description.empty() ? "force:callable" : std::move(description);

  bool probed = false;
  bool probe_result = false;
  if (options.symmetry_check) {
    Rng rng(options.probe_seed);
    probe_result = symmetry_probe(force, dim, options.probe_samples, options.probe_tol,
                                  options.dimer_length, rng, options.probe_center);
    probed = true;
  }

  if (options.claimed_gradient.has_value()) {
    spec->is_gradient = *options.claimed_gradient;
    if (probed && probe_result != spec->is_gradient)
      log::warn("symmetry probe disagrees with the declared gradient flag; claim honored");
  } else if (probed) {
    spec->is_gradient = probe_result;
  } else {
    // No probe and no claim: treat as non-gradient, the conservative choice.
    spec->is_gradient = false;
    log::warn("symmetry check disabled and no gradient flag given; assuming non-gradient");
  }

  if (energy) {
    if (!spec->is_gradient)
      throw std::invalid_argument("build_from_force: energy given for a non-gradient system");
    check_energy_consistency(*energy, force, dim, options.probe_seed);
    spec->energy = std::move(energy);
  }
  spec->force = std::move(force);
  return spec;
}

}  // namespace hisd
