#include "hisd/gallery.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace hisd::gallery {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string butterfly_expression() {
  return "x1**4 -1.5*x1**2*x2**2+ x2**4 - 2*x2**3 + x2**2 + x1**2*x2 - 2*x1**2";
}

std::string mueller_brown_expression() {
  const double A[4] = {-200.0, -100.0, -170.0, 15.0};
  const double a[4] = {-1.0, -1.0, -6.5, 0.7};
  const double b[4] = {0.0, 0.0, 11.0, 0.6};
  const double c[4] = {-10.0, -10.0, -6.5, 0.7};
  const double xb[4] = {1.0, 0.0, -0.5, -1.0};
  const double yb[4] = {0.0, 0.5, 1.5, 1.0};
  std::string e;
  for (int i = 0; i < 4; ++i) {
    std::string dx = "(x1 - " + num(xb[i]) + ")";
    std::string dy = "(x2 - " + num(yb[i]) + ")";
    std::string term = num(A[i]) + "*exp(" + num(a[i]) + "*" + dx + "**2 + " + num(b[i]) + "*" +
                       dx + "*" + dy + " + " + num(c[i]) + "*" + dy + "**2)";
    if (i > 0) e += " + ";
    e += term;
  }
  return e;
}

std::string cubic_expression(int n) {
  std::string e;
  for (int j = 1; j <= n; ++j) {
    if (j > 1) e += " + ";
    e += std::to_string(j) + "*(x" + std::to_string(j) + "**2 - 1)**2";
  }
  return e;
}

GallerySystem butterfly() {
  GallerySystem g;
  g.name = "butterfly";
  g.make_system = [] {
    return build_from_energy(expr::parse_expression(butterfly_expression(), 2));
  };
  g.reference_config = ordered_json{
      {"energy_expression", butterfly_expression()},
      {"initial_point", {0.1, 0.1}},
      {"time_step", 1e-2},
      {"max_iter", 10000},
      {"max_index", 2},
      {"eigen_method", "euler"},
      {"eigen_max_iter", 1},
      {"eigen_combination", "all"},
      {"perturbation_number", 1},
      {"perturbation_radius", 1e-2},
      {"acceleration", "none"},
      {"verbose", true},
      {"report_interval", 100},
  };
  return g;
}

GallerySystem mueller_brown() {
  GallerySystem g;
  g.name = "mueller_brown";
  g.make_system = [] {
    return build_from_energy(expr::parse_expression(mueller_brown_expression(), 2));
  };
  g.reference_config = ordered_json{
      {"energy_expression", mueller_brown_expression()},
      {"initial_point", {0.15, 0.25}},
      {"time_step", 1e-4},
      {"max_iter", 50000},
      {"max_index", 1},
      {"eigen_method", "euler"},
      {"eigen_max_iter", 1},
      {"eigen_step_size", 1e-5},
      {"eigen_combination", "all"},
      {"perturbation_number", 2},
      {"perturbation_radius", 1e-2},
      {"restarts",
       {ordered_json{{"type", "saddle"}, {"id", 1}, {"perturbation", {0.01, 0.0}}, {"max_index", 1}}}},
  };
  return g;
}

GallerySystem cubic(int n) {
  GallerySystem g;
  g.name = "cubic";
  g.make_system = [n] {
    return build_from_energy(expr::parse_expression(cubic_expression(n), n));
  };
  std::vector<double> x0(static_cast<std::size_t>(n), 0.0);
  g.reference_config = ordered_json{
      {"energy_expression", cubic_expression(n)},
      {"initial_point", x0},
      {"time_step", 1e-2},
      {"max_iter", 10000},
      {"max_index", n},
      {"max_index_gap", 1},
      {"eigen_method", "euler"},
      {"eigen_max_iter", 1},
      {"eigen_combination", "all"},
      {"perturbation_number", 2},
      {"perturbation_radius", 1e-2},
      {"rng_seed", 1121},
  };
  return g;
}

Eigen::VectorXd phase_field_force(const Eigen::VectorXd& phi, int n, double kappa) {
  const double inv_h2 = static_cast<double>(n) * static_cast<double>(n);
  Eigen::VectorXd out(n * n);
  auto at = [&](int i, int j) { return phi[((i + n) % n) * n + ((j + n) % n)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double lap = (at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) -
                    4.0 * at(i, j)) * inv_h2;
      double p = at(i, j);
      out[i * n + j] = -(kappa * lap + p - p * p * p);
    }
  }
  return out;
}

GallerySystem phase_field(int n_grid, double kappa) {
  GallerySystem g;
  g.name = "phase_field";
  g.make_system = [n_grid, kappa] {
    const int d = n_grid * n_grid;
    expr::CompiledVectorFn force(d, [n_grid, kappa](const Eigen::VectorXd& phi) {
      return phase_field_force(phi, n_grid, kappa);
    });
    SystemOptions options;
    options.claimed_gradient = true;
    options.symmetry_check = false;
    options.dimer_length = 1e-3;
    char description[64];
    std::snprintf(description, sizeof(description), "phase_field:n=%d;kappa=%g", n_grid, kappa);
    return build_from_force(std::move(force), d, options, {}, description);
  };
  std::vector<double> x0(static_cast<std::size_t>(n_grid * n_grid), 0.0);
  g.reference_config = ordered_json{
      {"force_plugin",
       ordered_json{{"type", "builtin"},
                    {"name", "phase_field"},
                    {"params", ordered_json{{"n_grid", n_grid}, {"kappa", kappa}}}}},
      {"gradient_system", true},
      {"symmetry_check", false},
      {"initial_point", x0},
      {"dimer_length", 1e-3},
      {"hessian_dimer_length", 1e-3},
      {"time_step", 1e-3},
      {"max_iter", 2000},
      {"tolerance", 1e-4},
      {"search_area", 1e4},
      {"max_index", 2},
      {"max_index_gap", 3},
      {"eigen_combination", "min"},
      {"eigen_max_iter", 2},
      {"eigen_step_size", 1e-7},
      {"eigvec_unified", true},
      {"bb_step", true},
      {"acceleration", "nesterov"},
      {"nesterov_choice", 1},
      {"nesterov_restart", 200},
      {"momentum", 0.8},
      {"perturbation_number", 2},
      {"perturbation_radius", 5.0},
      {"save_trajectory", false},
      {"same_judgement", ordered_json{{"type", "translation"}, {"epsilon", 0.05}}},
  };
  return g;
}

GallerySystem by_name(const std::string& name) {
  if (name == "butterfly") return butterfly();
  if (name == "mueller_brown") return mueller_brown();
  if (name == "cubic") return cubic(3);
  if (name == "phase_field") return phase_field(16, 0.05);
  throw std::invalid_argument("unknown gallery system: " + name);
}

std::vector<std::string> names() {
  return {"butterfly", "mueller_brown", "cubic", "phase_field"};
}

SamePredicate translation_predicate(int n, double epsilon) {
  return [n, epsilon](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int dx = 0; dx < n; ++dx) {
      for (int dy = 0; dy < n; ++dy) {
        double worst = 0.0;
        for (int i = 0; i < n && worst <= epsilon; ++i)
          for (int j = 0; j < n; ++j) {
            double diff = std::abs(a[i * n + j] - b[((i + dx) % n) * n + (j + dy) % n]);
            if (diff > worst) worst = diff;
          }
        if (worst <= epsilon) return true;
      }
    }
    return false;
  };
}

SamePredicate correlation_predicate(int n, double threshold) {
  return [n, threshold](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double norm_factor = a.squaredNorm();
    if (norm_factor < 1e-7) return b.squaredNorm() < 1e-7;
    double best = -std::numeric_limits<double>::infinity();
    for (int dx = 0; dx < n; ++dx) {
      for (int dy = 0; dy < n; ++dy) {
        double corr = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            corr += a[i * n + j] * b[((i + dx) % n) * n + (j + dy) % n];
        if (corr > best) best = corr;
      }
    }
    return best / norm_factor > threshold;
  };
}

std::vector<Eigen::VectorXd> cubic_stationary_points(int n) {
  std::vector<Eigen::VectorXd> points;
  const int total = static_cast<int>(std::pow(3, n));
  for (int code = 0; code < total; ++code) {
    Eigen::VectorXd p(n);
    int rest = code;
    for (int j = 0; j < n; ++j) {
      p[j] = static_cast<double>(rest % 3 - 1);
      rest /= 3;
    }
    points.push_back(std::move(p));
  }
  return points;
}

int cubic_index(const Eigen::VectorXd& p) {
  int zeros = 0;
  for (int j = 0; j < p.size(); ++j)
    if (p[j] == 0.0) ++zeros;
  return zeros;
}

}  // namespace hisd::gallery
