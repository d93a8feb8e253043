#include "hisd/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "hisd/gallery.hpp"
#include "hisd/log.hpp"

namespace hisd {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string render(const json& v) {
  if (v.is_null()) return "none";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v.get<double>());
    return buf;
  }
  return v.dump();
}

// Canonical key order for resolved configurations.
const char* kKeyOrder[] = {
    "dim",
    "energy_expression",
    "force_plugin",
    "gradient_system",
    "numerical_grad",
    "dimer_length",
    "symmetry_check",
    "exact_hessian",
    "hessian_dimer_length",
    "eigen_method",
    "eigen_max_iter",
    "eigen_step_size",
    "precision_tol",
    "eigvec_unified",
    "initial_point",
    "tolerance",
    "search_area",
    "time_step",
    "max_iter",
    "save_trajectory",
    "verbose",
    "report_interval",
    "bb_step",
    "bb_cap",
    "acceleration",
    "momentum",
    "nesterov_choice",
    "nesterov_restart",
    "saddle_index",
    "max_index",
    "max_index_gap",
    "same_judgement",
    "perturbation_method",
    "perturbation_radius",
    "perturbation_number",
    "eigen_combination",
    "initial_eigen_vectors",
    "rng_seed",
    "restarts",
};

struct Validator {
  const json& raw;
  ordered_json out;
  std::vector<std::string>& defaults;
  std::vector<std::string>& warnings;

  bool has(const char* key) const { return raw.contains(key) && !raw.at(key).is_null(); }

  void copy_or_default(const char* key, const json& fallback, bool record = true) {
    if (has(key)) {
      out[key] = raw.at(key);
    } else {
      out[key] = fallback;
      if (record)
        defaults.push_back("Parameter `" + std::string(key) +
                           "` not specified - using default value " + render(fallback) + ".");
    }
  }

  double number(const char* key) const {
    const json& v = out.at(key);
    if (!v.is_number()) throw ConfigError(std::string("parameter `") + key + "` must be a number");
    return v.get<double>();
  }

  long long integer(const char* key) const {
    const json& v = out.at(key);
    if (!v.is_number_integer())
      throw ConfigError(std::string("parameter `") + key + "` must be an integer");
    return v.get<long long>();
  }

  bool boolean(const char* key) const {
    const json& v = out.at(key);
    if (!v.is_boolean()) throw ConfigError(std::string("parameter `") + key + "` must be a boolean");
    return v.get<bool>();
  }

  std::string text(const char* key) const {
    const json& v = out.at(key);
    if (!v.is_string()) throw ConfigError(std::string("parameter `") + key + "` must be a string");
    return v.get<std::string>();
  }

  void require_positive(const char* key) {
    if (!(number(key) > 0.0))
      throw ConfigError(std::string("parameter `") + key + "` must be positive");
  }

  void require_at_least(const char* key, long long lo) {
    if (integer(key) < lo)
      throw ConfigError(std::string("parameter `") + key + "` must be at least " +
                        std::to_string(lo));
  }

  void require_choice(const char* key, std::initializer_list<const char*> choices) {
    std::string v = text(key);
    for (const char* c : choices)
      if (v == c) return;
    throw ConfigError(std::string("parameter `") + key + "` has invalid value '" + v + "'");
  }
};

}  // namespace

ResolvedConfig validate_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError("configuration must be a JSON object");

  ResolvedConfig resolved;
  Validator v{raw, ordered_json::object(), resolved.defaults_applied, resolved.warnings};

  // --- system definition -----------------------------------------------
  if (!raw.contains("initial_point"))
    throw ConfigError("parameter `initial_point` is required");
  const json& point = raw.at("initial_point");
  if (!point.is_array() || point.empty())
    throw ConfigError("parameter `initial_point` must be a non-empty array");
  for (const json& c : point) {
    if (!c.is_number()) throw ConfigError("parameter `initial_point` must hold numbers");
    if (!std::isfinite(c.get<double>()))
      throw ConfigError("parameter `initial_point` must be finite");
  }
  int dim_from_point = static_cast<int>(point.size());

  bool has_energy = v.has("energy_expression");
  bool has_force = v.has("force_plugin");
  if (has_energy == has_force)
    throw ConfigError("specify exactly one of `energy_expression` and `force_plugin`");

  if (raw.contains("dim") && !raw.at("dim").is_null()) {
    if (!raw.at("dim").is_number_integer())
      throw ConfigError("parameter `dim` must be an integer");
    if (raw.at("dim").get<int>() != dim_from_point)
      resolved.warnings.push_back("[Config Sync] `Dim` parameter auto-adjusted to " +
                                  std::to_string(dim_from_point) +
                                  " based on `initial_point` dimensionality.");
  } else {
    resolved.warnings.push_back("[Config Sync] `Dim` parameter auto-adjusted to " +
                                std::to_string(dim_from_point) +
                                " based on `initial_point` dimensionality.");
  }
  v.out["dim"] = dim_from_point;

  if (has_energy) {
    if (!raw.at("energy_expression").is_string())
      throw ConfigError("parameter `energy_expression` must be a string");
    v.out["energy_expression"] = raw.at("energy_expression");
  }
  if (has_force) {
    const json& plugin = raw.at("force_plugin");
    if (!plugin.is_object() || !plugin.contains("type"))
      throw ConfigError("parameter `force_plugin` must be an object with a `type`");
    std::string type = plugin.at("type").get<std::string>();
    if (type == "expressions") {
      if (!plugin.contains("components") || !plugin.at("components").is_array() ||
          static_cast<int>(plugin.at("components").size()) != dim_from_point)
        throw ConfigError("force_plugin.components must list one expression per dimension");
    } else if (type == "builtin") {
      if (!plugin.contains("name") || !plugin.at("name").is_string())
        throw ConfigError("force_plugin.name must name a builtin system");
    } else {
      throw ConfigError("force_plugin.type must be 'expressions' or 'builtin'");
    }
    v.out["force_plugin"] = plugin;
  }

  v.copy_or_default("gradient_system", nullptr);
  v.copy_or_default("numerical_grad", false);
  v.copy_or_default("dimer_length", 1e-5);
  v.copy_or_default("symmetry_check", true);
  v.require_positive("dimer_length");

  // --- hessian -----------------------------------------------------------
  v.copy_or_default("exact_hessian", false);
  v.copy_or_default("hessian_dimer_length", 1e-5);
  v.require_positive("hessian_dimer_length");
  if (v.boolean("exact_hessian") && !has_energy)
    throw ConfigError("`exact_hessian` requires a symbolic `energy_expression`");

  // --- eigen ---------------------------------------------------------------
  v.copy_or_default("eigen_method", "auto");
  v.require_choice("eigen_method", {"auto", "euler", "power", "lobpcg"});
  v.copy_or_default("eigen_max_iter", 10);
  v.require_at_least("eigen_max_iter", 1);
  v.copy_or_default("precision_tol", 1e-5);
  v.require_positive("precision_tol");
  v.copy_or_default("eigvec_unified", false);
  if (v.text("eigen_method") == "lobpcg" && v.out["gradient_system"].is_boolean() &&
      !v.out["gradient_system"].get<bool>())
    throw ConfigError("lobpcg requires a gradient system");

  // --- solver --------------------------------------------------------------
  v.out["initial_point"] = point;
  v.copy_or_default("tolerance", 1e-6);
  v.require_positive("tolerance");
  v.copy_or_default("search_area", 1000.0);
  v.require_positive("search_area");
  v.copy_or_default("time_step", 1e-2);
  v.require_positive("time_step");
  v.copy_or_default("eigen_step_size", v.out["time_step"]);
  v.require_positive("eigen_step_size");
  v.copy_or_default("max_iter", 10000);
  v.require_at_least("max_iter", 1);
  v.copy_or_default("save_trajectory", dim_from_point <= 100);
  v.copy_or_default("verbose", false);
  v.copy_or_default("report_interval", 100);
  v.require_at_least("report_interval", 1);
  v.copy_or_default("bb_step", false);
  v.copy_or_default("bb_cap", 0.5);
  v.require_positive("bb_cap");
  v.copy_or_default("acceleration", "none");
  v.require_choice("acceleration", {"none", "heavyball", "nesterov"});
  v.copy_or_default("momentum", 0.0);
  {
    double m = v.number("momentum");
    if (m < 0.0 || m >= 1.0) throw ConfigError("parameter `momentum` must lie in [0, 1)");
  }
  v.copy_or_default("nesterov_choice", 1);
  if (v.integer("nesterov_choice") != 1 && v.integer("nesterov_choice") != 2)
    throw ConfigError("parameter `nesterov_choice` must be 1 or 2");
  v.copy_or_default("nesterov_restart", nullptr);
  if (!v.out["nesterov_restart"].is_null()) v.require_at_least("nesterov_restart", 1);

  // --- landscape ------------------------------------------------------------
  v.copy_or_default("max_index", 2);
  v.require_at_least("max_index", 0);
  v.copy_or_default("saddle_index", v.out["max_index"]);
  v.require_at_least("saddle_index", 0);
  v.copy_or_default("max_index_gap", 1);
  v.require_at_least("max_index_gap", 1);
  v.copy_or_default("same_judgement", json{{"type", "euclidean"}, {"tol", 1e-3}});
  {
    const json& sj = v.out["same_judgement"];
    if (!sj.is_object() || !sj.contains("type"))
      throw ConfigError("parameter `same_judgement` must be an object with a `type`");
    std::string type = sj.at("type").get<std::string>();
    if (type != "euclidean" && type != "translation" && type != "correlation")
      throw ConfigError("same_judgement.type must be euclidean, translation, or correlation");
  }
  v.copy_or_default("perturbation_method", "uniform");
  v.require_choice("perturbation_method", {"uniform", "gaussian"});
  v.copy_or_default("perturbation_radius", 1e-2);
  v.require_positive("perturbation_radius");
  v.copy_or_default("perturbation_number", 2);
  v.require_at_least("perturbation_number", 1);
  v.copy_or_default("eigen_combination", "all");
  v.require_choice("eigen_combination", {"all", "min"});
  v.copy_or_default("initial_eigen_vectors", nullptr);
  v.copy_or_default("rng_seed", 1121);
  v.copy_or_default("restarts", json::array(), /*record=*/false);

  // --- unknown keys ----------------------------------------------------------
  std::set<std::string> known;
  for (const char* k : kKeyOrder) known.insert(k);
  for (auto it = raw.begin(); it != raw.end(); ++it)
    if (!known.count(it.key()))
      resolved.warnings.push_back("Unknown parameter `" + it.key() + "` ignored.");

  // Reorder into the canonical key sequence.
  ordered_json ordered;
  for (const char* k : kKeyOrder)
    if (v.out.contains(k)) ordered[k] = v.out[k];
  resolved.json = std::move(ordered);
  return resolved;
}

namespace {

Eigen::VectorXd to_vector(const json& arr) {
  Eigen::VectorXd x(arr.size());
  int i = 0;
  for (const json& c : arr) x[i++] = c.get<double>();
  return x;
}

SamePredicate make_predicate(const json& sj, int dim) {
  std::string type = sj.at("type").get<std::string>();
  if (type == "euclidean") {
    double tol = sj.contains("tol") ? sj.at("tol").get<double>() : 1e-3;
    return euclidean_predicate(tol);
  }
  int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dim))));
  if (n * n != dim)
    throw ConfigError("translation/correlation predicates require a square grid dimension");
  if (type == "translation") {
    double eps = sj.contains("epsilon") ? sj.at("epsilon").get<double>() : 0.05;
    return gallery::translation_predicate(n, eps);
  }
  double threshold = sj.contains("threshold") ? sj.at("threshold").get<double>() : 0.99;
  return gallery::correlation_predicate(n, threshold);
}

Eigen::MatrixXd load_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open initial_eigen_vectors file: " + path);
  json j = json::parse(in);
  int rows = j.at("rows").get<int>();
  int cols = j.at("cols").get<int>();
  const json& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw ConfigError("initial_eigen_vectors data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  int idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data.at(idx++).get<double>();
  return m;
}

}  // namespace

Assembled assemble(const ResolvedConfig& config) {
  const ordered_json& j = config.json;
  Assembled a;
  const int dim = j.at("dim").get<int>();
  a.initial_point = to_vector(j.at("initial_point"));

  SystemOptions options;
  options.numerical_grad = j.at("numerical_grad").get<bool>();
  options.dimer_length = j.at("dimer_length").get<double>();
  options.symmetry_check = j.at("symmetry_check").get<bool>();
  if (j.at("gradient_system").is_boolean())
    options.claimed_gradient = j.at("gradient_system").get<bool>();
  options.probe_seed = j.at("rng_seed").get<std::uint64_t>();
  options.probe_center = a.initial_point;

  if (j.contains("energy_expression")) {
    expr::Expr energy = expr::parse_expression(j.at("energy_expression").get<std::string>(), dim);
    a.system = build_from_energy(energy, options);
  } else {
    const json& plugin = j.at("force_plugin");
    std::string type = plugin.at("type").get<std::string>();
    if (type == "expressions") {
      std::vector<expr::CompiledScalarFn> components;
      std::string description = "force:";
      for (const json& c : plugin.at("components")) {
        expr::Expr e = expr::parse_expression(c.get<std::string>(), dim);
        description += e.unparse() + ";";
        components.push_back(compile_scalar(e));
      }
      expr::CompiledVectorFn force(dim, [components, dim](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(dim);
        for (int i = 0; i < dim; ++i) g[i] = components[static_cast<std::size_t>(i)](x);
        return g;
      });
      a.system = build_from_force(std::move(force), dim, options, {}, description);
    } else {
      std::string name = plugin.at("name").get<std::string>();
      gallery::GallerySystem g;
      if (name == "phase_field") {
        const json& params = plugin.at("params");
        g = gallery::phase_field(params.at("n_grid").get<int>(), params.at("kappa").get<double>());
      } else if (name == "cubic") {
        g = gallery::cubic(plugin.contains("params") && plugin.at("params").contains("n")
                               ? plugin.at("params").at("n").get<int>()
                               : dim);
      } else {
        g = gallery::by_name(name);
      }
      SystemPtr built = g.make_system();
      if (built->dim != dim)
        throw ConfigError("builtin system dimension " + std::to_string(built->dim) +
                          " does not match initial_point length " + std::to_string(dim));
      auto spec = std::make_shared<SystemSpec>(*built);
      spec->dimer_length = options.dimer_length;
      a.system = spec;
    }
  }

  SearchConfig& s = a.search;
  s.time_step = j.at("time_step").get<double>();
  s.max_iter = j.at("max_iter").get<int>();
  s.tolerance = j.at("tolerance").get<double>();
  s.search_area = j.at("search_area").get<double>();
  s.bb_step = j.at("bb_step").get<bool>();
  s.bb_cap = j.at("bb_cap").get<double>();
  std::string acc = j.at("acceleration").get<std::string>();
  s.acceleration = acc == "nesterov"    ? Acceleration::Nesterov
                   : acc == "heavyball" ? Acceleration::HeavyBall
                                        : Acceleration::None;
  s.momentum = j.at("momentum").get<double>();
  s.nesterov_choice = j.at("nesterov_choice").get<int>();
  if (!j.at("nesterov_restart").is_null())
    s.nesterov_restart = j.at("nesterov_restart").get<int>();
  s.verbose = j.at("verbose").get<bool>();
  s.report_interval = j.at("report_interval").get<int>();
  s.save_trajectory = j.at("save_trajectory").get<bool>();

  std::string method = j.at("eigen_method").get<std::string>();
  s.eigen.method = method == "euler"    ? EigenMethod::Euler
                   : method == "power"  ? EigenMethod::Power
                   : method == "lobpcg" ? EigenMethod::Lobpcg
                                        : EigenMethod::Auto;
  s.eigen.max_iter = j.at("eigen_max_iter").get<int>();
  s.eigen.step_size = j.at("eigen_step_size").get<double>();
  s.eigen.precision_tol = j.at("precision_tol").get<double>();
  s.eigen.eigvec_unified = j.at("eigvec_unified").get<bool>();
  s.hessian.exact = j.at("exact_hessian").get<bool>();
  s.hessian.dimer_length = j.at("hessian_dimer_length").get<double>();

  if (s.eigen.method == EigenMethod::Lobpcg && !a.system->is_gradient)
    throw ConfigError("lobpcg requires a gradient system");

  LandscapeConfig& l = a.landscape;
  l.max_index = j.at("max_index").get<int>();
  l.max_index_gap = j.at("max_index_gap").get<int>();
  l.same_judgement = make_predicate(j.at("same_judgement"), dim);
  l.perturbation_method = j.at("perturbation_method").get<std::string>() == "gaussian"
                              ? PerturbationMethod::Gaussian
                              : PerturbationMethod::Uniform;
  l.perturbation_radius = j.at("perturbation_radius").get<double>();
  l.perturbation_number = j.at("perturbation_number").get<int>();
  l.eigen_combination = j.at("eigen_combination").get<std::string>() == "min"
                            ? EigenCombination::Min
                            : EigenCombination::All;
  if (!j.at("initial_eigen_vectors").is_null())
    l.initial_eigen_vectors = load_matrix_file(j.at("initial_eigen_vectors").get<std::string>());
  l.rng_seed = j.at("rng_seed").get<std::uint64_t>();

  a.saddle_index = j.at("saddle_index").get<int>();
  return a;
}

std::vector<RestartStep> restart_steps(const ResolvedConfig& config) {
  std::vector<RestartStep> steps;
  for (const json& r : config.json.at("restarts")) {
    RestartStep step;
    std::string type = r.at("type").get<std::string>();
    step.max_index = r.at("max_index").get<int>();
    if (type == "point") {
      step.kind = RestartStep::Kind::Point;
      step.point = to_vector(r.at("point"));
    } else if (type == "saddle") {
      step.kind = RestartStep::Kind::Saddle;
      step.saddle_id = r.at("id").get<int>();
      step.perturbation = to_vector(r.at("perturbation"));
    } else {
      throw ConfigError("restart type must be 'point' or 'saddle'");
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

nlohmann::ordered_json build_manifest(const ResolvedConfig& config,
                                      const std::string& system_description,
                                      double duration_seconds, bool deterministic) {
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(system_description)));
  ordered_json m;
  m["schema_version"] = 1;
  m["tool"] = "hisd";
  m["version"] = kToolVersion;
  m["seed"] = config.json.at("rng_seed");
  m["system_hash"] = hash;
  m["deterministic"] = deterministic;
  m["duration_seconds"] = duration_seconds;
  m["defaults_applied"] = config.defaults_applied;
  m["warnings"] = config.warnings;
  m["config"] = config.json;
  return m;
}

}  // namespace hisd
