#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hisd/landscape.hpp"
#include "hisd/system.hpp"

namespace hisd::gallery {

// A built-in test system: a factory for its SystemSpec plus the reference
// configuration used by the acceptance suite.
struct GallerySystem {
  std::string name;
  std::function<SystemPtr()> make_system;
  nlohmann::ordered_json reference_config;
};

std::string butterfly_expression();
std::string mueller_brown_expression();
std::string cubic_expression(int n);

GallerySystem butterfly();
GallerySystem mueller_brown();
GallerySystem cubic(int n);
GallerySystem phase_field(int n_grid, double kappa);

GallerySystem by_name(const std::string& name);
std::vector<std::string> names();

// Periodic-field equivalence: max-norm match under some circular shift.
SamePredicate translation_predicate(int n_grid, double epsilon);

// Normalized maximum cross-correlation over all circular shifts.
SamePredicate correlation_predicate(int n_grid, double threshold);

// Allen-Cahn normalized field -(kappa * lap(phi) + phi - phi^3) on an
// n x n periodic grid with spacing 1/n.
Eigen::VectorXd phase_field_force(const Eigen::VectorXd& phi, int n_grid, double kappa);

// Stationary set of the cubic energy: every point of {-1,0,1}^n; the Morse
// index equals the number of zero coordinates.
std::vector<Eigen::VectorXd> cubic_stationary_points(int n);
int cubic_index(const Eigen::VectorXd& p);

}  // namespace hisd::gallery
