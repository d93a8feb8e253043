#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hisd/landscape.hpp"
#include "hisd/system.hpp"

namespace hisd {

// Saddle list as a versioned JSON array: id, position (full precision),
// morse_index, parents with the -1 sentinel omitted.
nlohmann::ordered_json saddles_to_json(const LandscapeGraph& graph);
void export_saddles_json(const LandscapeGraph& graph, const std::filesystem::path& path);

// Directed graph, one node per saddle labeled "id (index k)", rank groups by
// Morse index descending, one edge per recorded parent -> child connection.
std::string graph_to_dot(const LandscapeGraph& graph);
void export_dot(const LandscapeGraph& graph, const std::filesystem::path& path);

// One CSV per detail record under <dir>/trajectories, columns t, x1..xd.
// Falls back to two rows (parent position, child position) when detailed
// trajectories were not recorded.
void export_trajectories_csv(const LandscapeGraph& graph, const std::filesystem::path& dir);

// Gradient-norm history per search, files gnorm_<searchid>.csv.
void export_gnorm_csv(const LandscapeGraph& graph, const std::filesystem::path& dir);

// Energy samples over an axis-aligned grid covering [lo, hi] per axis:
// rows (x, E) in 1D and (x, y, E) in 2D. Requires an energy evaluator.
void export_grid_csv(const SystemSpec& spec, const Eigen::VectorXd& lo,
                     const Eigen::VectorXd& hi, int grid_n,
                     const std::filesystem::path& path);

// Versioned snapshot carrying the graph, manifest, and resolved config so
// that restart commands can resume headlessly.
nlohmann::ordered_json state_to_json(const LandscapeGraph& graph,
                                     const nlohmann::ordered_json& manifest);
void save_state(const LandscapeGraph& graph, const nlohmann::ordered_json& manifest,
                const std::filesystem::path& path);

struct LoadedState {
  LandscapeGraph graph;
  nlohmann::ordered_json manifest;
};

LoadedState load_state(const std::filesystem::path& path);

}  // namespace hisd
