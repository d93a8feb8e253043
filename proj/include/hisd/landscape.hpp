#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hisd/dynamics.hpp"

namespace hisd {

// Vertex of the landscape graph. Parent -1 marks "from the initial point".
struct SaddleRecord {
  int id = 0;
  Eigen::VectorXd position;
  int morse_index = 0;
  Eigen::MatrixXd unstable_basis;  // d x morse_index in the non-degenerate case
  std::vector<int> parents;
};

struct DetailRecord {
  int child = -1;
  int parent = -1;
  std::optional<Trajectory> trajectory;
  std::vector<double> gnorm_history;
};

struct LandscapeGraph {
  std::vector<SaddleRecord> saddles;
  std::vector<DetailRecord> details;
  Eigen::VectorXd initial_point;
  Eigen::VectorXd bound_min, bound_max;
};

using SamePredicate = std::function<bool(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

SamePredicate euclidean_predicate(double tol);

enum class PerturbationMethod { Uniform, Gaussian };
enum class EigenCombination { All, Min };

struct LandscapeConfig {
  int max_index = 2;      // K
  int max_index_gap = 1;  // J
  SamePredicate same_judgement = euclidean_predicate(1e-3);
  PerturbationMethod perturbation_method = PerturbationMethod::Uniform;
  double perturbation_radius = 1e-2;
  int perturbation_number = 2;
  EigenCombination eigen_combination = EigenCombination::All;
  std::optional<Eigen::MatrixXd> initial_eigen_vectors;  // d x K
  std::uint64_t rng_seed = 1121;
};

// First id (ascending) whose record matches the predicate with equal index.
std::optional<int> check_whether_exist(const LandscapeGraph& graph, const Eigen::VectorXd& x,
                                       int index, const SamePredicate& predicate);

// Draws `count` full-space samples, projects them onto the unstable subspace,
// rescales to `radius`, and emits each with both signs (2*count vectors).
std::vector<Eigen::VectorXd> generate_perturbations(const Eigen::MatrixXd& basis,
                                                    PerturbationMethod method, double radius,
                                                    int count, Rng& rng);

class LandscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Owns the graph state across the initial run and restarts.
class LandscapeRunner {
 public:
  LandscapeRunner(SystemPtr system, LandscapeConfig landscape, SearchConfig search);

  const LandscapeGraph& graph() const { return graph_; }
  LandscapeGraph& graph() { return graph_; }
  int max_index() const { return max_index_; }

  // Seed search from x0 followed by the BFS downward sweep.
  void run(const Eigen::VectorXd& x0);

  // Re-runs seeding and BFS from a new point against the existing graph.
  void restart_from_point(const Eigen::VectorXd& x, int max_index);

  // Seeds from a stored saddle plus a user perturbation; the found saddle
  // records begin_id as parent. Throws std::out_of_range("Invalid saddle ID").
  void restart_from_saddle(int begin_id, const Eigen::VectorXd& perturbation, int max_index);

 private:
  struct QueueEntry {
    int id;
    Eigen::VectorXd position;
    int index;
    Eigen::MatrixXd basis;
  };

  void landscape_run(const Eigen::VectorXd& x0);
  bool seed_search(const Eigen::VectorXd& x0, std::deque<QueueEntry>& queue);
  void bfs(std::deque<QueueEntry>& queue);
  SubspaceBasis initial_subspace(const Eigen::VectorXd& x0, int k);
  // Registers a converged outcome; returns the queue entry when it is novel.
  std::optional<QueueEntry> register_outcome(const SearchOutcome& outcome, int parent);
  void merge_bounds(const SearchOutcome& outcome);

  SystemPtr system_;
  LandscapeConfig landscape_;
  SearchConfig search_;
  LandscapeGraph graph_;
  Rng rng_;
  int max_index_;
  int begin_id_ = -1;
  bool continue_mode_ = false;
  Eigen::VectorXd primary_;
};

// One-shot construction: seed from x0, BFS downward, return the graph.
LandscapeGraph run_landscape(SystemPtr system, const LandscapeConfig& landscape,
                             const SearchConfig& search, const Eigen::VectorXd& x0);

}  // namespace hisd
