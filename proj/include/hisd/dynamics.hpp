#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hisd/eigensolvers.hpp"
#include "hisd/system.hpp"

namespace hisd {

enum class Acceleration { None, HeavyBall, Nesterov };
enum class EigenMethod { Auto, Euler, Power, Lobpcg };
enum class SearchStatus { Converged, Diverged, MaxIterNoConvergence };

struct EigenSettings {
  EigenMethod method = EigenMethod::Auto;  // Auto: lobpcg for gradient, power otherwise
  int max_iter = 10;                       // substeps / inner iterations
  double step_size = 1e-2;                 // gamma
  double precision_tol = 1e-5;
  bool eigvec_unified = false;
  double lobpcg_step_tol = 1e-8;
};

struct HessianSettings {
  bool exact = false;
  double dimer_length = 1e-5;
};

struct SearchConfig {
  int saddle_index = 0;  // k
  double time_step = 1e-2;
  int max_iter = 10000;
  double tolerance = 1e-6;
  double search_area = 1000.0;
  bool bb_step = false;
  double bb_cap = 0.5;
  Acceleration acceleration = Acceleration::None;
  double momentum = 0.0;  // heavy-ball alpha
  int nesterov_choice = 1;
  std::optional<int> nesterov_restart;
  bool verbose = false;
  int report_interval = 100;
  bool save_trajectory = true;
  EigenSettings eigen;
  HessianSettings hessian;
  // Divergence is measured from the primary initial point of the whole
  // landscape run, not the per-search start.
  std::optional<Eigen::VectorXd> primary_origin;
  std::ostream* log_stream = nullptr;  // defaults to stdout when verbose
};

struct Trajectory {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> times;  // cumulative pseudo-time, times[0] = 0
};

struct SearchOutcome {
  SearchStatus status = SearchStatus::MaxIterNoConvergence;
  Eigen::VectorXd x_final;
  int morse_index = -1;
  bool degenerate = false;
  IndexReport index_report;
  int iterations = 0;
  std::optional<Trajectory> trajectory;
  std::vector<double> gnorm_history;
  std::vector<double> cumulative_steps;
  Eigen::MatrixXd unstable_basis;
  long long loop_hvp_evals = 0;  // hvp count before the final index check
  Eigen::VectorXd bound_min, bound_max;
  std::string note;

  bool converged() const { return status == SearchStatus::Converged; }
};

// Capped absolute BB2 step, min(tau/|g|, |<dx,dg>/<dg,dg>|); falls back to
// fixed_step when dg vanishes.
double bb2_step(const Eigen::VectorXd& dx, const Eigen::VectorXd& dg,
                const Eigen::VectorXd& g, double tau, double fixed_step);

Eigen::VectorXd accelerate_heavyball(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                                     const Eigen::VectorXd& r, double dt, double alpha);

// Momentum schedule for the Nesterov variant. Schedule 1 is (n-base)/(n-base+3)
// with the base moved to every restart multiple; schedule 2 follows the theta
// recursion, reset to its post-initial value on restart.
class NesterovSchedule {
 public:
  NesterovSchedule(int choice, std::optional<int> restart);
  double gamma(int n);        // momentum coefficient for iteration n (1-based)
  void after_iteration(int n);  // applies the restart reset when n hits a multiple

 private:
  int choice_;
  std::optional<int> restart_;
  int base_ = 0;
  double theta_ = 1.0;
};

struct NesterovStep {
  Eigen::VectorXd w;
  double gamma = 0.0;
};

NesterovStep accelerate_nesterov(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                                 int n, NesterovSchedule& schedule);

// Index-k saddle search (k >= 1) from x0 with initial subspace V0.
SearchOutcome hisd_search(const SystemSpec& spec, const SearchConfig& cfg,
                          const Eigen::VectorXd& x0, const SubspaceBasis& V0, Rng& rng);

// Index-0 search: plain (optionally accelerated) descent of the normalized
// field, no subspace maintenance and no Hessian products in the loop.
SearchOutcome sd_search(const SystemSpec& spec, const SearchConfig& cfg,
                        const Eigen::VectorXd& x0, Rng& rng);

}  // namespace hisd
