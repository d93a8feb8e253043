#include "hisd/landscape.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "hisd/log.hpp"

namespace hisd {

SamePredicate euclidean_predicate(double tol) {
  return [tol](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() <= tol;
  };
}

std::optional<int> check_whether_exist(const LandscapeGraph& graph, const Eigen::VectorXd& x,
                                       int index, const SamePredicate& predicate) {
  for (const SaddleRecord& s : graph.saddles)
    if (index == s.morse_index && predicate(x, s.position)) return s.id;
  return std::nullopt;
}

std::vector<Eigen::VectorXd> generate_perturbations(const Eigen::MatrixXd& basis,
                                                    PerturbationMethod method, double radius,
                                                    int count, Rng& rng) {
  const int d = static_cast<int>(basis.rows());
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(2 * count));
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd p = method == PerturbationMethod::Gaussian
                            ? rng.gaussian_vector(d)
                            : rng.uniform_vector(d, -1.0, 1.0);
    p *= radius / std::max(p.norm(), 1e-10);
    Eigen::VectorXd projected = basis * (basis.transpose() * p);
    projected *= radius / std::max(projected.norm(), 1e-10);
    out.push_back(projected);
    out.push_back(-projected);
  }
  return out;
}

LandscapeRunner::LandscapeRunner(SystemPtr system, LandscapeConfig landscape,
                                 SearchConfig search)
    : system_(std::move(system)),
      landscape_(std::move(landscape)),
      search_(std::move(search)),
      rng_(landscape_.rng_seed),
      max_index_(landscape_.max_index) {
  graph_.bound_min = Eigen::VectorXd();
  graph_.bound_max = Eigen::VectorXd();
}

void LandscapeRunner::merge_bounds(const SearchOutcome& outcome) {
  if (graph_.bound_min.size() == 0) {
    graph_.bound_min = outcome.bound_min;
    graph_.bound_max = outcome.bound_max;
  } else {
    graph_.bound_min = graph_.bound_min.cwiseMin(outcome.bound_min);
    graph_.bound_max = graph_.bound_max.cwiseMax(outcome.bound_max);
  }
}

void LandscapeRunner::run(const Eigen::VectorXd& x0) {
  begin_id_ = -1;
  continue_mode_ = false;
  landscape_run(x0);
}

void LandscapeRunner::restart_from_point(const Eigen::VectorXd& x, int max_index) {
  int history = max_index_;
  max_index_ = max_index;
  begin_id_ = -1;
  continue_mode_ = true;
  landscape_run(x);
  continue_mode_ = false;
  max_index_ = history;
}

void LandscapeRunner::restart_from_saddle(int begin_id, const Eigen::VectorXd& perturbation,
                                          int max_index) {
  if (begin_id < 0 || begin_id >= static_cast<int>(graph_.saddles.size()))
    throw std::out_of_range("Invalid saddle ID");
  Eigen::VectorXd x = graph_.saddles[static_cast<std::size_t>(begin_id)].position + perturbation;
  int history = max_index_;
  max_index_ = max_index;
  begin_id_ = begin_id;
  continue_mode_ = true;
  landscape_run(x);
  continue_mode_ = false;
  max_index_ = history;
}

void LandscapeRunner::landscape_run(const Eigen::VectorXd& x0) {
  rng_.reseed(landscape_.rng_seed);
  primary_ = x0;
  if (graph_.initial_point.size() == 0) graph_.initial_point = x0;
  if (graph_.bound_min.size() == 0) {
    graph_.bound_min = x0;
    graph_.bound_max = x0;
  }

  std::deque<QueueEntry> queue;
  if (!seed_search(x0, queue))
    throw LandscapeError("No more saddle points found in the search area!");
  bfs(queue);
}

SubspaceBasis LandscapeRunner::initial_subspace(const Eigen::VectorXd& x0, int k) {
  const int d = system_->dim;
  if (k == 0) return SubspaceBasis{Eigen::MatrixXd(d, 0), Eigen::VectorXd(0)};
  if (landscape_.initial_eigen_vectors) {
    const Eigen::MatrixXd& given = *landscape_.initial_eigen_vectors;
    if (given.rows() != d || given.cols() < k)
      throw LandscapeError("initial_eigen_vectors must be d x K with K >= target index");
    Eigen::MatrixXd v = given.leftCols(k);
    Rng& rng = rng_;
    orthonormalize(v, rng);
    return SubspaceBasis{v, Eigen::VectorXd::Zero(k)};
  }

  HessianOperator op = search_.hessian.exact
                           ? HessianOperator::exact(system_)
                           : HessianOperator::dimer(system_, search_.hessian.dimer_length);

  // Upward restarts target an index above the seed saddle's own: combine its
  // stored unstable directions with the softest stable ones.
  if (begin_id_ >= 0) {
    const SaddleRecord& base = graph_.saddles[static_cast<std::size_t>(begin_id_)];
    const int m = base.morse_index;
    if (k > m && d <= 2000) {
      Eigen::MatrixXd dense = op.dense(base.position);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (dense + dense.transpose()));
      Eigen::MatrixXd v(d, k);
      v.leftCols(m) = base.unstable_basis;
      int filled = m;
      for (int i = 0; i < d && filled < k; ++i) {
        if (es.eigenvalues()[i] <= search_.eigen.precision_tol) continue;
        v.col(filled++) = es.eigenvectors().col(i);
      }
      while (filled < k) v.col(filled++) = rng_.gaussian_vector(d);
      orthonormalize(v, rng_);
      return SubspaceBasis{v, Eigen::VectorXd::Zero(k)};
    }
    if (k > m) {
      Eigen::MatrixXd v(d, k);
      v.leftCols(m) = base.unstable_basis;
      for (int c = m; c < k; ++c) v.col(c) = rng_.gaussian_vector(d);
      orthonormalize(v, rng_);
      return SubspaceBasis{v, Eigen::VectorXd::Zero(k)};
    }
  }
  return give_initial_eigenvectors(op, x0, k, rng_);
}

std::optional<LandscapeRunner::QueueEntry> LandscapeRunner::register_outcome(
    const SearchOutcome& outcome, int parent) {
  merge_bounds(outcome);
  std::optional<int> existing =
      check_whether_exist(graph_, outcome.x_final, outcome.morse_index,
                          landscape_.same_judgement);
  if (existing) {
    SaddleRecord& record = graph_.saddles[static_cast<std::size_t>(*existing)];
    // Keep the position with the smaller field norm.
    double gold = system_->field(record.position).norm();
    double gnew = system_->field(outcome.x_final).norm();
    if (gold > gnew) record.position = outcome.x_final;
    bool new_edge =
        std::find(record.parents.begin(), record.parents.end(), parent) == record.parents.end();
    if (parent != -1 && new_edge) {
      record.parents.push_back(parent);
      DetailRecord detail;
      detail.child = record.id;
      detail.parent = parent;
      if (search_.save_trajectory) detail.trajectory = outcome.trajectory;
      detail.gnorm_history = outcome.gnorm_history;
      graph_.details.push_back(std::move(detail));
    }
    log::info("Search found an existing saddle point (id " + std::to_string(*existing) + ").");
    return std::nullopt;
  }

  SaddleRecord record;
  record.id = static_cast<int>(graph_.saddles.size());
  record.position = outcome.x_final;
  record.morse_index = outcome.morse_index;
  record.unstable_basis = outcome.unstable_basis;
  record.parents = {parent};
  graph_.saddles.push_back(record);

  DetailRecord detail;
  detail.child = record.id;
  detail.parent = parent;
  if (search_.save_trajectory) detail.trajectory = outcome.trajectory;
  detail.gnorm_history = outcome.gnorm_history;
  graph_.details.push_back(std::move(detail));

  return QueueEntry{record.id, record.position, record.morse_index, record.unstable_basis};
}

bool LandscapeRunner::seed_search(const Eigen::VectorXd& x0, std::deque<QueueEntry>& queue) {
  for (int k = max_index_; k >= 0; --k) {
    log::info((begin_id_ == -1 ? std::string("From initial point search index-")
                               : "From saddle point (ID-" + std::to_string(begin_id_) +
                                     ") search index-") +
              std::to_string(k) + ":");
    SearchConfig cfg = search_;
    cfg.saddle_index = k;
    cfg.primary_origin = primary_;
    SearchOutcome outcome = k > 0 ? hisd_search(*system_, cfg, x0, initial_subspace(x0, k), rng_)
                                  : sd_search(*system_, cfg, x0, rng_);
    if (!outcome.converged()) continue;

    std::optional<int> existing =
        check_whether_exist(graph_, outcome.x_final, outcome.morse_index,
                            landscape_.same_judgement);
    merge_bounds(outcome);
    if (existing) {
      SaddleRecord& record = graph_.saddles[static_cast<std::size_t>(*existing)];
      double gold = system_->field(record.position).norm();
      double gnew = system_->field(outcome.x_final).norm();
      if (gold > gnew) record.position = outcome.x_final;
      if (continue_mode_)
        queue.push_back(QueueEntry{record.id, record.position, record.morse_index,
                                   record.unstable_basis});
      bool new_edge = std::find(record.parents.begin(), record.parents.end(), begin_id_) ==
                      record.parents.end();
      if (begin_id_ != -1 && new_edge) {
        record.parents.push_back(begin_id_);
        DetailRecord detail;
        detail.child = record.id;
        detail.parent = begin_id_;
        if (search_.save_trajectory) detail.trajectory = outcome.trajectory;
        detail.gnorm_history = outcome.gnorm_history;
        graph_.details.push_back(std::move(detail));
      }
      log::info("Search found an existing saddle point (id " + std::to_string(*existing) + ").");
    } else {
      SaddleRecord record;
      record.id = static_cast<int>(graph_.saddles.size());
      record.position = outcome.x_final;
      record.morse_index = outcome.morse_index;
      record.unstable_basis = outcome.unstable_basis;
      record.parents = {begin_id_};
      graph_.saddles.push_back(record);
      DetailRecord detail;
      detail.child = record.id;
      detail.parent = begin_id_;
      if (search_.save_trajectory) detail.trajectory = outcome.trajectory;
      detail.gnorm_history = outcome.gnorm_history;
      graph_.details.push_back(std::move(detail));
      queue.push_back(QueueEntry{record.id, record.position, record.morse_index,
                                 record.unstable_basis});
    }
    if (outcome.morse_index > max_index_) {
      max_index_ = outcome.morse_index;
      log::warn("'MaxIndex' updated due to a larger saddle point index.");
    }
    return true;
  }
  return false;
}

void LandscapeRunner::bfs(std::deque<QueueEntry>& queue) {
  const int J = landscape_.max_index_gap;
  while (!queue.empty()) {
    QueueEntry head = queue.front();
    queue.pop_front();
    for (int j = head.index - 1; j >= std::max(0, head.index - J); --j) {
      if (j > 0) {
        // j-column combinations of the unstable basis in lexicographic order;
        // "min" keeps only the first one (the j most unstable directions).
        std::vector<std::vector<int>> combos;
        std::vector<int> combo(static_cast<std::size_t>(j));
        for (int i = 0; i < j; ++i) combo[static_cast<std::size_t>(i)] = i;
        while (true) {
          combos.push_back(combo);
          int i = j - 1;
          while (i >= 0 && combo[static_cast<std::size_t>(i)] == head.index - j + i) --i;
          if (i < 0) break;
          ++combo[static_cast<std::size_t>(i)];
          for (int t = i + 1; t < j; ++t)
            combo[static_cast<std::size_t>(t)] = combo[static_cast<std::size_t>(t - 1)] + 1;
        }
        if (landscape_.eigen_combination == EigenCombination::Min) combos.resize(1);

        for (const std::vector<int>& chosen : combos) {
          Eigen::MatrixXd v(system_->dim, j);
          for (int c = 0; c < j; ++c) v.col(c) = head.basis.col(chosen[static_cast<std::size_t>(c)]);
          SubspaceBasis basis{v, Eigen::VectorXd::Zero(j)};

          std::vector<Eigen::VectorXd> perturbations =
              generate_perturbations(head.basis, landscape_.perturbation_method,
                                     landscape_.perturbation_radius,
                                     landscape_.perturbation_number, rng_);
          for (const Eigen::VectorXd& per : perturbations) {
            log::info("From saddle point (index-" + std::to_string(head.index) + ", ID-" +
                      std::to_string(head.id) + ") search index-" + std::to_string(j) + ":");
            SearchConfig cfg = search_;
            cfg.saddle_index = j;
            cfg.primary_origin = primary_;
            SearchOutcome outcome = hisd_search(*system_, cfg, head.position + per, basis, rng_);
            if (!outcome.converged()) continue;
            if (outcome.morse_index > j) {
              log::info("Relaxed abort criteria produced a higher-index saddle; discarded.");
              merge_bounds(outcome);
              continue;
            }
            if (auto entry = register_outcome(outcome, head.id)) queue.push_back(*entry);
          }
        }
      } else {
        std::vector<Eigen::VectorXd> perturbations =
            generate_perturbations(head.basis, landscape_.perturbation_method,
                                   landscape_.perturbation_radius,
                                   landscape_.perturbation_number, rng_);
        for (const Eigen::VectorXd& per : perturbations) {
          log::info("From saddle point (index-" + std::to_string(head.index) + ", ID-" +
                    std::to_string(head.id) + ") search index-0:");
          SearchConfig cfg = search_;
          cfg.saddle_index = 0;
          cfg.primary_origin = primary_;
          SearchOutcome outcome = sd_search(*system_, cfg, head.position + per, rng_);
          if (!outcome.converged()) continue;
          if (outcome.morse_index > 0) {
            log::info("Relaxed abort criteria produced a higher-index saddle; discarded.");
            merge_bounds(outcome);
            continue;
          }
          if (auto entry = register_outcome(outcome, head.id)) queue.push_back(*entry);
        }
      }
    }
  }
}

LandscapeGraph run_landscape(SystemPtr system, const LandscapeConfig& landscape,
                             const SearchConfig& search, const Eigen::VectorXd& x0) {
  LandscapeRunner runner(std::move(system), landscape, search);
  runner.run(x0);
  return runner.graph();
}

}  // namespace hisd
