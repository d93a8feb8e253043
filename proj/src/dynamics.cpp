#include "hisd/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <stdexcept>

#include "hisd/log.hpp"

namespace hisd {

double bb2_step(const Eigen::VectorXd& dx, const Eigen::VectorXd& dg,
                const Eigen::VectorXd& g, double tau, double fixed_step) {
  double denom = dg.squaredNorm();
  if (denom <= 0.0 || !std::isfinite(denom)) return fixed_step;
  double bb = std::abs(dx.dot(dg) / denom);
  if (bb == 0.0) return fixed_step;
  double gnorm = g.norm();
  if (gnorm == 0.0) return bb;
  return std::min(tau / gnorm, bb);
}

Eigen::VectorXd accelerate_heavyball(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                                     const Eigen::VectorXd& r, double dt, double alpha) {
  return x + dt * r + alpha * (x - x_prev);
}

NesterovSchedule::NesterovSchedule(int choice, std::optional<int> restart)
    : choice_(choice), restart_(restart) {}

double NesterovSchedule::gamma(int n) {
  if (choice_ == 2) {
    double theta_next = (1.0 + std::sqrt(1.0 + 4.0 * theta_ * theta_)) / 2.0;
    double g = (theta_ - 1.0) / theta_next;
    theta_ = theta_next;
    return g;
  }
  return static_cast<double>(n - base_) / static_cast<double>(n - base_ + 3);
}

void NesterovSchedule::after_iteration(int n) {
  if (!restart_ || *restart_ <= 0) return;
  if (n % *restart_ != 0) return;
  if (choice_ == 2) {
    // Post-initial value of the recursion.
    theta_ = (1.0 + std::sqrt(5.0)) / 2.0;
  } else {
    base_ = n;
  }
}

NesterovStep accelerate_nesterov(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prev,
                                 int n, NesterovSchedule& schedule) {
  double g = schedule.gamma(n);
  return NesterovStep{x + g * (x - x_prev), g};
}

namespace {

struct EigenUpdater {
  const HessianOperator& op;
  const EigenSettings& settings;
  bool is_gradient;
  Rng& rng;

  EigenUpdateResult operator()(const Eigen::VectorXd& x, const SubspaceBasis& basis) const {
    EigenMethod method = settings.method;
    if (method == EigenMethod::Auto)
      method = is_gradient ? EigenMethod::Lobpcg : EigenMethod::Power;
    switch (method) {
      case EigenMethod::Euler:
        return euler_update(op, x, basis, settings.step_size, settings.max_iter, is_gradient,
                            settings.precision_tol, rng);
      case EigenMethod::Power:
        return power_update(op, x, basis, settings.step_size, settings.max_iter,
                            settings.precision_tol, rng);
      case EigenMethod::Lobpcg:
        return lobpcg_smallest(op, x, basis, settings.max_iter, settings.lobpcg_step_tol,
                               settings.precision_tol, settings.step_size, rng);
      case EigenMethod::Auto: break;
    }
    throw std::logic_error("unreachable eigen method");
  }
};

void report_line(const SearchConfig& cfg, int iteration, double gnorm) {
  if (!cfg.verbose || iteration % cfg.report_interval != 0) return;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "Iteration: %d|| Norm of gradient: %.6f", iteration, gnorm);
  std::ostream& os = cfg.log_stream ? *cfg.log_stream : std::cout;
  os << buf << "\n";
}

void finalize_converged(SearchOutcome& out, IndexReport report, const SearchConfig& cfg) {
  out.status = SearchStatus::Converged;
  out.morse_index = report.neg;
  out.degenerate = report.zero > 0;
  if (out.degenerate) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Degenerate saddle point detected under precision tol=%g: spectrum "
                  "negative=%d, zero=%d, positive=%d.",
                  cfg.eigen.precision_tol, report.neg, report.zero, report.pos);
    log::warn(buf);
  } else {
    log::info("Non-degenerate saddle point identified: Morse index =" +
              std::to_string(report.neg) + " (number of negative eigenvalues).");
  }
  if (cfg.eigen.eigvec_unified && report.neg > 1)
    report.neg_vectors = canonicalize_by_multiplicity(report.spectrum.head(report.neg),
                                                      report.neg_vectors,
                                                      cfg.eigen.precision_tol);
  out.unstable_basis = report.neg_vectors;
  out.index_report = std::move(report);
}

SearchOutcome run_search(const SystemSpec& spec, const SearchConfig& cfg,
                         const Eigen::VectorXd& x0, SubspaceBasis V, Rng& rng) {
  const int k = cfg.saddle_index;
  const int d = spec.dim;
  if (x0.size() != d) throw std::invalid_argument("search: initial point has wrong dimension");
  if (!x0.allFinite()) throw std::invalid_argument("search: initial point must be finite");

  SystemPtr shared(&spec, [](const SystemSpec*) {});  // non-owning view
  HessianOperator op = cfg.hessian.exact ? HessianOperator::exact(shared)
                                         : HessianOperator::dimer(shared, cfg.hessian.dimer_length);
  EigenUpdater update{op, cfg.eigen, spec.is_gradient, rng};

  if (k > 0) {
    if (V.k() != k) throw std::invalid_argument("search: V0 must have k columns");
    double ortho = (V.V.transpose() * V.V - Eigen::MatrixXd::Identity(k, k))
                       .cwiseAbs()
                       .maxCoeff();
    if (ortho > 1e-8) orthonormalize(V.V, rng);
  }

  const Eigen::VectorXd origin = cfg.primary_origin.value_or(x0);

  SearchOutcome out;
  out.bound_min = x0;
  out.bound_max = x0;

  Eigen::VectorXd x = x0;
  Eigen::VectorXd x_pre = x0;
  Eigen::VectorXd g = spec.field(x);
  Eigen::VectorXd g_pre = g;
  double dt = cfg.time_step;

  out.gnorm_history.push_back(g.norm());
  out.cumulative_steps.push_back(0.0);
  if (cfg.save_trajectory) {
    out.trajectory = Trajectory{};
    out.trajectory->points.push_back(x);
    out.trajectory->times.push_back(0.0);
  }

  const long long hvp_start = spec.counter->hvp_evals.load(std::memory_order_relaxed);

  NesterovSchedule schedule(cfg.nesterov_choice, cfg.nesterov_restart);
  auto reflect = [&](const Eigen::VectorXd& grad) -> Eigen::VectorXd {
    if (k == 0) return grad;
    return grad - 2.0 * (V.V * (V.V.transpose() * grad));
  };

  bool index_flag = false;
  bool broke = false;
  int j = 0;
  for (j = 1; j <= cfg.max_iter; ++j) {
    if (cfg.bb_step && j > 1) dt = bb2_step(x - x_pre, g - g_pre, g, cfg.bb_cap, cfg.time_step);
    out.cumulative_steps.push_back(out.cumulative_steps.back() + dt);

    Eigen::VectorXd x_next;
    if (cfg.acceleration == Acceleration::Nesterov) {
      NesterovStep step = accelerate_nesterov(x, x_pre, j, schedule);
      Eigen::VectorXd gw = spec.field(step.w);
      x_next = step.w - dt * reflect(gw);
    } else {
      x_next = accelerate_heavyball(x, x_pre, -reflect(g), dt,
                                    cfg.acceleration == Acceleration::HeavyBall ? cfg.momentum
                                                                                : 0.0);
    }
    x_pre = x;
    x = x_next;
    if (cfg.bb_step) g_pre = g;

    if (k > 0) {
      EigenUpdateResult r = update(x, V);
      V = std::move(r.basis);
      index_flag = r.at_least_index_k;
    }
    g = spec.field(x);
    double gnorm = g.norm();

    report_line(cfg, j, gnorm);

    if (!std::isfinite(gnorm) || !x.allFinite()) {
      out.status = SearchStatus::Diverged;
      out.note = "field evaluation left the domain";
      out.x_final = x;
      out.iterations = j;
      log::warn("Iteration diverged: non-finite field value. Skipping to next search.");
      return out;
    }
    if (cfg.save_trajectory) {
      out.trajectory->points.push_back(x);
      out.trajectory->times.push_back(out.cumulative_steps.back());
    }
    if ((x - origin).norm() > cfg.search_area) {
      out.status = SearchStatus::Diverged;
      out.x_final = x;
      out.iterations = j;
      out.gnorm_history.push_back(gnorm);
      log::warn("Iteration diverged: search point exceeds feasible region. Skipping to next search.");
      return out;
    }
    out.bound_min = out.bound_min.cwiseMin(x);
    out.bound_max = out.bound_max.cwiseMax(x);
    out.gnorm_history.push_back(gnorm);

    if (gnorm < cfg.tolerance) {
      if (k == 0 || index_flag) {
        broke = true;
        break;
      }
      // Run the trusted check only on the first sub-tolerance step.
      std::size_t h = out.gnorm_history.size();
      bool first_drop = j == 1 || out.gnorm_history[h - 2] >= cfg.tolerance;
      if (first_drop && check_index_k(op, x, k, cfg.eigen.precision_tol)) {
        broke = true;
        break;
      }
    }
    if (cfg.acceleration == Acceleration::Nesterov) schedule.after_iteration(j);
  }
  if (!broke) j = cfg.max_iter;

  out.x_final = x;
  out.iterations = j;
  out.loop_hvp_evals = spec.counter->hvp_evals.load(std::memory_order_relaxed) - hvp_start;

  if (!broke) {
    if (out.gnorm_history.back() >= cfg.tolerance) {
      out.status = SearchStatus::MaxIterNoConvergence;
      log::warn("Iteration not converged: maximum iterations reached without convergence. "
                "Skipping to next search.");
      return out;
    }
    // Sub-tolerance at exhaustion: the index gate may have been starved by
    // eigenvalue approximation error, so consult the full spectrum.
    IndexReport report = find_index(op, x, cfg.eigen.precision_tol);
    if (report.neg + report.zero >= k) {
      out.note = "qualifying saddle reached at max_iter without an index-gate report";
      log::info("Due to eigenvalue approximation inaccuracies during iterations, the search "
                "trajectory may reach a qualifying saddle point without triggering a report.");
      finalize_converged(out, std::move(report), cfg);
      return out;
    }
    out.status = SearchStatus::MaxIterNoConvergence;
    log::warn("Iteration not converged: maximum iterations reached without convergence. "
              "Skipping to next search.");
    return out;
  }

  finalize_converged(out, find_index(op, x, cfg.eigen.precision_tol), cfg);
  return out;
}

}  // namespace

SearchOutcome hisd_search(const SystemSpec& spec, const SearchConfig& cfg,
                          const Eigen::VectorXd& x0, const SubspaceBasis& V0, Rng& rng) {
  if (cfg.saddle_index < 1)
    throw std::invalid_argument("hisd_search: saddle_index must be at least 1");
  return run_search(spec, cfg, x0, V0, rng);
}

SearchOutcome sd_search(const SystemSpec& spec, const SearchConfig& cfg,
                        const Eigen::VectorXd& x0, Rng& rng) {
  if (cfg.saddle_index != 0)
    throw std::invalid_argument("sd_search: saddle_index must be 0");
  SubspaceBasis empty{Eigen::MatrixXd(spec.dim, 0), Eigen::VectorXd(0)};
  return run_search(spec, cfg, x0, empty, rng);
}

}  // namespace hisd
