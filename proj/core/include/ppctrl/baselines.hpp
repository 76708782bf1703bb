// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ppctrl/controller.hpp"
#include "ppctrl/policy.hpp"
#include "ppctrl/variational.hpp"

namespace ppctrl {

/// Expected cost of a candidate policy; `rollout_seed` lets optimizers use
/// common random numbers across candidates. Deterministic objectives may
/// ignore the seed.
using PolicyObjective =
    std::function<double(const PiecewiseConstantPolicy&, std::uint64_t rollout_seed)>;

struct OptimizerTrace {
  std::vector<double> best_cost_history;  // best-so-far, non-increasing
  Eigen::MatrixXd final_mean_log;         // sampling mean after the last update
};

struct CrossEntropyConfig {
  int population = 24;
  double elite_fraction = 0.25;
  double init_mean_log = 0.0;  // log-multiplier space, 0 = no control
  double init_std_log = 1.0;
  int max_iterations = 10;
  double tolerance = 1e-6;   // stop when the best cost stops improving
  double std_floor = 1e-9;   // distribution collapse terminates the search
  int jobs = 0;              // candidate evaluations run in parallel
  void validate() const;
  int elites() const;
};

/// Samples policies from a diagonal Gaussian in log-multiplier space,
/// refits mean/std to the elite fraction, and returns the best policy ever
/// evaluated. Only `free_dims` are optimized; other dimensions stay at one.
PiecewiseConstantPolicy cross_entropy(const PolicyObjective& objective,
                                      std::span<const double> bin_edges,
                                      int dims, std::span<const int> free_dims,
                                      const CrossEntropyConfig& config,
                                      const ClampBounds& clamp,
                                      std::uint64_t seed,
                                      OptimizerTrace* trace = nullptr);

struct FiniteDifferenceConfig {
  double perturbation_std = 0.1;  // log-multiplier space
  double step_size = 0.5;
  int iterations = 8;
  int perturbations = 16;
  int jobs = 0;
  void validate() const;
};

/// Gradient estimate by least squares on (delta-u, delta-cost) pairs from
/// random log-space perturbations, followed by a fixed-size descent step;
/// returns the best policy ever evaluated.
PiecewiseConstantPolicy finite_difference(const PolicyObjective& objective,
                                          const PiecewiseConstantPolicy& start,
                                          std::span<const int> free_dims,
                                          const FiniteDifferenceConfig& config,
                                          const ClampBounds& clamp,
                                          std::uint64_t seed,
                                          OptimizerTrace* trace = nullptr);

struct GreedyConfig {
  double threshold_factor = 2.0;  // act when cost exceeds factor * reference
  int observations = 10;          // state-cost checks, evenly spread over [0, T]
  double boost = 5.0;             // multiplier applied in the helpful direction
  double budget = std::numeric_limits<double>::infinity();  // pathwise control cost
  void validate() const;
};

/// Threshold heuristic: at each observation time, if the running state cost
/// exceeds threshold_factor times the reference cost, boost dimensions whose
/// activity helps and damp those whose activity hurts, until the cumulative
/// pathwise control cost exhausts the budget.
ControlRun greedy_controller(const ControlProblem& problem,
                             const GreedyConfig& config, double reference_cost,
                             std::uint64_t seed);

/// Static base-rate controller: one multiplier per dimension from the
/// closed-form one-bin estimate at time zero, applied to the base rate only
/// and never updated.
ControlRun base_intensity(const ControlProblem& problem, std::uint64_t seed);

// Shared by the study harness: expected-cost objective for CE/FD built from
// controlled roll-outs (state cost plus gamma times pathwise control cost).
PolicyObjective make_rollout_objective(const ControlProblem& problem, double t0,
                                       double t1, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& excitation,
                                       int rollouts);

ControlRun run_ce_mpc(const ControlProblem& problem,
                      const CrossEntropyConfig& config, int rollouts,
                      std::uint64_t seed);
ControlRun run_ce_openloop(const ControlProblem& problem,
                           const CrossEntropyConfig& config, int rollouts,
                           std::uint64_t seed);
ControlRun run_fd_mpc(const ControlProblem& problem,
                      const FiniteDifferenceConfig& config, int rollouts,
                      std::uint64_t seed);
ControlRun run_fd_openloop(const ControlProblem& problem,
                           const FiniteDifferenceConfig& config, int rollouts,
                           std::uint64_t seed);

}  // namespace ppctrl
