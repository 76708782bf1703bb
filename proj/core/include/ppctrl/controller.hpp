// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ppctrl/cost.hpp"
#include "ppctrl/dynamics.hpp"
#include "ppctrl/simulate.hpp"
#include "ppctrl/variational.hpp"

namespace ppctrl {

/// Everything a controller needs to run one task: the system, the cost, the
/// horizon split into K equal execution bins, the optimization window, and
/// the sampling budget per planning step.
struct ControlProblem {
  std::shared_ptr<const Dynamics> dynamics;
  HawkesModel process;
  CostSpec cost;
  Eigen::VectorXd x0;
  double horizon = 1.0;    // T
  int bins = 1;            // K
  double opt_window = 0.0; // lookahead per planning step; 0 means full horizon
  int samples = 1000;      // roll-outs per planning batch
  double dt_euler = 0.1;
  ClampBounds clamp;
  std::vector<int> controlled_dims;  // empty = every process dimension
  bool scale_base_only = false;
  int jobs = 0;

  double bin_width() const { return horizon / bins; }
  int lookahead_bins() const;
  std::vector<double> bin_edges() const;
  bool is_controlled(int dim) const;
  void validate() const;
};

struct BinDiagnostics {
  int bin = 0;
  double time = 0.0;
  double instantaneous_cost = 0.0;
  double ess = 0.0;  // NaN when the bin involved no sampling-based estimate
  double mean_multiplier = 1.0;
};

struct ControlRun {
  PiecewiseConstantPolicy executed;
  Trajectory realized;
  std::vector<BinDiagnostics> diagnostics;
  double total_state_cost = 0.0;
  double total_control_cost = 0.0;
  double initial_cost = 0.0;
  double terminal_cost = 0.0;
  // A failed bin aborts the run; diagnostics up to that bin are kept.
  bool failed = false;
  int failed_bin = -1;
  std::string error;

  // columns: bin,time,instantaneous_cost,ess,mean_multiplier
  void write_summary_csv(const std::string& path) const;
};

struct ControlRun;

/// Per-bin multiplier decision made from the realized state; the feedback
/// driver asks it once per bin. `so_far` exposes the partial realized run
/// (events and states up to the current bin) for budget-style rules.
struct BinDecision {
  Eigen::VectorXd multipliers;  // one per process dimension
  double ess = std::numeric_limits<double>::quiet_NaN();
};
using BinPolicyProvider = std::function<BinDecision(
    int bin, double t, const Eigen::VectorXd& x,
    const Eigen::VectorXd& excitation, const ControlRun& so_far)>;

/// Receding-horizon loop: at each bin, sample fresh uncontrolled roll-outs
/// from the realized state over the optimization window, estimate the
/// first-bin policy in closed form, execute it for one bin, observe, repeat.
ControlRun run_mpc(const ControlProblem& problem, std::uint64_t seed);

/// Estimate every bin once from roll-outs at time zero, then execute the
/// whole policy without feedback.
ControlRun run_openloop(const ControlProblem& problem, std::uint64_t seed);

// Realized run under a fixed policy (must span [0, T]); executed bin by bin
// with the same stream layout as every other controller.
ControlRun run_fixed_policy(const ControlProblem& problem,
                            const PiecewiseConstantPolicy& policy,
                            std::uint64_t seed);

ControlRun run_uncontrolled(const ControlProblem& problem, std::uint64_t seed);

// Generic feedback driver used by the heuristic and optimizer-in-the-loop
// controllers.
ControlRun run_feedback(const ControlProblem& problem,
                        const BinPolicyProvider& provider, std::uint64_t seed);

// The closed-form estimate for one planning window, exposed for open-loop
// use and for the static base-rate controller: samples `problem.samples`
// uncontrolled roll-outs from (x, excitation) at time t over
// [t, t + window], and estimates multipliers on the given bin edges.
PolicyEstimate plan_policy(const ControlProblem& problem, double t,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& excitation, double window,
                           std::span<const double> bin_edges,
                           std::uint64_t plan_seed);

}  // namespace ppctrl
