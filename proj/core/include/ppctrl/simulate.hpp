// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ppctrl/cost.hpp"
#include "ppctrl/dynamics.hpp"
#include "ppctrl/policy.hpp"
#include "ppctrl/thinning.hpp"
#include "ppctrl/trajectory.hpp"

namespace ppctrl {

struct SimulateOptions {
  double dt_euler = 0.1;
  const PiecewiseConstantPolicy* policy = nullptr;
  bool scale_base_only = false;
  const Eigen::VectorXd* init_excitation = nullptr;
};

struct SimulationError : std::runtime_error {
  SimulationError(const std::string& what, double when, int which = -1)
      : std::runtime_error(what), time(when), sample(which) {}
  double time;
  int sample;
};

/// Samples the events by thinning, then advances the state by Euler steps
/// split exactly at event times; jumps are applied atomically at those
/// instants using the pre-jump state. Two sub-streams are derived from
/// `seed` (events, then noise), so the draw sequences are independent of
/// each other.
Trajectory simulate_trajectory(const Dynamics& dynamics,
                               const HawkesModel& process,
                               const Eigen::VectorXd& x0, double t0, double t1,
                               const SimulateOptions& opts, std::uint64_t seed);

// Buffer-reusing variant for hot loops.
void simulate_trajectory_into(Trajectory& out, const Dynamics& dynamics,
                              const HawkesModel& process,
                              const Eigen::VectorXd& x0, double t0, double t1,
                              const SimulateOptions& opts, std::uint64_t seed);

/// Roll-out reduced to what planners need: the state cost accumulated on
/// the fly, the events, and the final state. The stepping arithmetic is
/// shared with simulate_trajectory (same streams, same order), so for equal
/// seeds the cost equals state_cost() of the recorded trajectory bit for
/// bit, without materializing the path.
struct ScoredRollout {
  double cost = 0.0;
  EventSequence events;
  Eigen::VectorXd final_state;
  std::vector<Event> merged_scratch;  // reused between calls
};
void simulate_scored(ScoredRollout& out, const Dynamics& dynamics,
                     const HawkesModel& process, const Eigen::VectorXd& x0,
                     double t0, double t1, const SimulateOptions& opts,
                     const CostSpec& spec, std::uint64_t seed);

/// `count` independent roll-outs; sample m uses the stream
/// derive_seed(master_seed, "sample", m), so the result is reproducible and
/// identical for any degree of parallelism.
std::vector<Trajectory> batch_sample(const Dynamics& dynamics,
                                     const HawkesModel& process,
                                     const Eigen::VectorXd& x0, double t0,
                                     double t1, const SimulateOptions& opts,
                                     int count, std::uint64_t master_seed,
                                     int jobs = 0);

}  // namespace ppctrl
