// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ppctrl/event_sequence.hpp"

namespace ppctrl {

/// One sampled roll-out: the time grid (Euler points plus exact event
/// times), the state at every grid point (post-jump at event times, so cost
/// quadrature sees jumps), the Wiener increments of every substep, and the
/// events that drove the jumps.
struct Trajectory {
  int state_dim = 0;
  std::vector<double> times;   // strictly increasing
  std::vector<double> states;  // state_dim x times.size(), time-major
  std::vector<double> noise;   // state_dim x (times.size() - 1), time-major
  EventSequence events;
  Eigen::VectorXd init_excitation;  // excitation at t_begin; empty means zero

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  int points() const { return static_cast<int>(times.size()); }

  Eigen::Map<const Eigen::VectorXd> state(int idx) const {
    return {states.data() + static_cast<std::ptrdiff_t>(idx) * state_dim,
            state_dim};
  }
  Eigen::Map<const Eigen::VectorXd> noise_increment(int substep) const {
    return {noise.data() + static_cast<std::ptrdiff_t>(substep) * state_dim,
            state_dim};
  }

  // columns: time, dim, state
  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;
};

}  // namespace ppctrl
