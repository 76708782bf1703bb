// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <span>

#include "ppctrl/trajectory.hpp"

namespace ppctrl {

/// Per-bin control vectors for the drift-affine problem
/// dx = (f(x) + G u) dt + g dw with uncontrolled jumps: the cost-weighted
/// stochastic integral of G' inv(g g') g dw over each bin, divided by the
/// weighted time integral of G' inv(g g') G, evaluated on recorded noise
/// increments. Returns K x control_dim.
Eigen::MatrixXd estimate_drift_policy(std::span<const Trajectory> trajectories,
                                      std::span<const double> costs,
                                      double gamma,
                                      const Eigen::MatrixXd& control_gain,
                                      const Eigen::MatrixXd& noise_gain,
                                      std::span<const double> bin_edges);

}  // namespace ppctrl
