// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/drift_control.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppctrl {

Eigen::MatrixXd estimate_drift_policy(std::span<const Trajectory> trajectories,
                                      std::span<const double> costs,
                                      double gamma,
                                      const Eigen::MatrixXd& control_gain,
                                      const Eigen::MatrixXd& noise_gain,
                                      std::span<const double> bin_edges) {
  if (trajectories.empty() || trajectories.size() != costs.size()) {
    throw std::invalid_argument("estimate_drift_policy: bad batch");
  }
  if (!(gamma > 0)) throw std::invalid_argument("estimate_drift_policy: gamma");
  const int bins = static_cast<int>(bin_edges.size()) - 1;
  if (bins < 1) throw std::invalid_argument("estimate_drift_policy: no bins");
  const int state_dim = static_cast<int>(control_gain.rows());
  const int control_dim = static_cast<int>(control_gain.cols());
  if (noise_gain.rows() != state_dim || noise_gain.cols() != state_dim) {
    throw std::invalid_argument("estimate_drift_policy: noise gain shape");
  }

  const Eigen::MatrixXd sigma = noise_gain * noise_gain.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma);
  if (!lu.isInvertible()) {
    throw std::runtime_error("estimate_drift_policy: singular noise covariance");
  }
  const Eigen::MatrixXd sigma_inv = lu.inverse();
  // A dw picks up the weighted noise; B dt accumulates the quadratic term.
  const Eigen::MatrixXd a_map = control_gain.transpose() * sigma_inv * noise_gain;
  const Eigen::MatrixXd b_map = control_gain.transpose() * sigma_inv * control_gain;

  double min_cost = costs[0];
  for (double s : costs) min_cost = std::min(min_cost, s);

  std::vector<Eigen::VectorXd> numer(static_cast<std::size_t>(bins),
                                     Eigen::VectorXd::Zero(control_dim));
  std::vector<double> time_mass(static_cast<std::size_t>(bins), 0.0);

  for (std::size_t m = 0; m < trajectories.size(); ++m) {
    const Trajectory& traj = trajectories[m];
    if (traj.state_dim != state_dim) {
      throw std::invalid_argument("estimate_drift_policy: trajectory state dim");
    }
    if (traj.noise.size() !=
        static_cast<std::size_t>(traj.points() - 1) * state_dim) {
      throw std::invalid_argument("estimate_drift_policy: missing noise record");
    }
    const double w = std::exp(-(costs[m] - min_cost) / gamma);
    for (int p = 0; p + 1 < traj.points(); ++p) {
      const double t = traj.times[static_cast<std::size_t>(p)];
      if (t < bin_edges.front() || t >= bin_edges.back()) continue;
      int k = static_cast<int>((std::upper_bound(bin_edges.begin(),
                                                 bin_edges.end(), t) -
                                bin_edges.begin())) -
              1;
      const double h = traj.times[static_cast<std::size_t>(p) + 1] - t;
      numer[static_cast<std::size_t>(k)].noalias() +=
          w * (a_map * traj.noise_increment(p));
      time_mass[static_cast<std::size_t>(k)] += w * h;
    }
  }

  Eigen::MatrixXd controls(bins, control_dim);
  for (int k = 0; k < bins; ++k) {
    const Eigen::MatrixXd denom = b_map * time_mass[static_cast<std::size_t>(k)];
    Eigen::FullPivLU<Eigen::MatrixXd> solver(denom);
    if (!solver.isInvertible()) {
      throw std::runtime_error("estimate_drift_policy: singular denominator in bin " +
                               std::to_string(k));
    }
    controls.row(k) = solver.solve(numer[static_cast<std::size_t>(k)]).transpose();
  }
  return controls;
}

}  // namespace ppctrl
