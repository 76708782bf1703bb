// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "ppctrl/drift_control.hpp"
#include "ppctrl/simulate.hpp"

using namespace ppctrl;

namespace {

// Scalar driftless diffusion dx = dw, no jumps.
std::vector<Trajectory> scalar_brownian_batch(double x0, int count,
                                              std::uint64_t seed) {
  AffineDynamics dyn(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1),
                     Eigen::VectorXd::Ones(1));
  const HawkesModel pp = HawkesModel::poisson(1, 0.0);
  SimulateOptions opts;
  opts.dt_euler = 0.05;
  return batch_sample(dyn, pp, Eigen::VectorXd::Constant(1, x0), 0.0, 1.0,
                      opts, count, seed, 0);
}

double terminal(const Trajectory& traj) {
  return traj.state(traj.points() - 1)[0];
}

}  // namespace

TEST_CASE("constant cost leaves only martingale noise") {
  const int count = 4000;
  const auto batch = scalar_brownian_batch(0.0, count, 21);
  const std::vector<double> costs(batch.size(), 3.0);
  const std::vector<double> edges = {0.0, 1.0};
  const Eigen::MatrixXd controls = estimate_drift_policy(
      batch, costs, 1.0, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
      edges);
  // u = sum of dw over samples / (count * T): 3 standard errors of zero.
  CHECK(std::abs(controls(0, 0)) < 3.0 / std::sqrt(double(count)));
}

TEST_CASE("symmetric terminal cost keeps the first bin near zero") {
  const int count = 4000;
  const auto batch = scalar_brownian_batch(0.0, count, 22);
  std::vector<double> costs(batch.size());
  for (std::size_t m = 0; m < batch.size(); ++m) {
    const double x = terminal(batch[m]);
    costs[m] = x * x;
  }
  const std::vector<double> edges = {0.0, 0.5, 1.0};
  const Eigen::MatrixXd controls = estimate_drift_policy(
      batch, costs, 1.0, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
      edges);
  CHECK(std::abs(controls(0, 0)) < 4.0 / std::sqrt(double(count)));
}

TEST_CASE("off-center start pulls the control toward the origin") {
  const int count = 6000;
  const auto batch = scalar_brownian_batch(1.0, count, 23);
  std::vector<double> costs(batch.size());
  for (std::size_t m = 0; m < batch.size(); ++m) {
    const double x = terminal(batch[m]);
    costs[m] = x * x;
  }
  const std::vector<double> edges = {0.0, 0.5, 1.0};
  const Eigen::MatrixXd controls = estimate_drift_policy(
      batch, costs, 1.0, Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1),
      edges);

  // Brute force on a two-step binomial discretization of the same system:
  // dw = +-sqrt(1/2) per half, x(T) = 1 + dw1 + dw2, weights exp(-x^2).
  const double h = 0.5;
  double num = 0.0, den = 0.0;
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      const double dw1 = s1 * std::sqrt(h);
      const double dw2 = s2 * std::sqrt(h);
      const double x = 1.0 + dw1 + dw2;
      const double w = std::exp(-x * x);
      num += w * dw1;
      den += w * h;
    }
  }
  const double brute_force = num / den;
  CHECK(brute_force < 0.0);
  CHECK(controls(0, 0) < 0.0);
}

TEST_CASE("singular noise covariance is rejected") {
  const auto batch = scalar_brownian_batch(0.0, 10, 24);
  const std::vector<double> costs(batch.size(), 1.0);
  const std::vector<double> edges = {0.0, 1.0};
  CHECK_THROWS_AS(
      estimate_drift_policy(batch, costs, 1.0, Eigen::MatrixXd::Ones(1, 1),
                            Eigen::MatrixXd::Zero(1, 1), edges),
      std::runtime_error);
}

TEST_CASE("two-dimensional gains solve the weighted normal equations") {
  // Independent 2-d Brownian motion, diagonal noise gain with distinct
  // scales; constant weights make the denominator exact.
  AffineDynamics dyn(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2),
                     (Eigen::VectorXd(2) << 1.0, 2.0).finished());
  const HawkesModel pp = HawkesModel::poisson(2, 0.0);
  SimulateOptions opts;
  opts.dt_euler = 0.1;
  const auto batch = batch_sample(dyn, pp, Eigen::VectorXd::Zero(2), 0.0, 1.0,
                                  opts, 2000, 25, 0);
  const std::vector<double> costs(batch.size(), 0.0);
  const std::vector<double> edges = {0.0, 1.0};
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
  g(0, 0) = 1.0;
  g(1, 1) = 2.0;
  const Eigen::MatrixXd controls = estimate_drift_policy(
      batch, costs, 1.0, Eigen::MatrixXd::Identity(2, 2), g, edges);
  CHECK(controls.rows() == 1);
  CHECK(controls.cols() == 2);
  // Component i has standard error (A_ii / B_ii) / sqrt(count * T).
  CHECK(std::abs(controls(0, 0)) < 3.0 / std::sqrt(2000.0));
  CHECK(std::abs(controls(0, 1)) < 6.0 / std::sqrt(2000.0));
}
