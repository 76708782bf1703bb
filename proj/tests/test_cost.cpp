// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "ppctrl/cost.hpp"
#include "ppctrl/simulate.hpp"

using namespace ppctrl;

namespace {

Trajectory constant_trajectory(const Eigen::VectorXd& value,
                               const std::vector<double>& times) {
  Trajectory traj;
  traj.state_dim = static_cast<int>(value.size());
  traj.times = times;
  for (std::size_t p = 0; p < times.size(); ++p) {
    traj.states.insert(traj.states.end(), value.data(),
                       value.data() + value.size());
  }
  traj.events.reset(static_cast<int>(value.size()), times.front(), times.back());
  return traj;
}

}  // namespace

TEST_CASE("least squares cost vanishes exactly on target") {
  CostSpec spec;
  spec.kind = CostKind::LeastSquares;
  spec.target = Eigen::VectorXd::Constant(3, 1.5);
  spec.gamma = 1.0;
  const Trajectory traj =
      constant_trajectory(spec.target, {0.0, 0.5, 1.0, 1.5, 2.0});
  CHECK(state_cost(spec, traj) == 0.0);
}

TEST_CASE("least squares constants") {
  CostSpec spec;
  spec.kind = CostKind::LeastSquares;
  spec.target = Eigen::VectorXd::Constant(1, 1.0);
  spec.gamma = 1.0;
  const Trajectory traj = constant_trajectory(Eigen::VectorXd::Zero(1),
                                              {0.0, 0.5, 1.0, 1.5, 2.0});
  // running integral 2, terminal 1
  CHECK(state_cost(spec, traj) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("broadcast rank cost of a constant rank") {
  CostSpec spec;
  spec.kind = CostKind::BroadcastRank;
  spec.gamma = 1.0;
  const Trajectory traj = constant_trajectory(Eigen::VectorXd::Ones(1),
                                              {0.0, 2.5, 5.0, 7.5, 10.0});
  CHECK(state_cost(spec, traj) == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("influence cost is the negative total opinion") {
  CostSpec spec;
  spec.kind = CostKind::InfluenceMax;
  spec.gamma = 1.0;
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const Trajectory traj = constant_trajectory(x, {0.0, 1.0});
  CHECK(state_cost(spec, traj) == doctest::Approx(-6.0).epsilon(1e-15));
}

TEST_CASE("dimension mismatch is rejected") {
  CostSpec spec;
  spec.kind = CostKind::LeastSquares;
  spec.target = Eigen::VectorXd::Zero(2);
  spec.gamma = 1.0;
  const Trajectory traj = constant_trajectory(Eigen::VectorXd::Zero(3), {0.0, 1.0});
  CHECK_THROWS_AS(state_cost(spec, traj), std::invalid_argument);
}

TEST_CASE("translation covariance with representable shifts") {
  CostSpec spec;
  spec.kind = CostKind::LeastSquares;
  spec.target = Eigen::VectorXd::Constant(2, 1.25);
  spec.gamma = 1.0;
  Eigen::VectorXd x(2);
  x << 0.5, -0.75;
  const Trajectory traj = constant_trajectory(x, {0.0, 1.0, 2.0});

  CostSpec shifted_spec = spec;
  shifted_spec.target = spec.target.array() + 16.0;
  const Trajectory shifted_traj =
      constant_trajectory(x.array() + 16.0, {0.0, 1.0, 2.0});
  CHECK(state_cost(spec, traj) == state_cost(shifted_spec, shifted_traj));
}

namespace {

// Midpoint-refined copy: states linearly interpolated, events untouched.
Trajectory refine_grid(const Trajectory& traj) {
  Trajectory fine;
  fine.state_dim = traj.state_dim;
  fine.events = traj.events;
  for (int p = 0; p + 1 < traj.points(); ++p) {
    const double t0 = traj.times[static_cast<std::size_t>(p)];
    const double t1 = traj.times[static_cast<std::size_t>(p) + 1];
    const auto x0 = traj.state(p);
    const auto x1 = traj.state(p + 1);
    fine.times.push_back(t0);
    fine.states.insert(fine.states.end(), x0.data(), x0.data() + traj.state_dim);
    fine.times.push_back(0.5 * (t0 + t1));
    const Eigen::VectorXd mid = 0.5 * (x0 + x1);
    fine.states.insert(fine.states.end(), mid.data(), mid.data() + traj.state_dim);
  }
  const auto last = traj.state(traj.points() - 1);
  fine.times.push_back(traj.times.back());
  fine.states.insert(fine.states.end(), last.data(), last.data() + traj.state_dim);
  return fine;
}

}  // namespace

TEST_CASE("grid refinement changes the quadrature by at most O(dt)") {
  OpinionModel dyn(Eigen::VectorXd::Zero(2), 0.3, Eigen::MatrixXd::Zero(2, 2));
  HawkesModel pp = HawkesModel::poisson(2, 0.5);
  CostSpec spec;
  spec.kind = CostKind::LeastSquares;
  spec.target = Eigen::VectorXd::Ones(2);
  spec.gamma = 1.0;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(2, -2.0);

  for (double dt : {0.1, 0.05}) {
    SimulateOptions opts;
    opts.dt_euler = dt;
    const Trajectory traj = simulate_trajectory(dyn, pp, x0, 0.0, 4.0, opts, 11);
    const double base = state_cost(spec, traj);
    const double refined = state_cost(spec, refine_grid(traj));
    // Lipschitz running cost on one fixed path: halving the grid moves the
    // left-endpoint sum by O(dt).
    CHECK(std::abs(base - refined) < 8.0 * dt);
  }

  // A piecewise-constant path is integrated exactly, so redundant points
  // change nothing at all.
  Trajectory flat;
  flat.state_dim = 1;
  flat.times = {0.0, 1.0, 2.0};
  flat.states = {3.0, 3.0, 3.0};
  flat.events.reset(1, 0.0, 2.0);
  CostSpec rank;
  rank.kind = CostKind::BroadcastRank;
  rank.gamma = 1.0;
  CHECK(state_cost(rank, refine_grid(flat)) == state_cost(rank, flat));
}

TEST_CASE("per-event control cost map is nonnegative with a root only at one") {
  // (log u + 1/u - 1) u = u log u + 1 - u
  auto phi = [](double u) { return u * std::log(u) + 1.0 - u; };
  CHECK(phi(1.0) == 0.0);
  for (double u = 1e-3; u <= 1e3; u *= 1.11) {
    CHECK(phi(u) >= 0.0);
    if (std::abs(u - 1.0) > 1e-3) CHECK(phi(u) > 0.0);
  }
}

TEST_CASE("control cost closed forms on a unit-rate window") {
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  EventSequence none(1, 0.0, 1.0);

  CHECK(control_cost(PiecewiseConstantPolicy::uniform(0.0, 1.0, 4, 1, 1.0),
                     model, none, 0.0, 1.0) == 0.0);
  CHECK(control_cost(PiecewiseConstantPolicy::uniform(0.0, 1.0, 1, 1, 2.0),
                     model, none, 0.0, 1.0) ==
        doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-14));
  CHECK(control_cost(PiecewiseConstantPolicy::uniform(0.0, 1.0, 1, 1, 0.5),
                     model, none, 0.0, 1.0) ==
        doctest::Approx(0.5 - 0.5 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("control cost is nonnegative for random positive policies") {
  RngStream rng(404);
  HawkesModel model;
  model.mu = Eigen::VectorXd::Constant(2, 0.8);
  model.alpha = Eigen::MatrixXd::Constant(2, 2, 0.2);
  model.omega = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    RngStream sim(derive_seed(405, "sim", trial));
    const EventSequence ev = sample_thinning(model, 0.0, 5.0, sim);
    Eigen::MatrixXd values =
        Eigen::MatrixXd::NullaryExpr(4, 2, [&](Eigen::Index, Eigen::Index) {
          return std::exp(2.0 * rng.normal());
        });
    const PiecewiseConstantPolicy policy =
        PiecewiseConstantPolicy::from_values(0.0, 5.0, values);
    CHECK(control_cost(policy, model, ev, 0.0, 5.0) >= 0.0);
  }
}
