// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "ppctrl/baselines.hpp"
#include "ppctrl/network.hpp"
#include "ppctrl/rng.hpp"

using namespace ppctrl;

namespace {

ControlProblem poisson_problem(double rate, double horizon, int bins,
                               int samples) {
  ControlProblem problem;
  problem.dynamics = std::make_shared<OpinionModel>(
      Eigen::VectorXd::Zero(1), 0.0, Eigen::MatrixXd::Zero(1, 1));
  problem.process = HawkesModel::poisson(1, rate);
  problem.cost.kind = CostKind::LeastSquares;
  problem.cost.target = Eigen::VectorXd::Ones(1);
  problem.cost.gamma = 1.0;
  problem.x0 = Eigen::VectorXd::Zero(1);
  problem.horizon = horizon;
  problem.bins = bins;
  problem.samples = samples;
  problem.dt_euler = horizon / (4.0 * bins);
  return problem;
}

bool same_run(const ControlRun& a, const ControlRun& b) {
  return a.executed == b.executed && a.realized.times == b.realized.times &&
         a.realized.states == b.realized.states &&
         a.realized.events == b.realized.events &&
         a.total_state_cost == b.total_state_cost;
}

}  // namespace

TEST_CASE("cross entropy finds the minimum of a deterministic quadratic") {
  const double edges[2] = {0.0, 1.0};
  CrossEntropyConfig config;
  config.population = 40;
  config.max_iterations = 40;
  config.tolerance = 0.0;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy& policy,
                                       std::uint64_t) {
    const double u = policy.values()(0, 0);
    return (u - 2.0) * (u - 2.0);
  };
  const PiecewiseConstantPolicy best = cross_entropy(
      objective, std::span<const double>(edges, 2), 1, {}, config, {}, 91);
  CHECK(best.values()(0, 0) == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("cross entropy on a flat landscape stays inside the prior") {
  const double edges[2] = {0.0, 1.0};
  CrossEntropyConfig config;
  config.population = 30;
  config.max_iterations = 5;
  OptimizerTrace trace;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy&,
                                       std::uint64_t) { return 3.25; };
  const PiecewiseConstantPolicy best =
      cross_entropy(objective, std::span<const double>(edges, 2), 1, {},
                    config, {}, 17, &trace);
  CHECK(std::abs(std::log(best.values()(0, 0))) < 4.0 * config.init_std_log);
  for (double c : trace.best_cost_history) CHECK(c == 3.25);
}

TEST_CASE("elite fraction one refits to the whole population") {
  const double edges[2] = {0.0, 1.0};
  CrossEntropyConfig config;
  config.population = 25;
  config.elite_fraction = 1.0;
  config.max_iterations = 1;
  OptimizerTrace trace;
  const std::uint64_t seed = 4242;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy& policy,
                                       std::uint64_t) {
    return policy.values()(0, 0);  // any cost; selection includes everyone
  };
  cross_entropy(objective, std::span<const double>(edges, 2), 1, {}, config,
                {}, seed, &trace);
  // With no selection pressure the refit mean is the population mean of the
  // sampled parameters, reproduced here from the documented stream layout.
  double mean = 0.0;
  for (int c = 0; c < config.population; ++c) {
    RngStream rng(derive_seed(seed, "ce-cand", 0, c));
    mean += config.init_mean_log + config.init_std_log * rng.normal();
  }
  mean /= config.population;
  REQUIRE(trace.final_mean_log.size() == 1);
  CHECK(trace.final_mean_log(0, 0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("best-so-far cross entropy cost never increases") {
  const double edges[3] = {0.0, 0.5, 1.0};
  CrossEntropyConfig config;
  config.population = 20;
  config.max_iterations = 15;
  config.tolerance = 0.0;
  OptimizerTrace trace;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy& policy,
                                       std::uint64_t seed) {
    RngStream rng(seed);  // noisy objective
    return (policy.values().array() - 1.5).square().sum() + 0.1 * rng.normal();
  };
  cross_entropy(objective, std::span<const double>(edges, 3), 1, {}, config,
                {}, 23, &trace);
  for (std::size_t i = 1; i < trace.best_cost_history.size(); ++i) {
    CHECK(trace.best_cost_history[i] <= trace.best_cost_history[i - 1]);
  }
}

TEST_CASE("finite difference estimates the quadratic gradient") {
  const PiecewiseConstantPolicy start =
      PiecewiseConstantPolicy::uniform(0.0, 1.0, 1, 1, 1.0);
  FiniteDifferenceConfig config;
  config.perturbation_std = 0.01;
  config.step_size = 0.1;
  config.iterations = 1;
  config.perturbations = 64;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy& policy,
                                       std::uint64_t) {
    const double u = policy.values()(0, 0);
    return (u - 2.0) * (u - 2.0);
  };
  const PiecewiseConstantPolicy updated =
      finite_difference(objective, start, {}, config, {}, 55);
  // One descent step from log u = 0: the recovered gradient should match
  // d/d(log u) (u - 2)^2 = 2 u (u - 2) = -2 within 10%.
  const double recovered_gradient = -std::log(updated.values()(0, 0)) / config.step_size;
  CHECK(recovered_gradient == doctest::Approx(-2.0).epsilon(0.1));
}

TEST_CASE("finite difference is inert on a zero-cost objective") {
  const PiecewiseConstantPolicy start =
      PiecewiseConstantPolicy::uniform(0.0, 1.0, 2, 1, 1.3);
  FiniteDifferenceConfig config;
  config.iterations = 3;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy&,
                                       std::uint64_t) { return 0.0; };
  const PiecewiseConstantPolicy result =
      finite_difference(objective, start, {}, config, {}, 5);
  CHECK(result == start);
}

TEST_CASE("zero step size returns the start policy exactly") {
  const PiecewiseConstantPolicy start =
      PiecewiseConstantPolicy::uniform(0.0, 1.0, 2, 2, 0.7);
  FiniteDifferenceConfig config;
  config.step_size = 0.0;
  config.iterations = 4;
  const PolicyObjective objective = [](const PiecewiseConstantPolicy& policy,
                                       std::uint64_t) {
    return policy.values().sum();
  };
  const PiecewiseConstantPolicy result =
      finite_difference(objective, start, {}, config, {}, 6);
  CHECK(result == start);
}

TEST_CASE("greedy below threshold equals the uncontrolled run") {
  const ControlProblem problem = poisson_problem(1.0, 4.0, 8, 100);
  GreedyConfig config;
  config.threshold_factor = 5.0;
  config.observations = 4;
  config.boost = 3.0;
  // Huge reference: the trigger never fires.
  const ControlRun greedy = greedy_controller(problem, config, 1e9, 77);
  const ControlRun plain = run_uncontrolled(problem, 77);
  CHECK(same_run(greedy, plain));
}

TEST_CASE("zero budget disables greedy control") {
  ControlProblem problem = poisson_problem(1.0, 4.0, 8, 100);
  problem.cost.target = Eigen::VectorXd::Constant(1, 50.0);  // huge local cost
  GreedyConfig config;
  config.threshold_factor = 1.0;
  config.observations = 8;
  config.boost = 4.0;
  config.budget = 0.0;
  const ControlRun greedy = greedy_controller(problem, config, 0.1, 78);
  const ControlRun plain = run_uncontrolled(problem, 78);
  CHECK(same_run(greedy, plain));
}

TEST_CASE("greedy boosts helpful users once the threshold trips") {
  ControlProblem problem = poisson_problem(1.0, 4.0, 8, 100);
  problem.cost.target = Eigen::VectorXd::Constant(1, 50.0);
  GreedyConfig config;
  config.threshold_factor = 1.0;
  config.observations = 8;
  config.boost = 4.0;
  const ControlRun run = greedy_controller(problem, config, 0.1, 79);
  CHECK_FALSE(same_run(run, run_uncontrolled(problem, 79)));
  bool acted = false;
  for (int k = 0; k < run.executed.bins(); ++k) {
    const double u = run.executed.values()(k, 0);
    CHECK((u == 1.0 || u == 4.0 || u == 0.25));
    acted = acted || u != 1.0;
  }
  CHECK(acted);
}

TEST_CASE("base intensity with huge gamma stays near one") {
  ControlProblem problem = poisson_problem(4.0, 4.0, 4, 3000);
  problem.cost.gamma = 1e12;
  const ControlRun run = base_intensity(problem, 9);
  REQUIRE_FALSE(run.failed);
  for (int k = 0; k < run.executed.bins(); ++k) {
    CHECK(run.executed.values()(k, 0) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("pure poisson base intensity coincides with one-bin open loop") {
  // With no excitation the base rate is the whole intensity, so scaling the
  // base equals scaling the total: identical seeds give identical runs.
  ControlProblem problem = poisson_problem(2.0, 3.0, 1, 500);
  const ControlRun bi = base_intensity(problem, 12);
  const ControlRun ol = run_openloop(problem, 12);
  CHECK(same_run(bi, ol));
}
