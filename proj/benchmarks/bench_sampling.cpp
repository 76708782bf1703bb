// Apache License, Version 2.0, refer to LICENSE.txt
#include <benchmark/benchmark.h>

#include "ppctrl/controller.hpp"
#include "ppctrl/network.hpp"
#include "ppctrl/simulate.hpp"

namespace {

using namespace ppctrl;

void BM_NormalDraws(benchmark::State& state) {
  RngStream rng(1);
  double sink = 0.0;
  for (auto _ : state) {
    for (int i = 0; i < 1000; ++i) sink += rng.normal();
  }
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_NormalDraws);

void BM_ThinningHawkes(benchmark::State& state) {
  const int dims = static_cast<int>(state.range(0));
  HawkesModel model;
  model.mu = Eigen::VectorXd::Constant(dims, 0.05);
  model.alpha = gen_network(dims, 0.05, 0.0, 0.2, 3);
  model.omega = 2.0;
  std::uint64_t seed = 0;
  std::size_t events = 0;
  for (auto _ : state) {
    RngStream rng(++seed);
    events += sample_thinning(model, 0.0, 5.0, rng).total_events();
  }
  benchmark::DoNotOptimize(events);
}
BENCHMARK(BM_ThinningHawkes)->Arg(10)->Arg(100);

void BM_OpinionWindowRollout(benchmark::State& state) {
  const int users = static_cast<int>(state.range(0));
  const Eigen::MatrixXd a = gen_network(users, 0.05, 0.0, 0.2, 3);
  OpinionModel dyn(Eigen::VectorXd::Zero(users), 0.2, a);
  HawkesModel pp;
  pp.mu = Eigen::VectorXd::Constant(users, 0.05);
  pp.alpha = a;
  pp.omega = 2.0;
  SimulateOptions opts;
  opts.dt_euler = 0.1;
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(users, -10.0);
  Trajectory ws;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    simulate_trajectory_into(ws, dyn, pp, x0, 0.0, 5.0, opts, ++seed);
    benchmark::DoNotOptimize(ws.states.data());
  }
  state.SetItemsProcessed(state.iterations() * 50 * users);
}
BENCHMARK(BM_OpinionWindowRollout)->Arg(100)->Arg(1000);

void BM_PlanSingleBin(benchmark::State& state) {
  const int users = 100;
  const Eigen::MatrixXd a = gen_network(users, 0.05, 0.0, 0.2, 3);
  ControlProblem problem;
  problem.dynamics = std::make_shared<OpinionModel>(
      Eigen::VectorXd::Zero(users), 0.2, a);
  problem.process.mu = Eigen::VectorXd::Constant(users, 0.05);
  problem.process.alpha = a;
  problem.process.omega = 2.0;
  problem.cost.kind = CostKind::LeastSquares;
  problem.cost.target = Eigen::VectorXd::Ones(users);
  problem.cost.gamma = 10.0;
  problem.x0 = Eigen::VectorXd::Constant(users, -10.0);
  problem.horizon = 50.0;
  problem.bins = 500;
  problem.opt_window = 5.0;
  problem.samples = static_cast<int>(state.range(0));
  problem.dt_euler = 0.1;
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(users);
  const double edges[2] = {0.0, 0.1};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const PolicyEstimate est =
        plan_policy(problem, 0.0, problem.x0, v, 5.0,
                    std::span<const double>(edges, 2), ++seed);
    benchmark::DoNotOptimize(est.ess);
  }
}
BENCHMARK(BM_PlanSingleBin)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
