// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "ppctrl/parallel.hpp"
#include "ppctrl/rng.hpp"

namespace ppctrl {

void CrossEntropyConfig::validate() const {
  if (population < 1) throw std::invalid_argument("cross_entropy: empty population");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) {
    throw std::invalid_argument("cross_entropy: elite fraction must be in (0, 1]");
  }
  if (!(init_std_log > 0)) throw std::invalid_argument("cross_entropy: init std");
  if (max_iterations < 1) throw std::invalid_argument("cross_entropy: iterations");
}

int CrossEntropyConfig::elites() const {
  const int e = static_cast<int>(std::ceil(elite_fraction * population));
  return std::clamp(e, 1, population);
}

namespace {

PiecewiseConstantPolicy assemble_policy(std::span<const double> edges, int dims,
                                        std::span<const int> free_dims,
                                        const Eigen::ArrayXXd& theta,
                                        const ClampBounds& clamp) {
  const int bins = static_cast<int>(edges.size()) - 1;
  Eigen::MatrixXd values = Eigen::MatrixXd::Ones(bins, dims);
  for (int k = 0; k < bins; ++k) {
    for (std::size_t f = 0; f < free_dims.size(); ++f) {
      values(k, free_dims[f]) =
          clamp.clamp(std::exp(theta(k, static_cast<int>(f))));
    }
  }
  return PiecewiseConstantPolicy(std::vector<double>(edges.begin(), edges.end()),
                                 std::move(values));
}

std::vector<int> all_dims(int dims) {
  std::vector<int> out(static_cast<std::size_t>(dims));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

}  // namespace

PiecewiseConstantPolicy cross_entropy(const PolicyObjective& objective,
                                      std::span<const double> bin_edges,
                                      int dims, std::span<const int> free_dims,
                                      const CrossEntropyConfig& config,
                                      const ClampBounds& clamp,
                                      std::uint64_t seed,
                                      OptimizerTrace* trace) {
  config.validate();
  clamp.validate();
  const int bins = static_cast<int>(bin_edges.size()) - 1;
  if (bins < 1) throw std::invalid_argument("cross_entropy: no bins");
  std::vector<int> fallback;
  if (free_dims.empty()) {
    fallback = all_dims(dims);
    free_dims = fallback;
  }
  const int nfree = static_cast<int>(free_dims.size());

  Eigen::ArrayXXd mean = Eigen::ArrayXXd::Constant(bins, nfree, config.init_mean_log);
  Eigen::ArrayXXd stddev = Eigen::ArrayXXd::Constant(bins, nfree, config.init_std_log);

  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::ArrayXXd best_theta = mean;

  std::vector<Eigen::ArrayXXd> thetas(static_cast<std::size_t>(config.population));
  std::vector<double> costs(static_cast<std::size_t>(config.population));

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const std::uint64_t rollout_seed = derive_seed(seed, "ce-roll", iter);
    for (int c = 0; c < config.population; ++c) {
      RngStream rng(derive_seed(seed, "ce-cand", iter, c));
      Eigen::ArrayXXd theta(bins, nfree);
      for (int k = 0; k < bins; ++k) {
        for (int f = 0; f < nfree; ++f) {
          theta(k, f) = mean(k, f) + stddev(k, f) * rng.normal();
        }
      }
      thetas[static_cast<std::size_t>(c)] = std::move(theta);
    }
    parallel_for(config.population, config.jobs, [&](std::int64_t c) {
      const PiecewiseConstantPolicy policy = assemble_policy(
          bin_edges, dims, free_dims, thetas[static_cast<std::size_t>(c)], clamp);
      costs[static_cast<std::size_t>(c)] = objective(policy, rollout_seed);
    });

    const double previous_best = best_cost;
    std::vector<int> order(static_cast<std::size_t>(config.population));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(b)];
    });
    if (costs[static_cast<std::size_t>(order.front())] < best_cost) {
      best_cost = costs[static_cast<std::size_t>(order.front())];
      best_theta = thetas[static_cast<std::size_t>(order.front())];
    }
    if (trace) trace->best_cost_history.push_back(best_cost);

    const int n_elite = config.elites();
    Eigen::ArrayXXd elite_mean = Eigen::ArrayXXd::Zero(bins, nfree);
    for (int e = 0; e < n_elite; ++e) {
      elite_mean += thetas[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])];
    }
    elite_mean /= n_elite;
    Eigen::ArrayXXd elite_var = Eigen::ArrayXXd::Zero(bins, nfree);
    for (int e = 0; e < n_elite; ++e) {
      const Eigen::ArrayXXd d =
          thetas[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])] - elite_mean;
      elite_var += d * d;
    }
    elite_var /= n_elite;
    mean = elite_mean;
    stddev = elite_var.sqrt();
    if (trace) trace->final_mean_log = mean.matrix();

    if ((stddev < config.std_floor).all()) break;
    if (iter > 0 &&
        std::abs(previous_best - best_cost) <
            config.tolerance * std::max(1.0, std::abs(best_cost))) {
      break;
    }
  }

  return assemble_policy(bin_edges, dims, free_dims, best_theta, clamp);
}

void FiniteDifferenceConfig::validate() const {
  if (!(perturbation_std > 0)) {
    throw std::invalid_argument("finite_difference: perturbation std must be > 0");
  }
  if (!(step_size >= 0)) throw std::invalid_argument("finite_difference: step size");
  if (iterations < 1 || perturbations < 1) {
    throw std::invalid_argument("finite_difference: iterations/perturbations");
  }
}

PiecewiseConstantPolicy finite_difference(const PolicyObjective& objective,
                                          const PiecewiseConstantPolicy& start,
                                          std::span<const int> free_dims,
                                          const FiniteDifferenceConfig& config,
                                          const ClampBounds& clamp,
                                          std::uint64_t seed,
                                          OptimizerTrace* trace) {
  config.validate();
  clamp.validate();
  start.validate();
  std::vector<int> fallback;
  if (free_dims.empty()) {
    fallback = all_dims(start.dims());
    free_dims = fallback;
  }
  const int bins = start.bins();
  const int nfree = static_cast<int>(free_dims.size());
  const int dim = bins * nfree;
  const std::vector<double>& edges = start.edges();

  Eigen::ArrayXXd theta(bins, nfree);
  for (int k = 0; k < bins; ++k) {
    for (int f = 0; f < nfree; ++f) {
      theta(k, f) = std::log(start.values()(k, free_dims[static_cast<std::size_t>(f)]));
    }
  }

  PiecewiseConstantPolicy best = assemble_policy(edges, start.dims(), free_dims, theta, clamp);
  double best_cost = objective(best, derive_seed(seed, "fd-roll", 0));
  if (trace) trace->best_cost_history.push_back(best_cost);

  int perturbations = config.perturbations;
  for (int iter = 0; iter < config.iterations; ++iter) {
    const std::uint64_t rollout_seed = derive_seed(seed, "fd-roll", iter);
    const PiecewiseConstantPolicy base_policy =
        assemble_policy(edges, start.dims(), free_dims, theta, clamp);
    const double base_cost = objective(base_policy, rollout_seed);

    for (int attempt = 0;; ++attempt) {
      Eigen::MatrixXd deltas(perturbations, dim);
      Eigen::VectorXd dcost(perturbations);
      std::vector<Eigen::ArrayXXd> cand(static_cast<std::size_t>(perturbations));
      for (int p = 0; p < perturbations; ++p) {
        RngStream rng(derive_seed(seed, "fd-pert", iter * 1000 + attempt, p));
        Eigen::ArrayXXd d(bins, nfree);
        for (int k = 0; k < bins; ++k) {
          for (int f = 0; f < nfree; ++f) {
            d(k, f) = config.perturbation_std * rng.normal();
          }
        }
        deltas.row(p) = Eigen::Map<const Eigen::VectorXd>(d.data(), dim).transpose();
        cand[static_cast<std::size_t>(p)] = theta + d;
      }
      parallel_for(perturbations, config.jobs, [&](std::int64_t p) {
        const PiecewiseConstantPolicy policy = assemble_policy(
            edges, start.dims(), free_dims, cand[static_cast<std::size_t>(p)], clamp);
        dcost[p] = objective(policy, rollout_seed) - base_cost;
      });

      if (deltas.isZero(0.0)) {
        if (attempt == 0) {
          perturbations *= 2;
          continue;
        }
        throw std::runtime_error("finite_difference: singular perturbation regression");
      }
      // Least-squares gradient; minimum-norm solution when the
      // perturbation count is below the parameter count.
      const Eigen::VectorXd grad =
          deltas.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(dcost);
      theta -= config.step_size *
               Eigen::Map<const Eigen::ArrayXXd>(grad.data(), bins, nfree);
      break;
    }

    const PiecewiseConstantPolicy updated =
        assemble_policy(edges, start.dims(), free_dims, theta, clamp);
    const double updated_cost = objective(updated, rollout_seed);
    if (updated_cost < best_cost) {
      best_cost = updated_cost;
      best = updated;
    } else if (base_cost < best_cost) {
      best_cost = base_cost;
      best = base_policy;
    }
    if (trace) trace->best_cost_history.push_back(best_cost);
  }
  return best;
}

void GreedyConfig::validate() const {
  if (!(threshold_factor >= 1.0)) {
    throw std::invalid_argument("greedy: threshold factor must be >= 1");
  }
  if (observations < 1) throw std::invalid_argument("greedy: observations");
  if (!(boost > 0)) throw std::invalid_argument("greedy: boost must be positive");
  if (budget < 0) throw std::invalid_argument("greedy: negative budget");
}

namespace {

bool activity_helps(const CostSpec& cost, const Eigen::VectorXd& x, int dim) {
  switch (cost.kind) {
    case CostKind::BroadcastRank:
      // The controlled poster resets ranks; more activity always helps.
      return true;
    case CostKind::InfluenceMax:
      return dim < x.size() && x[dim] > 0.0;
    case CostKind::LeastSquares: {
      if (dim >= x.size()) return true;
      const double gap = cost.target.mean() - x.mean();
      return x[dim] * gap > 0.0;
    }
  }
  return true;
}

}  // namespace

ControlRun greedy_controller(const ControlProblem& problem,
                             const GreedyConfig& config, double reference_cost,
                             std::uint64_t seed) {
  problem.validate();
  config.validate();
  if (!(reference_cost >= 0) || !std::isfinite(reference_cost)) {
    throw std::invalid_argument("greedy: bad reference cost");
  }
  const int m = problem.process.dims();
  const int k_bins = problem.bins;
  // Observation bins, evenly spread over the horizon.
  std::vector<bool> observe(static_cast<std::size_t>(k_bins), false);
  const int n_obs = std::min(config.observations, k_bins);
  for (int j = 0; j < n_obs; ++j) {
    observe[static_cast<std::size_t>(
        static_cast<long>(j) * k_bins / n_obs)] = true;
  }

  struct State {
    Eigen::VectorXd held;
    Eigen::VectorXd previous;
    double spent = 0.0;
  };
  auto state = std::make_shared<State>();
  state->held = Eigen::VectorXd::Ones(m);
  state->previous = Eigen::VectorXd::Ones(m);

  const std::vector<double> edges = problem.bin_edges();
  auto provider = [&problem, &config, reference_cost, state, observe, edges](
                      int k, double, const Eigen::VectorXd& x,
                      const Eigen::VectorXd&, const ControlRun& so_far) {
    if (k > 0) {
      // Charge the control cost realized by the previous bin.
      PiecewiseConstantPolicy prev(
          {edges[static_cast<std::size_t>(k) - 1], edges[static_cast<std::size_t>(k)]},
          state->previous.transpose());
      state->spent += control_cost(prev, problem.process,
                                   so_far.realized.events,
                                   edges[static_cast<std::size_t>(k) - 1],
                                   edges[static_cast<std::size_t>(k)]);
    }
    if (observe[static_cast<std::size_t>(k)]) {
      Eigen::VectorXd mult = Eigen::VectorXd::Ones(problem.process.dims());
      const double local_cost = problem.cost.running(x);
      if (local_cost > config.threshold_factor * reference_cost &&
          state->spent < config.budget) {
        for (int i = 0; i < problem.process.dims(); ++i) {
          if (!problem.is_controlled(i)) continue;
          mult[i] = activity_helps(problem.cost, x, i)
                        ? problem.clamp.clamp(config.boost)
                        : problem.clamp.clamp(1.0 / config.boost);
        }
      }
      state->held = mult;
    }
    state->previous = state->held;
    BinDecision decision;
    decision.multipliers = state->held;
    return decision;
  };
  return run_feedback(problem, provider, seed);
}

ControlRun base_intensity(const ControlProblem& problem, std::uint64_t seed) {
  problem.validate();
  const double edges[2] = {0.0, problem.horizon};
  const PolicyEstimate estimate = plan_policy(
      problem, 0.0, problem.x0, Eigen::VectorXd::Zero(problem.process.dims()),
      problem.horizon, std::span<const double>(edges, 2),
      derive_seed(seed, "plan", 0));
  ControlProblem scaled = problem;
  scaled.scale_base_only = true;
  ControlRun run = run_fixed_policy(scaled, estimate.policy, seed);
  for (BinDiagnostics& d : run.diagnostics) d.ess = estimate.ess;
  return run;
}

PolicyObjective make_rollout_objective(const ControlProblem& problem, double t0,
                                       double t1, const Eigen::VectorXd& x0,
                                       const Eigen::VectorXd& excitation,
                                       int rollouts) {
  if (rollouts < 1) throw std::invalid_argument("rollout objective: rollouts");
  // Copies keep the objective valid beyond the caller's frame.
  Eigen::VectorXd x = x0;
  Eigen::VectorXd v = excitation;
  return [&problem, t0, t1, x, v, rollouts](const PiecewiseConstantPolicy& cand,
                                            std::uint64_t rollout_seed) {
    // Extend the candidate with no-control bins to span the roll-out window.
    const PiecewiseConstantPolicy* policy = &cand;
    PiecewiseConstantPolicy extended;
    if (cand.t_end() < t1) {
      std::vector<double> edges = cand.edges();
      edges.push_back(t1);
      Eigen::MatrixXd values(cand.bins() + 1, cand.dims());
      values.topRows(cand.bins()) = cand.values();
      values.bottomRows(1).setOnes();
      extended = PiecewiseConstantPolicy(std::move(edges), std::move(values));
      policy = &extended;
    }
    SimulateOptions opts;
    opts.dt_euler = problem.dt_euler;
    opts.policy = policy;
    opts.scale_base_only = problem.scale_base_only;
    opts.init_excitation = v.size() > 0 ? &v : nullptr;
    // The all-ones extension contributes nothing to the control cost, so
    // integrate it over the candidate's own span only.
    const double cost_end = cand.t_end();
    double total = 0.0;
    ScoredRollout rollout;
    for (int r = 0; r < rollouts; ++r) {
      simulate_scored(
          rollout, *problem.dynamics, problem.process, x, t0, t1, opts,
          problem.cost,
          derive_seed(rollout_seed, "rollout", static_cast<std::uint64_t>(r)));
      total += rollout.cost +
               problem.cost.gamma *
                   control_cost(cand, problem.process, rollout.events, t0,
                                cost_end, opts.init_excitation);
    }
    return total / rollouts;
  };
}

namespace {

std::vector<int> controlled_or_all(const ControlProblem& problem) {
  if (!problem.controlled_dims.empty()) return problem.controlled_dims;
  return all_dims(problem.process.dims());
}

ControlRun optimizer_mpc(const ControlProblem& problem, int rollouts,
                         std::uint64_t seed, bool use_ce,
                         const CrossEntropyConfig& ce,
                         const FiniteDifferenceConfig& fd) {
  problem.validate();
  const double window =
      problem.opt_window > 0 ? problem.opt_window : problem.horizon;
  const double width = problem.bin_width();
  const std::vector<int> free = controlled_or_all(problem);
  auto provider = [&, window, width, free](int k, double t,
                                           const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& v,
                                           const ControlRun&) {
    const PolicyObjective objective =
        make_rollout_objective(problem, t, t + window, x, v, rollouts);
    const double edges[2] = {t, t + width};
    PiecewiseConstantPolicy bin_policy;
    if (use_ce) {
      bin_policy = cross_entropy(objective, std::span<const double>(edges, 2),
                                 problem.process.dims(), free, ce,
                                 problem.clamp, derive_seed(seed, "opt", k));
    } else {
      bin_policy = finite_difference(
          objective,
          PiecewiseConstantPolicy::uniform(t, t + width, 1,
                                           problem.process.dims()),
          free, fd, problem.clamp, derive_seed(seed, "opt", k));
    }
    BinDecision decision;
    decision.multipliers = bin_policy.values().row(0).transpose();
    return decision;
  };
  return run_feedback(problem, provider, seed);
}

ControlRun optimizer_openloop(const ControlProblem& problem, int rollouts,
                              std::uint64_t seed, bool use_ce,
                              const CrossEntropyConfig& ce,
                              const FiniteDifferenceConfig& fd) {
  problem.validate();
  const std::vector<int> free = controlled_or_all(problem);
  const std::vector<double> edges = problem.bin_edges();
  const PolicyObjective objective = make_rollout_objective(
      problem, 0.0, problem.horizon, problem.x0,
      Eigen::VectorXd::Zero(problem.process.dims()), rollouts);
  PiecewiseConstantPolicy policy;
  if (use_ce) {
    policy = cross_entropy(objective, edges, problem.process.dims(), free, ce,
                           problem.clamp, derive_seed(seed, "opt", 0));
  } else {
    policy = finite_difference(
        objective,
        PiecewiseConstantPolicy::uniform(0.0, problem.horizon, problem.bins,
                                         problem.process.dims()),
        free, fd, problem.clamp, derive_seed(seed, "opt", 0));
  }
  return run_fixed_policy(problem, policy, seed);
}

}  // namespace

ControlRun run_ce_mpc(const ControlProblem& problem,
                      const CrossEntropyConfig& config, int rollouts,
                      std::uint64_t seed) {
  return optimizer_mpc(problem, rollouts, seed, true, config, {});
}

ControlRun run_ce_openloop(const ControlProblem& problem,
                           const CrossEntropyConfig& config, int rollouts,
                           std::uint64_t seed) {
  return optimizer_openloop(problem, rollouts, seed, true, config, {});
}

ControlRun run_fd_mpc(const ControlProblem& problem,
                      const FiniteDifferenceConfig& config, int rollouts,
                      std::uint64_t seed) {
  return optimizer_mpc(problem, rollouts, seed, false, {}, config);
}

ControlRun run_fd_openloop(const ControlProblem& problem,
                           const FiniteDifferenceConfig& config, int rollouts,
                           std::uint64_t seed) {
  return optimizer_openloop(problem, rollouts, seed, false, {}, config);
}

}  // namespace ppctrl
