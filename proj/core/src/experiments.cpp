// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ppctrl/fit.hpp"
#include "ppctrl/numerics.hpp"
#include "ppctrl/rng.hpp"
#include "ppctrl/thinning.hpp"

namespace ppctrl {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ExperimentConfig ExperimentConfig::from(KeyValueConfig& cfg) {
  ExperimentConfig out;
  out.task = cfg.get_string("task", out.task);
  if (out.task == "opinion") {
    out.clamp.u_max = 20.0;
  }
  if (out.task == "broadcast" || out.task == "heldout") {
    out.horizon = 10.0;
    out.bins = 10;
    out.opt_window = 1.0;
    out.dt_euler = 1.0;
    out.samples = 2000;
  }
  out.master_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  out.seeds = cfg.get_seed_list("seeds", out.seeds);
  out.methods = cfg.get_string_list("methods", out.methods);
  out.jobs = static_cast<int>(cfg.get_int("jobs", out.jobs));
  out.out_dir = cfg.get_string("out", out.out_dir);

  out.horizon = cfg.get_double("horizon", out.horizon);
  out.bins = static_cast<int>(cfg.get_int("bins", out.bins));
  out.opt_window = cfg.get_double("opt_window", out.opt_window);
  out.samples = static_cast<int>(cfg.get_int("samples", out.samples));
  out.gamma = cfg.get_double("gamma", out.gamma);
  out.dt_euler = cfg.get_double("dt_euler", out.dt_euler);
  out.clamp.u_min = cfg.get_double("u_min", out.clamp.u_min);
  out.clamp.u_max = cfg.get_double("u_max", out.clamp.u_max);

  out.users = static_cast<int>(cfg.get_int("users", out.users));
  out.baseline_opinion = cfg.get_double("baseline_opinion", out.baseline_opinion);
  out.volatility = cfg.get_double("volatility", out.volatility);
  out.initial_opinion = cfg.get_double("initial_opinion", out.initial_opinion);
  out.target_opinion = cfg.get_double("target_opinion", out.target_opinion);
  out.base_rate = cfg.get_double("base_rate", out.base_rate);
  out.kernel_decay = cfg.get_double("kernel_decay", out.kernel_decay);
  out.network_density = cfg.get_double("network_density", out.network_density);
  out.weight_min = cfg.get_double("weight_min", out.weight_min);
  out.weight_max = cfg.get_double("weight_max", out.weight_max);

  out.followers = static_cast<int>(cfg.get_int("followers", out.followers));
  out.broadcaster_rate = cfg.get_double("broadcaster_rate", out.broadcaster_rate);
  out.competitor_rate = cfg.get_double("competitor_rate", out.competitor_rate);
  out.competitor_excitation =
      cfg.get_double("competitor_excitation", out.competitor_excitation);
  out.competitor_decay = cfg.get_double("competitor_decay", out.competitor_decay);
  out.initial_rank = cfg.get_double("initial_rank", out.initial_rank);

  out.heldout_intervals =
      static_cast<int>(cfg.get_int("heldout_intervals", out.heldout_intervals));
  out.heldout_bins = static_cast<int>(cfg.get_int("heldout_bins", out.heldout_bins));
  out.heldout_rollouts =
      static_cast<int>(cfg.get_int("heldout_rollouts", out.heldout_rollouts));

  out.ce.population = static_cast<int>(cfg.get_int("ce_population", out.ce.population));
  out.ce.elite_fraction = cfg.get_double("ce_elite_fraction", out.ce.elite_fraction);
  out.ce.init_std_log = cfg.get_double("ce_init_std", out.ce.init_std_log);
  out.ce.max_iterations =
      static_cast<int>(cfg.get_int("ce_iterations", out.ce.max_iterations));
  out.ce.tolerance = cfg.get_double("ce_tolerance", out.ce.tolerance);
  out.fd.perturbation_std = cfg.get_double("fd_sigma", out.fd.perturbation_std);
  out.fd.step_size = cfg.get_double("fd_step", out.fd.step_size);
  out.fd.iterations = static_cast<int>(cfg.get_int("fd_iterations", out.fd.iterations));
  out.fd.perturbations =
      static_cast<int>(cfg.get_int("fd_perturbations", out.fd.perturbations));
  out.optimizer_rollouts =
      static_cast<int>(cfg.get_int("optimizer_rollouts", out.optimizer_rollouts));

  out.greedy_thresholds = cfg.get_double_list("greedy_thresholds", out.greedy_thresholds);
  out.greedy_observations =
      cfg.get_double_list("greedy_observations", out.greedy_observations);
  out.greedy_boost = cfg.get_double("greedy_boost", out.greedy_boost);
  out.greedy_budget = cfg.get_double("greedy_budget", out.greedy_budget);

  out.ce.jobs = out.jobs;
  out.fd.jobs = out.jobs;
  return out;
}

void ExperimentConfig::validate() const {
  if (task != "opinion" && task != "broadcast" && task != "heldout") {
    throw ConfigError("config: unknown task: " + task);
  }
  if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  if (users < 1 || followers < 1 || bins < 1 || samples < 1) {
    throw ConfigError("config: users/followers/bins/samples must be positive");
  }
  if (!(horizon > 0) || !(dt_euler > 0) || !(gamma > 0)) {
    throw ConfigError("config: horizon/dt_euler/gamma must be positive");
  }
  if (heldout_intervals < 3) {
    throw ConfigError("config: heldout needs at least 3 intervals");
  }
  clamp.validate();
}

ControlProblem make_opinion_problem(const ExperimentConfig& config,
                                    Eigen::MatrixXd* network_out) {
  const Eigen::MatrixXd a =
      gen_network(config.users, config.network_density, config.weight_min,
                  config.weight_max, derive_seed(config.master_seed, "network"));
  if (network_out) *network_out = a;

  ControlProblem problem;
  problem.dynamics = std::make_shared<OpinionModel>(
      Eigen::VectorXd::Constant(config.users, config.baseline_opinion),
      config.volatility, a);
  problem.process.mu = Eigen::VectorXd::Constant(config.users, config.base_rate);
  problem.process.alpha = a;  // influence matrix doubles as the excitation matrix
  problem.process.omega = config.kernel_decay;
  problem.cost.kind = CostKind::LeastSquares;
  problem.cost.target = Eigen::VectorXd::Constant(config.users, config.target_opinion);
  problem.cost.gamma = config.gamma;
  problem.x0 = Eigen::VectorXd::Constant(config.users, config.initial_opinion);
  problem.horizon = config.horizon;
  problem.bins = config.bins;
  problem.opt_window = config.opt_window;
  problem.samples = config.samples;
  problem.dt_euler = config.dt_euler;
  problem.clamp = config.clamp;
  problem.jobs = config.jobs;
  return problem;
}

ControlProblem make_broadcast_problem(const ExperimentConfig& config) {
  HawkesModel feed;
  feed.mu = Eigen::VectorXd::Constant(1, config.competitor_rate);
  feed.alpha = Eigen::MatrixXd::Constant(1, 1, config.competitor_excitation);
  feed.omega = config.competitor_decay;
  auto dynamics = std::make_shared<BroadcastModel>(
      config.followers, config.broadcaster_rate, feed, config.initial_rank);

  ControlProblem problem;
  problem.process = dynamics->point_process();
  problem.controlled_dims = dynamics->controlled_dims();
  problem.x0 = dynamics->initial_state();
  problem.dynamics = std::move(dynamics);
  problem.cost.kind = CostKind::BroadcastRank;
  problem.cost.gamma = config.gamma;
  problem.horizon = config.horizon;
  problem.bins = config.bins;
  problem.opt_window = config.opt_window;
  problem.samples = config.samples;
  problem.dt_euler = config.dt_euler;
  problem.clamp = config.clamp;
  problem.jobs = config.jobs;
  return problem;
}

namespace {

struct ReferenceCache {
  // kl_mpc runs per seed: greedy needs the reference cost, and the study
  // reuses the run when kl_mpc is also a listed method.
  std::map<std::uint64_t, ControlRun> runs;
  const ControlRun& get(const ControlProblem& problem, std::uint64_t seed) {
    auto it = runs.find(seed);
    if (it == runs.end()) {
      it = runs.emplace(seed, run_mpc(problem, seed)).first;
    }
    return it->second;
  }
};

ControlRun dispatch_method(const std::string& method,
                           const ControlProblem& problem,
                           const ExperimentConfig& config, std::uint64_t seed,
                           ReferenceCache& reference) {
  if (method == "uncontrolled") return run_uncontrolled(problem, seed);
  if (method == "kl_mpc") return reference.get(problem, seed);
  if (method == "kl_ol") return run_openloop(problem, seed);
  if (method == "ce_mpc") {
    return run_ce_mpc(problem, config.ce, config.optimizer_rollouts, seed);
  }
  if (method == "ce_ol") {
    return run_ce_openloop(problem, config.ce, config.optimizer_rollouts, seed);
  }
  if (method == "fd_mpc") {
    return run_fd_mpc(problem, config.fd, config.optimizer_rollouts, seed);
  }
  if (method == "fd_ol") {
    return run_fd_openloop(problem, config.fd, config.optimizer_rollouts, seed);
  }
  if (method == "bi") return base_intensity(problem, seed);
  if (method == "greedy") {
    const ControlRun& ref = reference.get(problem, seed);
    const double reference_cost = ref.total_state_cost / problem.horizon;
    const double budget = config.greedy_budget >= 0 ? config.greedy_budget
                                                    : ref.total_control_cost;
    ControlRun best;
    bool have = false;
    for (double k : config.greedy_thresholds) {
      for (double n : config.greedy_observations) {
        GreedyConfig greedy;
        greedy.threshold_factor = k;
        greedy.observations = std::max(1, static_cast<int>(n));
        greedy.boost = config.greedy_boost;
        greedy.budget = budget;
        ControlRun run = greedy_controller(problem, greedy, reference_cost, seed);
        if (!have || run.total_state_cost < best.total_state_cost) {
          best = std::move(run);
          have = true;
        }
      }
    }
    return best;
  }
  throw ConfigError("config: unknown method: " + method);
}

ExperimentReport run_study(const ExperimentConfig& config,
                           const ControlProblem& problem, bool broadcast) {
  ExperimentReport report;
  report.task = config.task;
  report.methods = config.methods;
  report.seeds = config.seeds;

  ReferenceCache reference;
  for (const std::string& method : config.methods) {
    for (std::uint64_t seed : config.seeds) {
      MethodCell cell;
      cell.method = method;
      cell.seed = seed;
      const auto start = std::chrono::steady_clock::now();
      try {
        ControlRun run = dispatch_method(method, problem, config, seed, reference);
        if (run.failed) {
          cell.failed = true;
          cell.error = run.error;
        }
        cell.total_state_cost = run.total_state_cost;
        cell.total_control_cost = run.total_control_cost;
        cell.initial_cost = run.initial_cost;
        cell.terminal_cost = run.terminal_cost;
        cell.average_rank =
            broadcast ? run.total_state_cost / problem.horizon /
                            problem.dynamics->state_dim()
                      : kNaN;
        cell.series = run.diagnostics;
        cell.executed = run.executed;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
        cell.total_state_cost = kNaN;
        cell.total_control_cost = kNaN;
        cell.initial_cost = kNaN;
        cell.terminal_cost = kNaN;
        cell.average_rank = kNaN;
      }
      cell.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      std::cerr << "[" << config.task << "] " << method << " seed=" << seed
                << (cell.failed ? " FAILED: " + cell.error
                                : " state_cost=" + std::to_string(cell.total_state_cost))
                << " (" << cell.wall_seconds << "s)\n";
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace

ExperimentReport run_opinion_study(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  if (cfg.methods.empty()) {
    cfg.methods = {"uncontrolled", "kl_mpc", "kl_ol", "ce_mpc", "greedy", "bi"};
  }
  cfg.validate();
  const ControlProblem problem = make_opinion_problem(cfg);
  return run_study(cfg, problem, false);
}

ExperimentReport run_broadcast_study(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  if (cfg.methods.empty()) {
    cfg.methods = {"uncontrolled", "kl_mpc", "kl_ol", "bi"};
  }
  cfg.validate();
  const ControlProblem problem = make_broadcast_problem(cfg);
  return run_study(cfg, problem, true);
}

const MethodCell* ExperimentReport::find(const std::string& method,
                                         std::uint64_t seed) const {
  for (const MethodCell& cell : cells) {
    if (cell.method == method && cell.seed == seed) return &cell;
  }
  return nullptr;
}

double ExperimentReport::mean_state_cost(const std::string& method) const {
  KahanSum sum;
  int n = 0;
  for (const MethodCell& cell : cells) {
    if (cell.method == method && !cell.failed) {
      sum.add(cell.total_state_cost);
      ++n;
    }
  }
  return n > 0 ? sum.value() / n : kNaN;
}

double ExperimentReport::mean_average_rank(const std::string& method) const {
  KahanSum sum;
  int n = 0;
  for (const MethodCell& cell : cells) {
    if (cell.method == method && !cell.failed) {
      sum.add(cell.average_rank);
      ++n;
    }
  }
  return n > 0 ? sum.value() / n : kNaN;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report(const ExperimentReport& report, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/report.csv");
    if (!f) throw std::runtime_error("cannot write report.csv");
    f << "task,method,seed,total_state_cost,total_control_cost,initial_cost,"
         "terminal_cost,average_rank,failed\n";
    for (const MethodCell& cell : report.cells) {
      f << report.task << ',' << cell.method << ',' << cell.seed << ','
        << format_double(cell.total_state_cost) << ','
        << format_double(cell.total_control_cost) << ','
        << format_double(cell.initial_cost) << ','
        << format_double(cell.terminal_cost) << ','
        << format_double(cell.average_rank) << ',' << (cell.failed ? 1 : 0)
        << '\n';
    }
  }
  for (const MethodCell& cell : report.cells) {
    if (cell.failed) continue;
    const std::string tag = cell.method + "_" + std::to_string(cell.seed);
    {
      std::ofstream f(out_dir + "/series_" + tag + ".csv");
      f << "bin,time,instantaneous_cost,ess,mean_multiplier\n";
      for (const BinDiagnostics& d : cell.series) {
        f << d.bin << ',' << format_double(d.time) << ','
          << format_double(d.instantaneous_cost) << ',' << format_double(d.ess)
          << ',' << format_double(d.mean_multiplier) << '\n';
      }
    }
    if (cell.executed.bins() > 0) {
      cell.executed.write_csv_file(out_dir + "/policy_" + tag + ".csv");
    }
  }
  {
    std::ofstream f(out_dir + "/summary.txt");
    f << "task: " << report.task << "\n";
    for (const std::string& method : report.methods) {
      std::vector<double> costs, ranks;
      for (const MethodCell& cell : report.cells) {
        if (cell.method == method && !cell.failed) {
          costs.push_back(cell.total_state_cost);
          ranks.push_back(cell.average_rank);
        }
      }
      if (costs.empty()) {
        f << method << ": all cells failed\n";
        continue;
      }
      const double mean = kahan_total(costs) / costs.size();
      double var = 0.0;
      for (double c : costs) var += (c - mean) * (c - mean);
      var = costs.size() > 1 ? var / (costs.size() - 1) : 0.0;
      f << method << ": state_cost " << format_double(mean) << " +/- "
        << format_double(std::sqrt(var));
      if (report.task == "broadcast") {
        const double rank_mean = kahan_total(ranks) / ranks.size();
        f << ", average_rank " << format_double(rank_mean);
      }
      f << " (n=" << costs.size() << ")\n";
    }
  }
}

double pairwise_concordance(std::span<const double> predicted,
                            std::span<const double> actual) {
  const int n = static_cast<int>(predicted.size());
  if (n != static_cast<int>(actual.size()) || n < 2) {
    throw std::invalid_argument("pairwise_concordance: need >= 2 paired scores");
  }
  // Total orders with ties broken by index.
  auto order_of = [n](std::span<const double> values) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (values[static_cast<std::size_t>(a)] != values[static_cast<std::size_t>(b)]) {
        return values[static_cast<std::size_t>(a)] < values[static_cast<std::size_t>(b)];
      }
      return a < b;
    });
    std::vector<int> rank(static_cast<std::size_t>(n));
    for (int pos = 0; pos < n; ++pos) rank[static_cast<std::size_t>(idx[pos])] = pos;
    return rank;
  };
  const std::vector<int> rank_pred = order_of(predicted);
  const std::vector<int> rank_act = order_of(actual);
  int concordant = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      ++total;
      const bool pred_less = rank_pred[static_cast<std::size_t>(i)] <
                             rank_pred[static_cast<std::size_t>(j)];
      const bool act_less = rank_act[static_cast<std::size_t>(i)] <
                            rank_act[static_cast<std::size_t>(j)];
      if (pred_less == act_less) ++concordant;
    }
  }
  return static_cast<double>(concordant) / total;
}

namespace {

// Time-averaged total rank per follower implied by a joint event record
// (feeds 0..F-1, broadcaster F) over [a, b], starting from rank one.
double replay_average_rank(const EventSequence& record, int followers,
                           double a, double b) {
  Eigen::VectorXd rank = Eigen::VectorXd::Ones(followers);
  double t = a;
  KahanSum integral;
  for (const Event& e : record.merged()) {
    if (e.time < a) continue;
    if (e.time >= b) break;
    integral.add(rank.sum() * (e.time - t));
    t = e.time;
    if (e.dim == followers) {
      rank.setOnes();
    } else {
      rank[e.dim] += 1.0;
    }
  }
  integral.add(rank.sum() * (b - t));
  return integral.value() / (b - a) / followers;
}

double average_rank_of_trajectory(const Trajectory& traj) {
  KahanSum integral;
  for (int p = 0; p + 1 < traj.points(); ++p) {
    integral.add(traj.state(p).sum() *
                 (traj.times[static_cast<std::size_t>(p) + 1] -
                  traj.times[static_cast<std::size_t>(p)]));
  }
  return integral.value() / (traj.t_end() - traj.t_begin()) / traj.state_dim;
}

}  // namespace

double HeldoutReport::mean_accuracy(const std::string& method) const {
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (methods[m] == method) {
      return accuracy.row(static_cast<int>(m)).mean();
    }
  }
  return kNaN;
}

HeldoutReport run_heldout_eval(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  if (cfg.methods.empty()) cfg.methods = {"oracle", "kl_ol", "bi", "random"};
  cfg.validate();

  const int intervals = cfg.heldout_intervals;
  const double length = cfg.horizon;
  const int followers = cfg.followers;

  // Ground-truth record over all intervals.
  const ControlProblem truth = make_broadcast_problem(cfg);
  RngStream data_rng(derive_seed(cfg.master_seed, "heldout-data"));
  const EventSequence record = sample_thinning(
      truth.process, 0.0, intervals * length, data_rng);

  // Actual average position per interval.
  std::vector<double> actual(static_cast<std::size_t>(intervals));
  for (int r = 0; r < intervals; ++r) {
    actual[static_cast<std::size_t>(r)] =
        replay_average_rank(record, followers, r * length, (r + 1) * length);
  }

  HeldoutReport report;
  report.methods = cfg.methods;
  report.rotations = intervals;
  report.accuracy = Eigen::MatrixXd::Zero(static_cast<int>(cfg.methods.size()),
                                          intervals);

  for (int train = 0; train < intervals; ++train) {
    // Fit the processes on the training interval.
    const double a = train * length, b = (train + 1) * length;
    EventSequence broadcaster_events(1, a, b);
    for (double t : record.times(followers)) {
      if (t >= a && t < b) broadcaster_events.append(0, t);
    }
    const FitResult broadcaster_fit = fit_poisson(broadcaster_events);

    HawkesModel fitted = truth.process;  // same shape, refitted parameters
    fitted.mu[followers] = broadcaster_fit.model.mu[0];
    // The joint model shares one kernel decay, so per-feed fits are
    // re-expressed at the averaged decay. Each feed keeps the stationary
    // rate its training interval actually showed (the quantity the MLE
    // pins down), and carries the fitted clustering through the branching
    // ratio, capped away from criticality: sparse intervals otherwise fit
    // degenerate slow-kernel corners whose implied rates explode when the
    // kernel time scale changes.
    std::vector<double> branching(static_cast<std::size_t>(followers));
    std::vector<double> rate(static_cast<std::size_t>(followers));
    double omega_sum = 0.0;
    const double length = b - a;
    for (int j = 0; j < followers; ++j) {
      EventSequence feed_events(1, a, b);
      for (double t : record.times(j)) {
        if (t >= a && t < b) feed_events.append(0, t);
      }
      rate[static_cast<std::size_t>(j)] =
          static_cast<double>(feed_events.total_events()) / length;
      const FitResult feed_fit = fit_hawkes_1d(feed_events);
      branching[static_cast<std::size_t>(j)] = std::min(
          0.9, feed_fit.model.alpha(0, 0) / feed_fit.model.omega);
      omega_sum += feed_fit.model.omega;
    }
    fitted.omega = omega_sum / followers;
    for (int j = 0; j < followers; ++j) {
      const double ratio = branching[static_cast<std::size_t>(j)];
      fitted.alpha(j, j) = ratio * fitted.omega;
      fitted.mu[j] = rate[static_cast<std::size_t>(j)] * (1.0 - ratio);
    }

    ControlProblem problem = truth;
    problem.process = fitted;
    problem.horizon = length;
    problem.bins = cfg.heldout_bins;
    problem.opt_window = 0.0;  // full-interval policies
    problem.samples = cfg.samples;

    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const std::string& method = cfg.methods[m];
      std::vector<double> predicted;
      std::vector<double> actual_test;
      double xstar = kNaN;
      if (method != "oracle" && method != "random") {
        // Optimal expected position under the method's policy, by
        // controlled roll-outs from the fitted model.
        PiecewiseConstantPolicy policy;
        bool base_only = false;
        const std::uint64_t method_seed =
            derive_seed(cfg.master_seed, "heldout-policy", train, m);
        if (method == "kl_ol") {
          std::vector<double> edges(static_cast<std::size_t>(cfg.heldout_bins) + 1);
          for (int k = 0; k <= cfg.heldout_bins; ++k) {
            edges[static_cast<std::size_t>(k)] = length * k / cfg.heldout_bins;
          }
          policy = plan_policy(problem, 0.0, problem.x0,
                               Eigen::VectorXd::Zero(problem.process.dims()),
                               length, edges, derive_seed(method_seed, "plan", 0))
                       .policy;
        } else if (method == "bi") {
          const double edges[2] = {0.0, length};
          policy = plan_policy(problem, 0.0, problem.x0,
                               Eigen::VectorXd::Zero(problem.process.dims()),
                               length, std::span<const double>(edges, 2),
                               derive_seed(method_seed, "plan", 0))
                       .policy;
          base_only = true;
        } else if (method == "ce_ol") {
          const PolicyObjective objective = make_rollout_objective(
              problem, 0.0, length, problem.x0,
              Eigen::VectorXd::Zero(problem.process.dims()),
              cfg.optimizer_rollouts);
          std::vector<double> edges(static_cast<std::size_t>(cfg.heldout_bins) + 1);
          for (int k = 0; k <= cfg.heldout_bins; ++k) {
            edges[static_cast<std::size_t>(k)] = length * k / cfg.heldout_bins;
          }
          policy = cross_entropy(objective, edges, problem.process.dims(),
                                 problem.controlled_dims, cfg.ce, cfg.clamp,
                                 derive_seed(method_seed, "opt", 0));
        } else {
          throw ConfigError("heldout: unsupported method: " + method);
        }
        SimulateOptions opts;
        opts.dt_euler = problem.dt_euler;
        opts.policy = &policy;
        opts.scale_base_only = base_only;
        KahanSum rank_sum;
        for (int r = 0; r < cfg.heldout_rollouts; ++r) {
          const Trajectory traj = simulate_trajectory(
              *problem.dynamics, problem.process, problem.x0, 0.0, length,
              opts,
              derive_seed(cfg.master_seed, "heldout-xstar",
                          static_cast<std::uint64_t>(train) * 1000 + m, r));
          rank_sum.add(average_rank_of_trajectory(traj));
        }
        xstar = rank_sum.value() / cfg.heldout_rollouts;
      }

      RngStream random_rng(
          derive_seed(cfg.master_seed, "heldout-random", train, m));
      for (int i = 0; i < intervals; ++i) {
        if (i == train) continue;
        actual_test.push_back(actual[static_cast<std::size_t>(i)]);
        if (method == "oracle") {
          predicted.push_back(actual[static_cast<std::size_t>(i)]);
        } else if (method == "random") {
          predicted.push_back(random_rng.uniform());
        } else {
          predicted.push_back(std::abs(actual[static_cast<std::size_t>(i)] - xstar));
        }
      }
      report.accuracy(static_cast<int>(m), train) =
          pairwise_concordance(predicted, actual_test);
    }
    std::cerr << "[heldout] rotation " << train << " done\n";
  }
  return report;
}

void write_heldout_report(const HeldoutReport& report,
                          const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir + "/report.csv");
    f << "method,rotation,accuracy\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      for (int r = 0; r < report.rotations; ++r) {
        f << report.methods[m] << ',' << r << ','
          << format_double(report.accuracy(static_cast<int>(m), r)) << '\n';
      }
    }
  }
  {
    std::ofstream f(out_dir + "/summary.txt");
    f << "task: heldout\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
      const auto row = report.accuracy.row(static_cast<int>(m));
      const double mean = row.mean();
      const double var =
          report.rotations > 1
              ? (row.array() - mean).square().sum() / (report.rotations - 1)
              : 0.0;
      f << report.methods[m] << ": accuracy " << format_double(mean)
        << " +/- " << format_double(std::sqrt(var)) << "\n";
    }
  }
}

}  // namespace ppctrl
