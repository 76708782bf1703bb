// Apache License, Version 2.0, refer to LICENSE.txt
//
// ppctrl command line: simulate point processes and controlled SDEs, fit
// intensity models, run single control tasks, and reproduce the studies.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "ppctrl/experiments.hpp"
#include "ppctrl/fit.hpp"
#include "ppctrl/simulate.hpp"
#include "ppctrl/variational.hpp"

namespace {

using namespace ppctrl;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int samples = 0;
  int jobs = 0;
};

ExperimentConfig load_config(const CommonArgs& args) {
  KeyValueConfig kv = args.config_path.empty()
                          ? KeyValueConfig{}
                          : KeyValueConfig::parse_file(args.config_path);
  ExperimentConfig config = ExperimentConfig::from(kv);
  kv.finish();
  if (args.seed_set) config.master_seed = args.seed;
  if (!args.out_dir.empty()) config.out_dir = args.out_dir;
  if (args.samples > 0) config.samples = args.samples;
  if (args.jobs > 0) {
    config.jobs = args.jobs;
    config.ce.jobs = args.jobs;
    config.fd.jobs = args.jobs;
  }
  return config;
}

ControlProblem problem_for(const ExperimentConfig& config) {
  return config.task == "opinion" ? make_opinion_problem(config)
                                  : make_broadcast_problem(config);
}

int cmd_simulate(const CommonArgs& args) {
  ExperimentConfig config = load_config(args);
  config.validate();
  const ControlProblem problem = problem_for(config);
  SimulateOptions opts;
  opts.dt_euler = config.dt_euler;
  const Trajectory traj =
      simulate_trajectory(*problem.dynamics, problem.process, problem.x0, 0.0,
                          config.horizon, opts,
                          derive_seed(config.master_seed, "simulate"));
  std::filesystem::create_directories(config.out_dir);
  traj.events.write_csv_file(config.out_dir + "/events.csv");
  traj.write_csv_file(config.out_dir + "/trajectory.csv");
  std::cout << "wrote " << config.out_dir << "/events.csv ("
            << traj.events.total_events() << " events) and trajectory.csv ("
            << traj.points() << " points)\n";
  return 0;
}

int cmd_fit(const std::string& input, const std::string& family, int dims,
            double t0, double t1) {
  const EventSequence events = EventSequence::read_csv_file(input, dims, t0, t1);
  const FitResult result = fit_mle(events, parse_model_family(family));
  std::printf("family: %s\n", family.c_str());
  for (int i = 0; i < result.model.dims(); ++i) {
    std::printf("mu[%d] = %.10g\n", i, result.model.mu[i]);
  }
  if (family == "hawkes1d") {
    std::printf("alpha = %.10g\nomega = %.10g\n", result.model.alpha(0, 0),
                result.model.omega);
  }
  std::printf("log_likelihood = %.10g\n", result.log_likelihood);
  if (result.degenerate) std::printf("warning: degenerate fit (boundary MLE)\n");
  if (!result.converged) std::printf("warning: search hit its iteration cap\n");
  return 0;
}

int cmd_control(const CommonArgs& args, const std::string& method) {
  ExperimentConfig config = load_config(args);
  config.validate();
  const ControlProblem problem = problem_for(config);
  const std::uint64_t run_seed = config.seeds.front();
  ControlRun run = [&]() {
    ExperimentConfig cfg = config;
    if (method == "uncontrolled") return run_uncontrolled(problem, run_seed);
    if (method == "kl_mpc") return run_mpc(problem, run_seed);
    if (method == "kl_ol") return run_openloop(problem, run_seed);
    if (method == "bi") return base_intensity(problem, run_seed);
    if (method == "ce_mpc") {
      return run_ce_mpc(problem, cfg.ce, cfg.optimizer_rollouts, run_seed);
    }
    if (method == "ce_ol") {
      return run_ce_openloop(problem, cfg.ce, cfg.optimizer_rollouts, run_seed);
    }
    if (method == "fd_mpc") {
      return run_fd_mpc(problem, cfg.fd, cfg.optimizer_rollouts, run_seed);
    }
    if (method == "fd_ol") {
      return run_fd_openloop(problem, cfg.fd, cfg.optimizer_rollouts, run_seed);
    }
    throw ConfigError("control: unknown method: " + method);
  }();
  std::filesystem::create_directories(config.out_dir);
  run.write_summary_csv(config.out_dir + "/run_summary.csv");
  run.executed.write_csv_file(config.out_dir + "/policy.csv");
  run.realized.write_csv_file(config.out_dir + "/trajectory.csv");
  run.realized.events.write_csv_file(config.out_dir + "/events.csv");
  std::printf("method: %s\ntotal_state_cost = %.10g\ntotal_control_cost = %.10g\n",
              method.c_str(), run.total_state_cost, run.total_control_cost);
  if (run.failed) {
    std::printf("run failed at bin %d: %s\n", run.failed_bin, run.error.c_str());
    return 2;
  }
  return 0;
}

int cmd_experiment(const CommonArgs& args, const std::string& study) {
  ExperimentConfig config = load_config(args);
  config.task = study;
  if (study == "opinion") {
    const ExperimentReport report = run_opinion_study(config);
    write_report(report, config.out_dir);
  } else if (study == "broadcast") {
    const ExperimentReport report = run_broadcast_study(config);
    write_report(report, config.out_dir);
  } else if (study == "heldout") {
    const HeldoutReport report = run_heldout_eval(config);
    write_heldout_report(report, config.out_dir);
  } else {
    throw ConfigError("experiment: unknown study: " + study);
  }
  std::cout << "report written to " << config.out_dir << "\n";
  return 0;
}

// Quick end-to-end check of the policy estimator against the exactly
// enumerable one-bin Poisson problem (cost = event count).
int cmd_selftest() {
  const double rate = 1.0, t_end = 1.0, gamma = 1.0;
  const int count = 100000;
  const HawkesModel model = HawkesModel::poisson(1, rate);

  std::vector<Trajectory> trajectories(count);
  std::vector<double> costs(count);
  for (int m = 0; m < count; ++m) {
    RngStream rng(derive_seed(99, "selftest", m));
    Trajectory& traj = trajectories[static_cast<std::size_t>(m)];
    traj.state_dim = 0;
    traj.times = {0.0, t_end};
    traj.events = sample_thinning(model, 0.0, t_end, rng);
    costs[static_cast<std::size_t>(m)] =
        static_cast<double>(traj.events.total_events());
  }
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajectories), std::move(costs), gamma);
  const double edges[2] = {0.0, t_end};
  const PolicyEstimate estimate =
      estimate_policy(batch, model, std::span<const double>(edges, 2));
  const double estimated = estimate.policy.values()(0, 0);

  // Exact value by Poisson enumeration: E[e^-N N] / (E[e^-N] * rate * T).
  double num = 0.0, den = 0.0, pmf = std::exp(-rate * t_end);
  for (int n = 0; n <= 60; ++n) {
    num += pmf * std::exp(-n / gamma) * n;
    den += pmf * std::exp(-n / gamma);
    pmf *= rate * t_end / (n + 1);
  }
  const double exact = num / (den * rate * t_end);
  std::printf("selftest: estimated u = %.5f, exact u = %.5f, exp(-1) = %.5f\n",
              estimated, exact, std::exp(-1.0));
  const bool pass = std::abs(exact - std::exp(-1.0)) < 1e-9 &&
                    std::abs(estimated - exact) < 0.02;
  std::printf("selftest: %s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intensity control for point-process-driven stochastic systems"};
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--config", common.config_path, "key = value config file");
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", common.seed, "master seed override")
        ->each([&common](const std::string&) { common.seed_set = true; });
    cmd->add_option("--samples", common.samples, "roll-outs per planning batch");
    cmd->add_option("--jobs", common.jobs, "worker threads (0 = all cores)");
  };

  auto* simulate_cmd =
      app.add_subcommand("simulate", "sample one uncontrolled roll-out");
  add_common(simulate_cmd);

  auto* fit_cmd = app.add_subcommand("fit", "fit an intensity model to events");
  std::string fit_input, fit_family = "poisson";
  int fit_dims = 1;
  double fit_t0 = 0.0, fit_t1 = 0.0;
  fit_cmd->add_option("--input", fit_input, "events csv (dimension,time)")
      ->required();
  fit_cmd->add_option("--family", fit_family, "poisson | hawkes1d");
  fit_cmd->add_option("--dims", fit_dims, "process dimensions");
  fit_cmd->add_option("--t0", fit_t0, "window start");
  fit_cmd->add_option("--t1", fit_t1, "window end")->required();

  auto* control_cmd =
      app.add_subcommand("control", "run one controller on the configured task");
  std::string control_method = "kl_mpc";
  control_cmd->add_option("--method", control_method,
                          "uncontrolled|kl_mpc|kl_ol|ce_mpc|ce_ol|fd_mpc|fd_ol|bi");
  add_common(control_cmd);

  auto* experiment_cmd =
      app.add_subcommand("experiment", "run a study: opinion | broadcast | heldout");
  std::string study;
  experiment_cmd->add_option("study", study, "opinion | broadcast | heldout")
      ->required();
  add_common(experiment_cmd);

  auto* selftest_cmd =
      app.add_subcommand("selftest", "policy estimator vs. exact enumeration");
  (void)selftest_cmd;

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(common);
    if (fit_cmd->parsed()) {
      return cmd_fit(fit_input, fit_family, fit_dims, fit_t0, fit_t1);
    }
    if (control_cmd->parsed()) return cmd_control(common, control_method);
    if (experiment_cmd->parsed()) return cmd_experiment(common, study);
    return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
