// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppctrl/baselines.hpp"
#include "ppctrl/config.hpp"
#include "ppctrl/controller.hpp"
#include "ppctrl/network.hpp"

namespace ppctrl {

/// Desk-scale study configuration; every field can be set from the flat
/// key = value config file (see README for the schema).
struct ExperimentConfig {
  std::string task = "opinion";  // opinion | broadcast | heldout
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::string> methods;
  int jobs = 0;
  std::string out_dir = ".";

  // shared control parameters
  double horizon = 50.0;
  int bins = 500;
  double opt_window = 5.0;
  int samples = 2000;
  double gamma = 10.0;
  double dt_euler = 0.25;
  ClampBounds clamp;

  // opinion task (desk-scale defaults; see README for the rationale)
  int users = 100;
  double baseline_opinion = 0.0;
  double volatility = 1.0;
  double initial_opinion = -10.0;
  double target_opinion = 1.0;
  double base_rate = 0.03;
  double kernel_decay = 9.0;
  double network_density = 0.1;
  double weight_min = 0.0;
  double weight_max = 0.6;

  // broadcast task
  int followers = 10;
  double broadcaster_rate = 1.0;
  double competitor_rate = 0.4;
  double competitor_excitation = 0.8;
  double competitor_decay = 1.0;
  double initial_rank = 1.0;

  // held-out evaluation
  int heldout_intervals = 10;
  int heldout_bins = 10;
  int heldout_rollouts = 50;

  // optimizer baselines
  CrossEntropyConfig ce;
  FiniteDifferenceConfig fd;
  int optimizer_rollouts = 8;

  // greedy baseline grid (best cell is reported)
  std::vector<double> greedy_thresholds = {1, 2, 3, 4, 5};
  std::vector<double> greedy_observations = {1, 10, 50, 100};
  double greedy_boost = 5.0;
  double greedy_budget = -1.0;  // < 0: use the reference run's control cost

  // Consumes recognized keys; call cfg.finish() afterwards to reject
  // unknown ones.
  static ExperimentConfig from(KeyValueConfig& cfg);
  void validate() const;
};

struct MethodCell {
  std::string method;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double total_state_cost = 0.0;
  double total_control_cost = 0.0;
  double initial_cost = 0.0;
  double terminal_cost = 0.0;
  double average_rank = 0.0;  // broadcast only; NaN otherwise
  std::vector<BinDiagnostics> series;
  PiecewiseConstantPolicy executed;
  double wall_seconds = 0.0;  // logged, never written to report files
};

struct ExperimentReport {
  std::string task;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<MethodCell> cells;  // method-major, seed-minor

  const MethodCell* find(const std::string& method, std::uint64_t seed) const;
  double mean_state_cost(const std::string& method) const;
  double mean_average_rank(const std::string& method) const;
};

ExperimentReport run_opinion_study(const ExperimentConfig& config);
ExperimentReport run_broadcast_study(const ExperimentConfig& config);

// report.csv, series_<method>_<seed>.csv, policy_<method>_<seed>.csv,
// summary.txt; all byte-deterministic for a fixed (config, seed).
void write_report(const ExperimentReport& report, const std::string& out_dir);

struct HeldoutReport {
  std::vector<std::string> methods;
  int rotations = 0;
  // accuracy(method, rotation) in [0, 1]
  Eigen::MatrixXd accuracy;
  double mean_accuracy(const std::string& method) const;
};

HeldoutReport run_heldout_eval(const ExperimentConfig& config);
void write_heldout_report(const HeldoutReport& report, const std::string& out_dir);

// Fraction of interval pairs whose ordering by `predicted` agrees with the
// ordering by `actual`; ties broken by index in both orderings.
double pairwise_concordance(std::span<const double> predicted,
                            std::span<const double> actual);

// Building blocks shared with the CLI and tests.
ControlProblem make_opinion_problem(const ExperimentConfig& config,
                                    Eigen::MatrixXd* network_out = nullptr);
ControlProblem make_broadcast_problem(const ExperimentConfig& config);

}  // namespace ppctrl
