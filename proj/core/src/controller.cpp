// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "ppctrl/numerics.hpp"
#include "ppctrl/parallel.hpp"

namespace ppctrl {

int ControlProblem::lookahead_bins() const {
  const double window = opt_window > 0 ? opt_window : horizon;
  const double width = bin_width();
  const double ratio = window / width;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument(
        "ControlProblem: optimization window must be a whole number of bins");
  }
  return static_cast<int>(n);
}

std::vector<double> ControlProblem::bin_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  const double width = bin_width();
  for (int k = 0; k <= bins; ++k) {
    edges[static_cast<std::size_t>(k)] = width * k;
  }
  edges.back() = horizon;
  return edges;
}

bool ControlProblem::is_controlled(int dim) const {
  if (controlled_dims.empty()) return true;
  return std::find(controlled_dims.begin(), controlled_dims.end(), dim) !=
         controlled_dims.end();
}

void ControlProblem::validate() const {
  if (!dynamics) throw std::invalid_argument("ControlProblem: no dynamics");
  process.validate();
  if (dynamics->process_dim() != process.dims()) {
    throw std::invalid_argument("ControlProblem: dynamics/process dims mismatch");
  }
  cost.validate(dynamics->state_dim());
  if (x0.size() != dynamics->state_dim()) {
    throw std::invalid_argument("ControlProblem: x0 dimension mismatch");
  }
  if (!(horizon > 0) || bins < 1 || samples < 1 || !(dt_euler > 0)) {
    throw std::invalid_argument("ControlProblem: bad horizon/bins/samples/dt");
  }
  const double window = opt_window > 0 ? opt_window : horizon;
  if (window > horizon + 1e-12 * horizon) {
    throw std::invalid_argument("ControlProblem: optimization window exceeds horizon");
  }
  (void)lookahead_bins();
  clamp.validate();
  for (int dim : controlled_dims) {
    if (dim < 0 || dim >= process.dims()) {
      throw std::invalid_argument("ControlProblem: controlled dim out of range");
    }
  }
}

void ControlRun::write_summary_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "bin,time,instantaneous_cost,ess,mean_multiplier\n";
  char buf[160];
  for (const BinDiagnostics& d : diagnostics) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", d.bin,
                  d.time, d.instantaneous_cost, d.ess, d.mean_multiplier);
    f << buf;
  }
}

PolicyEstimate plan_policy(const ControlProblem& problem, double t,
                           const Eigen::VectorXd& x,
                           const Eigen::VectorXd& excitation, double window,
                           std::span<const double> bin_edges,
                           std::uint64_t plan_seed) {
  problem.process.validate();
  const int count = problem.samples;
  const int bins = static_cast<int>(bin_edges.size()) - 1;
  const int m = problem.process.dims();
  const double t_end = t + window;

  std::vector<double> costs(static_cast<std::size_t>(count));

  const int workers = resolve_jobs(problem.jobs);
  std::vector<ScoredRollout> scratch(static_cast<std::size_t>(workers));
  std::vector<Eigen::MatrixXd> mass_scratch(static_cast<std::size_t>(workers));

  SimulateOptions opts;
  opts.dt_euler = problem.dt_euler;
  opts.init_excitation = excitation.size() > 0 ? &excitation : nullptr;
  const Eigen::VectorXd* init = opts.init_excitation;

  // When the per-sample count/mass tables fit comfortably in memory, they
  // are filled inside the parallel phase; otherwise (wide open-loop grids)
  // the events are kept and the tables are recomputed serially below. Both
  // paths produce identical numbers; the reduction order never changes.
  const bool precompute =
      static_cast<std::int64_t>(count) * bins * m <= (64ll << 20) / 8;
  std::vector<EventSequence> events;
  std::vector<double> counts_table, mass_table;
  if (precompute) {
    counts_table.resize(static_cast<std::size_t>(count) * bins * m);
    mass_table.resize(static_cast<std::size_t>(count) * bins * m);
  } else {
    events.resize(static_cast<std::size_t>(count));
  }

  parallel_for_indexed(count, problem.jobs, [&](int worker, std::int64_t mi) {
    ScoredRollout& ws = scratch[static_cast<std::size_t>(worker)];
    simulate_scored(
        ws, *problem.dynamics, problem.process, x, t, t_end, opts,
        problem.cost,
        derive_seed(plan_seed, "sample", static_cast<std::uint64_t>(mi)));
    costs[static_cast<std::size_t>(mi)] = ws.cost;
    if (precompute) {
      Eigen::MatrixXd& mass = mass_scratch[static_cast<std::size_t>(worker)];
      integrated_intensity_bins(problem.process, ws.events, init, bin_edges,
                                mass);
      double* counts_row =
          counts_table.data() + static_cast<std::size_t>(mi) * bins * m;
      double* mass_row =
          mass_table.data() + static_cast<std::size_t>(mi) * bins * m;
      // Column-major layout, matching the Eigen::Map in the reduction.
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k < bins; ++k) {
          counts_row[static_cast<std::size_t>(i) * bins + k] =
              ws.events.count_in(i, bin_edges[static_cast<std::size_t>(k)],
                                 bin_edges[static_cast<std::size_t>(k) + 1]);
          mass_row[static_cast<std::size_t>(i) * bins + k] = mass(k, i);
        }
      }
    } else {
      events[static_cast<std::size_t>(mi)] = ws.events;
    }
  });

  // Serial accumulation in sample order keeps the result identical for any
  // jobs value.
  double min_cost = costs[0];
  for (double s : costs) {
    if (!std::isfinite(s)) {
      throw std::runtime_error("plan_policy: non-finite roll-out cost");
    }
    min_cost = std::min(min_cost, s);
  }

  Eigen::ArrayXXd num = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd num_c = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd den = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd den_c = Eigen::ArrayXXd::Zero(bins, m);
  auto kahan_add = [](Eigen::ArrayXXd& s, Eigen::ArrayXXd& c,
                      const Eigen::ArrayXXd& value) {
    const Eigen::ArrayXXd y = value - c;
    const Eigen::ArrayXXd tt = s + y;
    c = (tt - s) - y;
    s = tt;
  };

  KahanSum wsum, wsumsq;
  Eigen::MatrixXd mass;
  Eigen::ArrayXXd counts(bins, m);
  for (int sample = 0; sample < count; ++sample) {
    const double w =
        std::exp(-(costs[static_cast<std::size_t>(sample)] - min_cost) /
                 problem.cost.gamma);
    wsum.add(w);
    wsumsq.add(w * w);
    if (precompute) {
      const double* counts_row =
          counts_table.data() + static_cast<std::size_t>(sample) * bins * m;
      const double* mass_row =
          mass_table.data() + static_cast<std::size_t>(sample) * bins * m;
      counts = Eigen::Map<const Eigen::ArrayXXd>(counts_row, bins, m);
      mass = Eigen::Map<const Eigen::MatrixXd>(mass_row, bins, m);
    } else {
      const EventSequence& ev = events[static_cast<std::size_t>(sample)];
      for (int k = 0; k < bins; ++k) {
        for (int i = 0; i < m; ++i) {
          counts(k, i) = ev.count_in(i, bin_edges[static_cast<std::size_t>(k)],
                                     bin_edges[static_cast<std::size_t>(k) + 1]);
        }
      }
      integrated_intensity_bins(problem.process, ev, init, bin_edges, mass);
    }
    kahan_add(num, num_c, w * counts);
    kahan_add(den, den_c, w * mass.array());
  }

  Eigen::MatrixXd values = Eigen::MatrixXd::Ones(bins, m);
  for (int k = 0; k < bins; ++k) {
    for (int i = 0; i < m; ++i) {
      if (!problem.is_controlled(i)) continue;
      if (den(k, i) <= 0.0) {
        throw std::runtime_error(
            "plan_policy: zero weighted intensity mass (bin " +
            std::to_string(k) + ", dim " + std::to_string(i) + ")");
      }
      values(k, i) = num(k, i) == 0.0
                         ? problem.clamp.u_min
                         : problem.clamp.clamp(num(k, i) / den(k, i));
    }
  }

  PolicyEstimate estimate;
  estimate.policy = PiecewiseConstantPolicy(
      std::vector<double>(bin_edges.begin(), bin_edges.end()),
      std::move(values));
  estimate.ess = wsumsq.value() == 0.0
                     ? 0.0
                     : wsum.value() * wsum.value() / wsumsq.value();
  estimate.low_ess_warning = estimate.ess < 0.01 * count;
  return estimate;
}

ControlRun run_feedback(const ControlProblem& problem,
                        const BinPolicyProvider& provider, std::uint64_t seed) {
  problem.validate();
  const int k_bins = problem.bins;
  const int m = problem.process.dims();
  const int n = problem.dynamics->state_dim();
  const std::vector<double> edges = problem.bin_edges();

  ControlRun run;
  run.realized.state_dim = n;
  run.realized.events.reset(m, 0.0, problem.horizon);
  run.realized.times.push_back(0.0);
  run.realized.states.insert(run.realized.states.end(), problem.x0.data(),
                             problem.x0.data() + n);
  run.diagnostics.reserve(static_cast<std::size_t>(k_bins));
  Eigen::MatrixXd executed = Eigen::MatrixXd::Ones(k_bins, m);

  Eigen::VectorXd x = problem.x0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  run.initial_cost = problem.cost.diagnostic(x);

  for (int k = 0; k < k_bins; ++k) {
    const double t_lo = edges[static_cast<std::size_t>(k)];
    const double t_hi = edges[static_cast<std::size_t>(k) + 1];

    BinDecision decision;
    try {
      decision = provider(k, t_lo, x, v, run);
    } catch (const std::exception& e) {
      run.failed = true;
      run.failed_bin = k;
      run.error = e.what();
      break;
    }
    if (decision.multipliers.size() != m || !decision.multipliers.allFinite() ||
        (decision.multipliers.array() <= 0.0).any()) {
      throw std::invalid_argument("run_feedback: provider returned bad multipliers");
    }

    BinDiagnostics diag;
    diag.bin = k;
    diag.time = t_lo;
    diag.instantaneous_cost = problem.cost.diagnostic(x);
    diag.ess = decision.ess;
    {
      double sum = 0.0;
      int cnt = 0;
      for (int i = 0; i < m; ++i) {
        if (problem.is_controlled(i)) {
          sum += decision.multipliers[i];
          ++cnt;
        }
      }
      diag.mean_multiplier = cnt > 0 ? sum / cnt : 1.0;
    }
    run.diagnostics.push_back(diag);

    PiecewiseConstantPolicy segment_policy(
        {t_lo, t_hi}, decision.multipliers.transpose());
    SimulateOptions opts;
    opts.dt_euler = problem.dt_euler;
    opts.policy = &segment_policy;
    opts.scale_base_only = problem.scale_base_only;
    opts.init_excitation = &v;

    Trajectory segment;
    try {
      simulate_trajectory_into(segment, *problem.dynamics, problem.process, x,
                               t_lo, t_hi, opts,
                               derive_seed(seed, "exec",
                                           static_cast<std::uint64_t>(k)));
    } catch (const std::exception& e) {
      run.failed = true;
      run.failed_bin = k;
      run.error = e.what();
      break;
    }

    executed.row(k) = decision.multipliers.transpose();
    for (int p = 1; p < segment.points(); ++p) {
      run.realized.times.push_back(segment.times[static_cast<std::size_t>(p)]);
    }
    run.realized.states.insert(
        run.realized.states.end(),
        segment.states.begin() + n,  // first point duplicates the previous state
        segment.states.end());
    run.realized.noise.insert(run.realized.noise.end(), segment.noise.begin(),
                              segment.noise.end());
    for (int i = 0; i < m; ++i) {
      for (double te : segment.events.times(i)) run.realized.events.append(i, te);
    }

    x = segment.state(segment.points() - 1);
    v = evolve_excitation(problem.process, v, segment.events, t_lo, t_hi);
  }

  run.executed = PiecewiseConstantPolicy(edges, std::move(executed));
  run.total_state_cost = state_cost(problem.cost, run.realized);
  run.total_control_cost =
      control_cost(run.executed, problem.process, run.realized.events, 0.0,
                   run.realized.t_end());
  run.terminal_cost = problem.cost.diagnostic(x);
  return run;
}

ControlRun run_mpc(const ControlProblem& problem, std::uint64_t seed) {
  problem.validate();
  const double window =
      problem.opt_window > 0 ? problem.opt_window : problem.horizon;
  const double width = problem.bin_width();
  auto provider = [&problem, seed, window, width](
                      int k, double t, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& v, const ControlRun&) {
    const double edges[2] = {t, t + width};
    const PolicyEstimate estimate = plan_policy(
        problem, t, x, v, window, std::span<const double>(edges, 2),
        derive_seed(seed, "plan", static_cast<std::uint64_t>(k)));
    BinDecision decision;
    decision.multipliers = estimate.policy.values().row(0).transpose();
    decision.ess = estimate.ess;
    return decision;
  };
  return run_feedback(problem, provider, seed);
}

ControlRun run_openloop(const ControlProblem& problem, std::uint64_t seed) {
  problem.validate();
  const std::vector<double> edges = problem.bin_edges();
  const PolicyEstimate estimate =
      plan_policy(problem, 0.0, problem.x0,
                  Eigen::VectorXd::Zero(problem.process.dims()),
                  problem.horizon, edges, derive_seed(seed, "plan", 0));
  auto provider = [&estimate](int k, double, const Eigen::VectorXd&,
                              const Eigen::VectorXd&, const ControlRun&) {
    BinDecision decision;
    decision.multipliers = estimate.policy.values().row(k).transpose();
    decision.ess = estimate.ess;
    return decision;
  };
  return run_feedback(problem, provider, seed);
}

ControlRun run_fixed_policy(const ControlProblem& problem,
                            const PiecewiseConstantPolicy& policy,
                            std::uint64_t seed) {
  problem.validate();
  policy.validate();
  if (policy.dims() != problem.process.dims()) {
    throw std::invalid_argument("run_fixed_policy: policy dims mismatch");
  }
  if (!policy.covers(0.0, problem.horizon)) {
    throw std::invalid_argument("run_fixed_policy: policy does not cover horizon");
  }
  const std::vector<double> edges = problem.bin_edges();
  // The policy must be constant within each execution bin.
  for (double e : policy.edges()) {
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      if (e > edges[k] && e < edges[k + 1]) {
        throw std::invalid_argument(
            "run_fixed_policy: policy switches inside an execution bin");
      }
    }
  }
  auto provider = [&policy](int, double t, const Eigen::VectorXd&,
                            const Eigen::VectorXd&, const ControlRun&) {
    BinDecision decision;
    decision.multipliers = Eigen::VectorXd(policy.dims());
    for (int i = 0; i < policy.dims(); ++i) {
      decision.multipliers[i] = policy.value(i, t);
    }
    return decision;
  };
  return run_feedback(problem, provider, seed);
}

ControlRun run_uncontrolled(const ControlProblem& problem, std::uint64_t seed) {
  return run_fixed_policy(
      problem,
      PiecewiseConstantPolicy::uniform(0.0, problem.horizon, problem.bins,
                                       problem.process.dims()),
      seed);
}

}  // namespace ppctrl
