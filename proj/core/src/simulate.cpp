// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "ppctrl/numerics.hpp"
#include "ppctrl/parallel.hpp"

namespace ppctrl {

void Trajectory::write_csv(std::ostream& out) const {
  out << "time,dim,state\n";
  char buf[96];
  for (int p = 0; p < points(); ++p) {
    for (int i = 0; i < state_dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g\n", times[p], i,
                    states[static_cast<std::size_t>(p) * state_dim + i]);
      out << buf;
    }
  }
}

void Trajectory::write_csv_file(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f);
}

namespace {

// Event-split Euler core shared by every consumer. The sink observes the
// exact same arithmetic whether it records the path or folds it into a
// running quantity, so the two uses agree bit for bit.
//
// Sink interface:
//   begin(t0, x)                 initial (possibly post-jump) state
//   pre_advance(x, h)            state at a substep start, h > 0
//   noise_row(dw, n)             the substep's Wiener increments
//   point(t, x, advanced)        state at t after drift/jumps; advanced is
//                                false when only a same-instant jump fired
template <class Sink>
Eigen::VectorXd drive_euler(const Dynamics& dynamics,
                            const std::vector<Event>& merged,
                            const Eigen::VectorXd& x0, double t0, double t1,
                            double dt_euler, RngStream& noise_rng, Sink& sink) {
  const int n = dynamics.state_dim();
  Eigen::VectorXd x = x0;
  Eigen::VectorXd fx(n);
  Eigen::VectorXd gvec(n);
  Eigen::VectorXd dw(n);
  for (int i = 0; i < n; ++i) gvec[i] = dynamics.diffusion(i);
  const bool diffusive = (gvec.array() != 0.0).any();
  if (!diffusive) dw.setZero();

  // Events at exactly t0 fold into the initial state.
  std::size_t next_event = 0;
  while (next_event < merged.size() && merged[next_event].time == t0) {
    dynamics.apply_jump(merged[next_event].dim, x);
    ++next_event;
  }
  sink.begin(t0, x);

  double t = t0;
  long grid_step = 1;
  while (t < t1) {
    double grid_t = t0 + static_cast<double>(grid_step) * dt_euler;
    if (grid_t > t1) grid_t = t1;
    const double event_t = next_event < merged.size()
                               ? merged[next_event].time
                               : std::numeric_limits<double>::infinity();
    const double target = std::min(grid_t, event_t);

    const bool advanced = target > t;
    if (advanced) {
      const double h = target - t;
      sink.pre_advance(x, h);
      dynamics.drift(x, fx);
      if (diffusive) {
        const double sq = std::sqrt(h);
        for (int i = 0; i < n; ++i) {
          dw[i] = gvec[i] != 0.0 ? sq * noise_rng.normal() : 0.0;
        }
        sink.noise_row(dw.data(), n);
        x += h * fx + gvec.cwiseProduct(dw);
      } else {
        sink.noise_row(dw.data(), n);
        x += h * fx;
      }
    }

    while (next_event < merged.size() && merged[next_event].time == target) {
      dynamics.apply_jump(merged[next_event].dim, x);
      ++next_event;
    }
    if (target == grid_t) ++grid_step;
    t = target;
    sink.point(t, x, advanced);

    // Any NaN or infinity in x makes the sum non-finite.
    if (!std::isfinite(x.sum())) {
      throw SimulationError("simulate: non-finite state", t);
    }
  }
  return x;
}

struct RecordingSink {
  Trajectory& traj;
  int n;

  void begin(double t0, const Eigen::VectorXd& x) {
    traj.times.push_back(t0);
    traj.states.insert(traj.states.end(), x.data(), x.data() + n);
  }
  void pre_advance(const Eigen::VectorXd&, double) {}
  void noise_row(const double* dw, int count) {
    traj.noise.insert(traj.noise.end(), dw, dw + count);
  }
  void point(double t, const Eigen::VectorXd& x, bool advanced) {
    if (advanced) {
      traj.times.push_back(t);
      traj.states.insert(traj.states.end(), x.data(), x.data() + n);
    } else {
      // Same-instant jump: the recorded state at an event time is the
      // post-jump state.
      std::copy(x.data(), x.data() + n,
                traj.states.end() - static_cast<std::ptrdiff_t>(n));
    }
  }
};

struct CostSink {
  const CostSpec& spec;
  KahanSum acc;

  void begin(double, const Eigen::VectorXd&) {}
  void pre_advance(const Eigen::VectorXd& x, double h) {
    acc.add(spec.running(x) * h);
  }
  void noise_row(const double*, int) {}
  void point(double, const Eigen::VectorXd&, bool) {}
};

void sample_window_events(EventSequence& out, const HawkesModel& process,
                          double t0, double t1, const SimulateOptions& opts,
                          std::uint64_t seed, RngStream& noise_rng_out) {
  RngStream event_rng(derive_seed(seed, "events"));
  noise_rng_out = RngStream(derive_seed(seed, "noise"));
  ThinningOptions thin;
  thin.policy = opts.policy;
  thin.scale_base_only = opts.scale_base_only;
  thin.init_excitation = opts.init_excitation;
  detail::sample_thinning_into(out, process, t0, t1, event_rng, thin);
}

void check_simulation_inputs(const Dynamics& dynamics,
                             const HawkesModel& process,
                             const Eigen::VectorXd& x0, double t0, double t1,
                             const SimulateOptions& opts) {
  if (!(opts.dt_euler > 0)) {
    throw std::invalid_argument("simulate: dt_euler must be positive");
  }
  if (!(t0 < t1)) throw std::invalid_argument("simulate: empty window");
  if (dynamics.process_dim() != process.dims()) {
    throw std::invalid_argument("simulate: dynamics/process dims mismatch");
  }
  if (x0.size() != dynamics.state_dim() || !x0.allFinite()) {
    throw std::invalid_argument("simulate: bad initial state");
  }
  if (process.dims() != static_cast<int>(process.mu.size()) ||
      process.alpha.rows() != process.mu.size() ||
      process.alpha.cols() != process.mu.size() || !(process.omega > 0)) {
    throw std::invalid_argument("simulate: malformed process model");
  }
  if (opts.policy) {
    if (!opts.policy->covers(t0, t1)) {
      throw std::invalid_argument("simulate: policy does not cover window");
    }
  }
}

}  // namespace

void simulate_trajectory_into(Trajectory& traj, const Dynamics& dynamics,
                              const HawkesModel& process,
                              const Eigen::VectorXd& x0, double t0, double t1,
                              const SimulateOptions& opts, std::uint64_t seed) {
  check_simulation_inputs(dynamics, process, x0, t0, t1, opts);

  RngStream noise_rng(0);
  sample_window_events(traj.events, process, t0, t1, opts, seed, noise_rng);
  const std::vector<Event> merged = traj.events.merged();

  const int n = dynamics.state_dim();
  traj.state_dim = n;
  traj.init_excitation =
      (opts.init_excitation && opts.init_excitation->size() > 0)
          ? *opts.init_excitation
          : Eigen::VectorXd();
  traj.times.clear();
  traj.states.clear();
  traj.noise.clear();
  const std::size_t expected =
      merged.size() + static_cast<std::size_t>((t1 - t0) / opts.dt_euler) + 2;
  traj.times.reserve(expected);
  traj.states.reserve(expected * static_cast<std::size_t>(n));
  traj.noise.reserve(expected * static_cast<std::size_t>(n));

  RecordingSink sink{traj, n};
  drive_euler(dynamics, merged, x0, t0, t1, opts.dt_euler, noise_rng, sink);
}

Trajectory simulate_trajectory(const Dynamics& dynamics,
                               const HawkesModel& process,
                               const Eigen::VectorXd& x0, double t0, double t1,
                               const SimulateOptions& opts,
                               std::uint64_t seed) {
  Trajectory traj;
  simulate_trajectory_into(traj, dynamics, process, x0, t0, t1, opts, seed);
  return traj;
}

void simulate_scored(ScoredRollout& out, const Dynamics& dynamics,
                     const HawkesModel& process, const Eigen::VectorXd& x0,
                     double t0, double t1, const SimulateOptions& opts,
                     const CostSpec& spec, std::uint64_t seed) {
  check_simulation_inputs(dynamics, process, x0, t0, t1, opts);
  RngStream noise_rng(0);
  sample_window_events(out.events, process, t0, t1, opts, seed, noise_rng);
  out.events.merged_into(out.merged_scratch);
  const std::vector<Event>& merged = out.merged_scratch;
  CostSink sink{spec};
  out.final_state =
      drive_euler(dynamics, merged, x0, t0, t1, opts.dt_euler, noise_rng, sink);
  // Through the same accumulator as state_cost, for bit equality.
  sink.acc.add(spec.terminal(out.final_state));
  out.cost = sink.acc.value();
}

std::vector<Trajectory> batch_sample(const Dynamics& dynamics,
                                     const HawkesModel& process,
                                     const Eigen::VectorXd& x0, double t0,
                                     double t1, const SimulateOptions& opts,
                                     int count, std::uint64_t master_seed,
                                     int jobs) {
  if (count < 1) throw std::invalid_argument("batch_sample: count must be >= 1");
  process.validate();
  if (opts.policy) opts.policy->validate();
  std::vector<Trajectory> out(static_cast<std::size_t>(count));
  parallel_for(count, jobs, [&](std::int64_t m) {
    try {
      simulate_trajectory_into(out[static_cast<std::size_t>(m)], dynamics,
                               process, x0, t0, t1, opts,
                               derive_seed(master_seed, "sample",
                                           static_cast<std::uint64_t>(m)));
    } catch (const SimulationError& e) {
      throw SimulationError(std::string(e.what()) + " (sample " +
                                std::to_string(m) + ")",
                            e.time, static_cast<int>(m));
    }
  });
  return out;
}

}  // namespace ppctrl
