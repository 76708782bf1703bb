// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/thinning.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ppctrl {

namespace {
constexpr std::size_t kMaxEventsPerWindow = 10'000'000;
}

namespace detail {

void sample_thinning_into(EventSequence& seq, const HawkesModel& model,
                          double t0, double t1, RngStream& rng,
                          const ThinningOptions& opts) {
  const PiecewiseConstantPolicy* policy = opts.policy;
  std::vector<double> suffix_factor;
  if (policy) {
    if (policy->dims() != model.dims()) {
      throw std::invalid_argument("sample_thinning: policy dims mismatch");
    }
    if (!policy->covers(t0, t1)) {
      throw std::invalid_argument("sample_thinning: policy does not cover window");
    }
    suffix_factor = policy->suffix_bound_factors();
  }

  const int m = model.dims();
  const double omega = model.omega;
  Eigen::VectorXd v = (opts.init_excitation && opts.init_excitation->size() > 0)
                          ? opts.init_excitation->eval()
                          : Eigen::VectorXd::Zero(m).eval();
  if (v.size() != m) {
    throw std::invalid_argument("sample_thinning: init excitation size mismatch");
  }

  // The policy multipliers of the current bin, as a contiguous row
  // (all ones when no policy is given).
  int bin = policy ? policy->bin_index(t0) : 0;
  Eigen::VectorXd u_row = Eigen::VectorXd::Ones(m);
  auto refresh_multipliers = [&]() {
    if (policy) u_row = policy->values().row(bin).transpose();
  };
  refresh_multipliers();

  // v is exact at `snap_t` and decays uniformly afterwards, so all the
  // totals the sampler needs reduce to four cached dot products:
  //   bound total  = base_total + decay * excite_total
  //   controlled   = base_ctrl  + decay * excite_ctrl
  // One shared loop computes them, so a policy of all ones reproduces the
  // uncontrolled arithmetic exactly, term for term.
  double base_total = 0.0, excite_total = 0.0;
  double base_ctrl = 0.0, excite_ctrl = 0.0;
  auto refresh_sums = [&]() {
    double bt = 0.0, et = 0.0, bc = 0.0, ec = 0.0;
    for (int i = 0; i < m; ++i) {
      const double u = u_row[i];
      bt += model.mu[i];
      et += v[i];
      bc += u * model.mu[i];
      ec += opts.scale_base_only ? v[i] : u * v[i];
    }
    base_total = bt;
    excite_total = et;
    base_ctrl = bc;
    excite_ctrl = ec;
  };
  refresh_sums();

  seq.reset(m, t0, t1);
  std::size_t n_events = 0;
  double t = t0;
  double snap_t = t0;
  while (t < t1) {
    const double factor =
        policy ? suffix_factor[static_cast<std::size_t>(bin)] : 1.0;
    const double decay_t = std::exp(-omega * (t - snap_t));
    const double bound = factor * (base_total + decay_t * excite_total);
    if (!std::isfinite(bound)) {
      throw std::runtime_error("sample_thinning: non-finite intensity bound");
    }
    if (bound <= 0.0) break;  // intensity is identically zero from here on

    double candidate = t + rng.exponential() / bound;
    // Sub-ulp exponential gaps collide in floating point; keep event times
    // strictly increasing by stepping to the next representable instant.
    if (candidate <= t) {
      candidate = std::nextafter(t, std::numeric_limits<double>::infinity());
    }
    if (candidate >= t1) break;
    t = candidate;
    if (policy) {
      const int candidate_bin = policy->bin_index(t);
      if (candidate_bin != bin) {
        bin = candidate_bin;
        refresh_multipliers();
        refresh_sums();  // multiplier row changed; v snapshot is unchanged
      }
    }

    // Controlled total intensity at the candidate (left limit).
    const double decay = std::exp(-omega * (t - snap_t));
    const double total = base_ctrl + decay * excite_ctrl;

    const double accept = rng.uniform();
    if (accept * bound > total) continue;

    // Bring the excitation vector up to date only on acceptance.
    v *= decay;
    snap_t = t;

    int dim = 0;
    if (m > 1) {
      // One additional uniform picks the dimension by its intensity share.
      const double r = rng.uniform() * total;
      double cum = 0.0;
      dim = m - 1;
      for (int i = 0; i < m; ++i) {
        const double u = u_row[i];
        cum += opts.scale_base_only ? u * model.mu[i] + v[i]
                                    : u * (model.mu[i] + v[i]);
        if (r <= cum) {
          dim = i;
          break;
        }
      }
    }

    seq.append(dim, t);
    v += model.alpha.col(dim);
    refresh_sums();
    if (++n_events > kMaxEventsPerWindow) {
      throw std::runtime_error(
          "sample_thinning: event count exceeded safety cap (runaway intensity)");
    }
  }
}

EventSequence sample_thinning_unchecked(const HawkesModel& model, double t0,
                                        double t1, RngStream& rng,
                                        const ThinningOptions& opts) {
  EventSequence seq;
  sample_thinning_into(seq, model, t0, t1, rng, opts);
  return seq;
}

}  // namespace detail

EventSequence sample_thinning(const HawkesModel& model, double t0, double t1,
                              RngStream& rng, const ThinningOptions& opts) {
  model.validate();
  if (!(t0 <= t1)) throw std::domain_error("sample_thinning: t0 > t1");
  if (opts.policy) opts.policy->validate();
  return detail::sample_thinning_unchecked(model, t0, t1, rng, opts);
}

}  // namespace ppctrl
