// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>

#include "ppctrl/event_sequence.hpp"
#include "ppctrl/hawkes.hpp"
#include "ppctrl/policy.hpp"
#include "ppctrl/rng.hpp"

namespace ppctrl {

struct ThinningOptions {
  // Multiplicative policy on the intensity; must cover the window. Null
  // means uncontrolled (identical to a policy of all ones, draw for draw).
  const PiecewiseConstantPolicy* policy = nullptr;
  // Apply the multiplier to the base rate only, leaving excitation
  // unscaled (the static base-rate controller uses this).
  bool scale_base_only = false;
  // Excitation vector at the window start (events before t0 folded in).
  const Eigen::VectorXd* init_excitation = nullptr;
};

/// Exact sampling of the (controlled) multivariate process on [t0, t1) by
/// thinning: candidates are proposed at an upper bound of the total
/// controlled intensity, accepted with probability total/bound, and
/// assigned to a dimension proportionally to the per-dimension intensity.
/// The bound is refreshed after every candidate; with a policy it is the
/// current total intensity times max(1, largest multiplier in bins
/// intersecting the remaining horizon), which dominates the controlled
/// intensity because the exponential kernel is non-increasing between
/// events.
EventSequence sample_thinning(const HawkesModel& model, double t0, double t1,
                              RngStream& rng, const ThinningOptions& opts = {});

namespace detail {
// Hot-loop variants: model and policy validity are the caller's
// responsibility (checked once per batch, not once per roll-out). The
// into-form reuses the sequence's buffers across calls.
EventSequence sample_thinning_unchecked(const HawkesModel& model, double t0,
                                        double t1, RngStream& rng,
                                        const ThinningOptions& opts = {});
void sample_thinning_into(EventSequence& seq, const HawkesModel& model,
                          double t0, double t1, RngStream& rng,
                          const ThinningOptions& opts = {});
}  // namespace detail

}  // namespace ppctrl
