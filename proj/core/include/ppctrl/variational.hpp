// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <span>
#include <vector>

#include "ppctrl/cost.hpp"
#include "ppctrl/hawkes.hpp"
#include "ppctrl/policy.hpp"
#include "ppctrl/trajectory.hpp"

namespace ppctrl {

struct ClampBounds {
  double u_min = 1e-3;
  double u_max = 1e3;
  void validate() const;
  double clamp(double u) const { return u < u_min ? u_min : (u > u_max ? u_max : u); }
};

double effective_sample_size(std::span<const double> weights);

/// Roll-outs sampled under the uncontrolled law, weighted by the optimal
/// tilting exp(-S/gamma). Log-weights are shifted so the cheapest sample
/// has weight exactly one; the shift cancels in every downstream ratio.
struct WeightedSampleBatch {
  std::vector<Trajectory> trajectories;
  std::vector<double> costs;
  std::vector<double> logweights;  // max is 0
  std::vector<double> weights;     // in (0, 1], at least one equal to 1
  double gamma = 1.0;

  int size() const { return static_cast<int>(trajectories.size()); }
  double ess() const { return effective_sample_size(weights); }
};

// Throws on a non-finite cost, naming the sample.
WeightedSampleBatch compute_weights(std::vector<Trajectory> trajectories,
                                    const CostSpec& spec);

// Same, with externally supplied per-trajectory costs (for state costs
// outside the built-in families).
WeightedSampleBatch compute_weights(std::vector<Trajectory> trajectories,
                                    std::vector<double> costs, double gamma);

struct PolicyEstimate {
  PiecewiseConstantPolicy policy;
  double ess = 0.0;
  bool low_ess_warning = false;  // ess below 1% of the sample count
};

/// Closed-form per-bin policy: weighted event count over weighted intensity
/// mass, clamped. A bin/dimension with zero weighted intensity mass is an
/// error; a zero event count clamps to u_min. Accumulation runs over
/// samples in index order with compensated sums, so results do not depend
/// on thread count anywhere upstream.
PolicyEstimate estimate_policy(const WeightedSampleBatch& batch,
                               const HawkesModel& model,
                               std::span<const double> bin_edges,
                               const ClampBounds& clamp = {});

// argmin over u > 0 of a*u - b*log(u), clamped: b / a, or u_min when b = 0.
double perbin_objective_min(double a, double b, const ClampBounds& clamp = {});

// Log likelihood ratio between the uncontrolled and controlled process
// along one realization on [a, b]:
//   sum_i [ integral (u_i - 1) lambda_i dt  -  sum_{events i} log u_i(t) ].
double likelihood_ratio_exponent(const PiecewiseConstantPolicy& policy,
                                 const HawkesModel& model,
                                 const EventSequence& events, double a,
                                 double b,
                                 const Eigen::VectorXd* init_excitation = nullptr);

}  // namespace ppctrl
