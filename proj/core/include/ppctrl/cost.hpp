// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>

#include "ppctrl/hawkes.hpp"
#include "ppctrl/policy.hpp"
#include "ppctrl/trajectory.hpp"

namespace ppctrl {

enum class CostKind {
  LeastSquares,   // steer the state to a target: q = |x - a|^2
  InfluenceMax,   // maximize total state: q = -sum_i x_i
  BroadcastRank,  // keep feed ranks low: q = sum_j x_j
};

/// State-cost specification plus the state/control trade-off gamma; every
/// consumer of the cost needs the pair, so they travel together.
struct CostSpec {
  CostKind kind = CostKind::LeastSquares;
  Eigen::VectorXd target;  // LeastSquares only
  double gamma = 1.0;

  void validate(int state_dim) const;

  double running(const Eigen::Map<const Eigen::VectorXd>& x) const;
  double running(const Eigen::VectorXd& x) const;
  double terminal(const Eigen::Map<const Eigen::VectorXd>& x) const;
  double terminal(const Eigen::VectorXd& x) const;

  // Scalar progress readout for diagnostics series: |x - a| for least
  // squares, mean rank for broadcasting, -sum x for influence.
  double diagnostic(const Eigen::VectorXd& x) const;
};

// Terminal cost at the last recorded point plus a left-endpoint Riemann sum
// of the running cost over the recorded grid (event points included,
// weighted by the actual sub-interval lengths; the final point carries no
// running-cost weight).
double state_cost(const CostSpec& spec, const Trajectory& traj);

// Pathwise control cost of a multiplicative policy along one realization:
// the integral over [a, b] of sum_i (log u_i + 1/u_i - 1) u_i lambda_i,
// evaluated in closed form per bin on the realization's intensity. Zero iff
// every multiplier meeting positive intensity mass is one; expectation over
// paths is the caller's job.
double control_cost(const PiecewiseConstantPolicy& policy,
                    const HawkesModel& model, const EventSequence& events,
                    double a, double b,
                    const Eigen::VectorXd* init_excitation = nullptr);

}  // namespace ppctrl
