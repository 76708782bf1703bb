// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ppctrl/numerics.hpp"

namespace ppctrl {

void CostSpec::validate(int state_dim) const {
  if (!(gamma > 0)) throw std::invalid_argument("CostSpec: gamma must be > 0");
  if (kind == CostKind::LeastSquares && target.size() != state_dim) {
    throw std::invalid_argument("CostSpec: target dimension mismatch");
  }
}

namespace {

template <typename Vec>
double running_impl(const CostSpec& spec, const Vec& x) {
  switch (spec.kind) {
    case CostKind::LeastSquares:
      return (x - spec.target).squaredNorm();
    case CostKind::InfluenceMax:
      return -x.sum();
    case CostKind::BroadcastRank:
      return x.sum();
  }
  return 0.0;
}

}  // namespace

double CostSpec::running(const Eigen::Map<const Eigen::VectorXd>& x) const {
  return running_impl(*this, x);
}
double CostSpec::running(const Eigen::VectorXd& x) const {
  return running_impl(*this, x);
}
double CostSpec::terminal(const Eigen::Map<const Eigen::VectorXd>& x) const {
  return running_impl(*this, x);
}
double CostSpec::terminal(const Eigen::VectorXd& x) const {
  return running_impl(*this, x);
}

double CostSpec::diagnostic(const Eigen::VectorXd& x) const {
  switch (kind) {
    case CostKind::LeastSquares:
      return (x - target).norm();
    case CostKind::InfluenceMax:
      return -x.sum();
    case CostKind::BroadcastRank:
      return x.mean();
  }
  return 0.0;
}

double state_cost(const CostSpec& spec, const Trajectory& traj) {
  if (traj.points() < 1) throw std::invalid_argument("state_cost: empty trajectory");
  spec.validate(traj.state_dim);
  KahanSum acc;
  const int last = traj.points() - 1;
  for (int p = 0; p < last; ++p) {
    const double h = traj.times[static_cast<std::size_t>(p) + 1] -
                     traj.times[static_cast<std::size_t>(p)];
    acc.add(spec.running(traj.state(p)) * h);
  }
  acc.add(spec.terminal(traj.state(last)));
  return acc.value();
}

double control_cost(const PiecewiseConstantPolicy& policy,
                    const HawkesModel& model, const EventSequence& events,
                    double a, double b,
                    const Eigen::VectorXd* init_excitation) {
  policy.validate();
  if (!policy.covers(a, b)) {
    throw std::invalid_argument("control_cost: policy does not cover range");
  }
  if (policy.dims() != model.dims()) {
    throw std::invalid_argument("control_cost: policy dims mismatch");
  }
  // Sub-edges: policy edges clipped to [a, b].
  std::vector<double> edges;
  edges.push_back(a);
  for (double e : policy.edges()) {
    if (e > a && e < b) edges.push_back(e);
  }
  if (b > a) edges.push_back(b);
  if (edges.size() < 2) return 0.0;  // zero-width range

  Eigen::MatrixXd mass;
  integrated_intensity_bins(model, events, init_excitation, edges, mass);

  KahanSum acc;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const int bin = policy.bin_index(edges[k]);
    for (int i = 0; i < model.dims(); ++i) {
      const double u = policy.values()(bin, i);
      // (log u + 1/u - 1) u = u log u + 1 - u, zero exactly at u = 1
      const double per_event = u * std::log(u) + 1.0 - u;
      if (per_event != 0.0) {
        acc.add(per_event * mass(static_cast<int>(k), i));
      }
    }
  }
  return acc.value();
}

}  // namespace ppctrl
