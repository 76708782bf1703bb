// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ppctrl/numerics.hpp"

namespace ppctrl {

void ClampBounds::validate() const {
  if (!(0 < u_min && u_min <= 1.0 && 1.0 <= u_max)) {
    throw std::invalid_argument("ClampBounds: need 0 < u_min <= 1 <= u_max");
  }
}

double effective_sample_size(std::span<const double> weights) {
  KahanSum sum, sumsq;
  for (double w : weights) {
    sum.add(w);
    sumsq.add(w * w);
  }
  if (sumsq.value() == 0.0) return 0.0;
  return sum.value() * sum.value() / sumsq.value();
}

WeightedSampleBatch compute_weights(std::vector<Trajectory> trajectories,
                                    std::vector<double> costs, double gamma) {
  if (trajectories.empty() || trajectories.size() != costs.size()) {
    throw std::invalid_argument("compute_weights: empty or mismatched batch");
  }
  if (!(gamma > 0)) throw std::invalid_argument("compute_weights: gamma");
  for (std::size_t m = 0; m < costs.size(); ++m) {
    if (!std::isfinite(costs[m])) {
      throw std::runtime_error("compute_weights: non-finite state cost at sample " +
                               std::to_string(m));
    }
  }
  WeightedSampleBatch batch;
  batch.gamma = gamma;
  batch.trajectories = std::move(trajectories);
  batch.costs = std::move(costs);
  double min_cost = batch.costs[0];
  for (double s : batch.costs) min_cost = std::min(min_cost, s);
  batch.logweights.resize(batch.costs.size());
  batch.weights.resize(batch.costs.size());
  for (std::size_t m = 0; m < batch.costs.size(); ++m) {
    batch.logweights[m] = -(batch.costs[m] - min_cost) / gamma;
    batch.weights[m] = std::exp(batch.logweights[m]);
  }
  return batch;
}

WeightedSampleBatch compute_weights(std::vector<Trajectory> trajectories,
                                    const CostSpec& spec) {
  std::vector<double> costs(trajectories.size());
  for (std::size_t m = 0; m < trajectories.size(); ++m) {
    costs[m] = state_cost(spec, trajectories[m]);
  }
  return compute_weights(std::move(trajectories), std::move(costs), spec.gamma);
}

double perbin_objective_min(double a, double b, const ClampBounds& clamp) {
  clamp.validate();
  if (!(a > 0)) {
    throw std::invalid_argument("perbin_objective_min: intensity mass must be > 0");
  }
  if (b < 0) {
    throw std::invalid_argument("perbin_objective_min: negative event count");
  }
  if (b == 0.0) return clamp.u_min;
  return clamp.clamp(b / a);
}

PolicyEstimate estimate_policy(const WeightedSampleBatch& batch,
                               const HawkesModel& model,
                               std::span<const double> bin_edges,
                               const ClampBounds& clamp) {
  clamp.validate();
  if (batch.size() < 1) throw std::invalid_argument("estimate_policy: empty batch");
  const int bins = static_cast<int>(bin_edges.size()) - 1;
  if (bins < 1) throw std::invalid_argument("estimate_policy: no bins");
  const int m = model.dims();

  Eigen::ArrayXXd num = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd num_c = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd den = Eigen::ArrayXXd::Zero(bins, m);
  Eigen::ArrayXXd den_c = Eigen::ArrayXXd::Zero(bins, m);
  auto kahan_add = [](Eigen::ArrayXXd& s, Eigen::ArrayXXd& c,
                      const Eigen::ArrayXXd& value) {
    const Eigen::ArrayXXd y = value - c;
    const Eigen::ArrayXXd t = s + y;
    c = (t - s) - y;
    s = t;
  };

  Eigen::MatrixXd mass;
  Eigen::ArrayXXd counts(bins, m);
  for (int sample = 0; sample < batch.size(); ++sample) {
    const Trajectory& traj = batch.trajectories[static_cast<std::size_t>(sample)];
    const double w = batch.weights[static_cast<std::size_t>(sample)];
    for (int k = 0; k < bins; ++k) {
      for (int i = 0; i < m; ++i) {
        counts(k, i) = traj.events.count_in(i, bin_edges[static_cast<std::size_t>(k)],
                                            bin_edges[static_cast<std::size_t>(k) + 1]);
      }
    }
    const Eigen::VectorXd* init = traj.init_excitation.size() > 0
                                      ? &traj.init_excitation
                                      : nullptr;
    integrated_intensity_bins(model, traj.events, init, bin_edges, mass);
    kahan_add(num, num_c, w * counts);
    kahan_add(den, den_c, w * mass.array());
  }

  Eigen::MatrixXd values(bins, m);
  for (int k = 0; k < bins; ++k) {
    for (int i = 0; i < m; ++i) {
      if (den(k, i) <= 0.0) {
        throw std::runtime_error(
            "estimate_policy: zero weighted intensity mass (bin " +
            std::to_string(k) + ", dim " + std::to_string(i) + ")");
      }
      values(k, i) = num(k, i) == 0.0 ? clamp.u_min
                                      : clamp.clamp(num(k, i) / den(k, i));
    }
  }

  PolicyEstimate estimate;
  estimate.policy = PiecewiseConstantPolicy(
      std::vector<double>(bin_edges.begin(), bin_edges.end()), std::move(values));
  estimate.ess = batch.ess();
  estimate.low_ess_warning = estimate.ess < 0.01 * batch.size();
  return estimate;
}

double likelihood_ratio_exponent(const PiecewiseConstantPolicy& policy,
                                 const HawkesModel& model,
                                 const EventSequence& events, double a,
                                 double b,
                                 const Eigen::VectorXd* init_excitation) {
  policy.validate();
  if (!policy.covers(a, b)) {
    throw std::invalid_argument("likelihood_ratio_exponent: policy does not cover range");
  }
  if (policy.dims() != model.dims()) {
    throw std::invalid_argument("likelihood_ratio_exponent: dims mismatch");
  }
  std::vector<double> edges;
  edges.push_back(a);
  for (double e : policy.edges()) {
    if (e > a && e < b) edges.push_back(e);
  }
  if (b > a) edges.push_back(b);
  if (edges.size() < 2) return 0.0;

  Eigen::MatrixXd mass;
  integrated_intensity_bins(model, events, init_excitation, edges, mass);

  KahanSum acc;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const int bin = policy.bin_index(edges[k]);
    for (int i = 0; i < model.dims(); ++i) {
      const double u = policy.values()(bin, i);
      if (u != 1.0) acc.add((u - 1.0) * mass(static_cast<int>(k), i));
    }
  }
  for (int i = 0; i < model.dims(); ++i) {
    for (double t : events.times(i)) {
      if (t < a || t >= b) continue;
      const double u = policy.value(i, t);
      if (u != 1.0) acc.add(-std::log(u));
    }
  }
  return acc.value();
}

}  // namespace ppctrl
