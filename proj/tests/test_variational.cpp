// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ppctrl/thinning.hpp"
#include "ppctrl/variational.hpp"

using namespace ppctrl;

namespace {

// Events-only trajectory; enough for weighting and policy estimation.
Trajectory events_only(EventSequence events) {
  Trajectory traj;
  traj.state_dim = 0;
  traj.times = {events.t_begin(), events.t_end()};
  traj.events = std::move(events);
  return traj;
}

// Batch of counting realizations with cost = event count (or its negative).
WeightedSampleBatch tilted_count_batch(const HawkesModel& model, double t_end,
                                       double gamma, int count, double sign,
                                       std::uint64_t seed) {
  std::vector<Trajectory> trajectories;
  std::vector<double> costs;
  trajectories.reserve(count);
  costs.reserve(count);
  for (int m = 0; m < count; ++m) {
    RngStream rng(derive_seed(seed, "sample", m));
    Trajectory traj = events_only(sample_thinning(model, 0.0, t_end, rng));
    costs.push_back(sign * static_cast<double>(traj.events.total_events()));
    trajectories.push_back(std::move(traj));
  }
  return compute_weights(std::move(trajectories), std::move(costs), gamma);
}

double golden_minimize(double a, double b, double lo_in, double hi_in) {
  // Extended precision keeps the bracket honest near flat minima, where
  // double-width function comparisons would drown in rounding noise.
  auto f = [&](long double u) {
    return static_cast<long double>(a) * u -
           static_cast<long double>(b) * std::log(u);
  };
  long double lo = lo_in, hi = hi_in;
  const long double inv_phi = 0.61803398874989484820L;
  long double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  long double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 400 && (hi - lo) > 1e-13L; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

}  // namespace

TEST_CASE("equal costs give unit weights") {
  std::vector<Trajectory> trajs;
  std::vector<double> costs;
  for (int m = 0; m < 4; ++m) {
    trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
    costs.push_back(7.5);
  }
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), std::move(costs), 2.0);
  for (double w : batch.weights) CHECK(w == 1.0);
  CHECK(batch.ess() == doctest::Approx(4.0));
}

TEST_CASE("two-point weights and optimal-measure densities") {
  std::vector<Trajectory> trajs;
  trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  const double gamma = 1.0;
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), {0.0, gamma * std::log(3.0)}, gamma);
  CHECK(batch.weights[0] == 1.0);
  CHECK(batch.weights[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  // Normalized tilt densities: w / mean(w) = {1.5, 0.5}.
  const double mean_w = 0.5 * (batch.weights[0] + batch.weights[1]);
  CHECK(batch.weights[0] / mean_w == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(batch.weights[1] / mean_w == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("non-finite cost is rejected with the sample index") {
  std::vector<Trajectory> trajs;
  trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  try {
    compute_weights(std::move(trajs),
                    {1.0, std::numeric_limits<double>::infinity()}, 1.0);
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
  }
}

TEST_CASE("uniform-weight estimate is count over mass") {
  // Three samples on one unit-rate Poisson bin with counts 2, 0, 1 and
  // intensity mass 1 each: the estimate is 3/3 = 1.
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  std::vector<Trajectory> trajs;
  EventSequence two(1, 0.0, 1.0);
  two.append(0, 0.25);
  two.append(0, 0.5);
  EventSequence zero(1, 0.0, 1.0);
  EventSequence one(1, 0.0, 1.0);
  one.append(0, 0.75);
  trajs.push_back(events_only(two));
  trajs.push_back(events_only(zero));
  trajs.push_back(events_only(one));
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), {5.0, 5.0, 5.0}, 1.0);
  const double edges[2] = {0.0, 1.0};
  const PolicyEstimate est =
      estimate_policy(batch, model, std::span<const double>(edges, 2));
  CHECK(est.policy.values()(0, 0) == 1.0);
}

TEST_CASE("exponential tilting matches the enumeration oracle") {
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  const WeightedSampleBatch batch =
      tilted_count_batch(model, 1.0, 1.0, 20000, +1.0, 808);
  const double edges[2] = {0.0, 1.0};
  const PolicyEstimate est =
      estimate_policy(batch, model, std::span<const double>(edges, 2));

  // Exact Poisson enumeration of E[e^-N N] / (E[e^-N] * mass).
  double num = 0.0, den = 0.0, pmf = std::exp(-1.0);
  for (int n = 0; n <= 80; ++n) {
    num += pmf * std::exp(-double(n)) * n;
    den += pmf * std::exp(-double(n));
    pmf *= 1.0 / (n + 1);
  }
  const double exact = num / den;
  CHECK(exact == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(est.policy.values()(0, 0) == doctest::Approx(exact).epsilon(0.05));
  CHECK(std::abs(est.policy.values()(0, 0) - exact) < 0.02);
}

TEST_CASE("tilting direction follows the cost sign") {
  const HawkesModel model = HawkesModel::poisson(1, 1.5);
  const double edges[2] = {0.0, 2.0};
  const PolicyEstimate damped = estimate_policy(
      tilted_count_batch(model, 2.0, 1.0, 4000, +1.0, 333), model,
      std::span<const double>(edges, 2));
  const PolicyEstimate boosted = estimate_policy(
      tilted_count_batch(model, 2.0, 1.0, 4000, -1.0, 334), model,
      std::span<const double>(edges, 2));
  CHECK(damped.policy.values()(0, 0) < 1.0);
  CHECK(boosted.policy.values()(0, 0) > 1.0);
}

TEST_CASE("no events anywhere clamps to the lower bound") {
  const HawkesModel model = HawkesModel::poisson(1, 0.4);
  std::vector<Trajectory> trajs;
  for (int m = 0; m < 8; ++m) {
    trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  }
  const WeightedSampleBatch batch = compute_weights(
      std::move(trajs), std::vector<double>(8, 1.0), 1.0);
  const double edges[2] = {0.0, 1.0};
  ClampBounds clamp;
  const PolicyEstimate est =
      estimate_policy(batch, model, std::span<const double>(edges, 2), clamp);
  CHECK(est.policy.values()(0, 0) == clamp.u_min);
}

TEST_CASE("zero intensity mass in a bin is an error") {
  const HawkesModel model = HawkesModel::poisson(1, 0.0);
  std::vector<Trajectory> trajs;
  trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), {1.0}, 1.0);
  const double edges[2] = {0.0, 1.0};
  CHECK_THROWS_AS(
      estimate_policy(batch, model, std::span<const double>(edges, 2)),
      std::runtime_error);
}

TEST_CASE("shift invariance is bit-exact for integer costs") {
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  const double edges[2] = {0.0, 1.0};
  auto estimate_with_shift = [&](double shift) {
    std::vector<Trajectory> trajs;
    std::vector<double> costs;
    for (int m = 0; m < 3000; ++m) {
      RngStream rng(derive_seed(606, "sample", m));
      Trajectory traj = events_only(sample_thinning(model, 0.0, 1.0, rng));
      costs.push_back(static_cast<double>(traj.events.total_events()) + shift);
      trajs.push_back(std::move(traj));
    }
    const WeightedSampleBatch batch =
        compute_weights(std::move(trajs), std::move(costs), 1.0);
    return estimate_policy(batch, model, std::span<const double>(edges, 2));
  };
  const PolicyEstimate base = estimate_with_shift(0.0);
  const PolicyEstimate shifted = estimate_with_shift(1000.0);
  CHECK(base.policy == shifted.policy);
  CHECK(base.ess == shifted.ess);
}

TEST_CASE("scaling gamma and costs by a power of two is bit-exact") {
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  const double edges[2] = {0.0, 1.0};
  auto estimate_scaled = [&](double scale) {
    std::vector<Trajectory> trajs;
    std::vector<double> costs;
    for (int m = 0; m < 3000; ++m) {
      RngStream rng(derive_seed(607, "sample", m));
      Trajectory traj = events_only(sample_thinning(model, 0.0, 1.0, rng));
      costs.push_back(scale * static_cast<double>(traj.events.total_events()));
      trajs.push_back(std::move(traj));
    }
    const WeightedSampleBatch batch =
        compute_weights(std::move(trajs), std::move(costs), scale * 1.0);
    return estimate_policy(batch, model, std::span<const double>(edges, 2));
  };
  CHECK(estimate_scaled(1.0).policy == estimate_scaled(4.0).policy);
}

TEST_CASE("infinite gamma reduces to count over mass") {
  const HawkesModel model = HawkesModel::poisson(1, 2.0);
  std::vector<Trajectory> trajs;
  std::vector<double> costs;
  double total_count = 0.0;
  for (int m = 0; m < 2000; ++m) {
    RngStream rng(derive_seed(608, "sample", m));
    Trajectory traj = events_only(sample_thinning(model, 0.0, 1.0, rng));
    total_count += static_cast<double>(traj.events.total_events());
    costs.push_back(static_cast<double>(traj.events.total_events()));
    trajs.push_back(std::move(traj));
  }
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), std::move(costs), 1e12);
  const double edges[2] = {0.0, 1.0};
  const PolicyEstimate est =
      estimate_policy(batch, model, std::span<const double>(edges, 2));
  const double flat = total_count / (2000.0 * 2.0);
  CHECK(est.policy.values()(0, 0) == doctest::Approx(flat).epsilon(1e-9));
  CHECK(est.ess == doctest::Approx(2000.0).epsilon(1e-6));
}

TEST_CASE("per-bin objective minimizer") {
  ClampBounds clamp;
  CHECK(perbin_objective_min(2.0, 1.0) == 0.5);
  CHECK(perbin_objective_min(1.0, 0.0) == clamp.u_min);
  CHECK(perbin_objective_min(3.0, 6.0) == 2.0);
  CHECK_THROWS_AS(perbin_objective_min(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(perbin_objective_min(1.0, -1.0), std::invalid_argument);

  RngStream rng(515);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = 0.1 + 5.0 * rng.uniform();
    const double b = 5.0 * rng.uniform();
    const double u = perbin_objective_min(a, b, clamp);
    if (b > 0.0) {
      const double oracle = golden_minimize(a, b, clamp.u_min, clamp.u_max);
      CHECK(u == doctest::Approx(oracle).epsilon(1e-8));
    }
    auto f = [&](double x) { return a * x - b * std::log(x); };
    CHECK(f(u) <= f(clamp.u_min) + 1e-12);
    CHECK(f(u) <= f(clamp.u_max) + 1e-12);
  }
}

TEST_CASE("likelihood ratio exponent closed forms") {
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  EventSequence one(1, 0.0, 1.0);
  one.append(0, 0.5);

  const PiecewiseConstantPolicy ones =
      PiecewiseConstantPolicy::uniform(0.0, 1.0, 3, 1, 1.0);
  CHECK(likelihood_ratio_exponent(ones, model, one, 0.0, 1.0) == 0.0);

  const PiecewiseConstantPolicy twos =
      PiecewiseConstantPolicy::uniform(0.0, 1.0, 1, 1, 2.0);
  CHECK(likelihood_ratio_exponent(twos, model, one, 0.0, 1.0) ==
        doctest::Approx(1.0 - std::log(2.0)).epsilon(1e-14));

  EventSequence none(1, 0.0, 1.0);
  CHECK(likelihood_ratio_exponent(twos, model, none, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("variational bound holds on the enumerable counting toy") {
  // Truncated unit-rate Poisson pmf; S(n) = n; gamma = 1. For any tilt
  // Q_c proportional to P exp(-c n):
  //   -gamma log E_P[exp(-S/gamma)] <= E_Q[S] + gamma KL(Q || P),
  // with equality at c = 1/gamma.
  const int support = 21;
  const double gamma = 1.0;
  std::vector<double> p(support);
  double pmf = std::exp(-1.0), norm = 0.0;
  for (int n = 0; n < support; ++n) {
    p[static_cast<std::size_t>(n)] = pmf;
    norm += pmf;
    pmf *= 1.0 / (n + 1);
  }
  for (double& v : p) v /= norm;

  double expectation = 0.0;
  for (int n = 0; n < support; ++n) {
    expectation += p[static_cast<std::size_t>(n)] * std::exp(-n / gamma);
  }
  const double lhs = -gamma * std::log(expectation);

  int checked = 0;
  double rhs_at_optimum = 0.0;
  for (double c = -2.0; c <= 3.0001; c += 0.1) {
    std::vector<double> q(support);
    double z = 0.0;
    for (int n = 0; n < support; ++n) {
      q[static_cast<std::size_t>(n)] =
          p[static_cast<std::size_t>(n)] * std::exp(-c * n);
      z += q[static_cast<std::size_t>(n)];
    }
    double mean_s = 0.0, kl = 0.0;
    for (int n = 0; n < support; ++n) {
      q[static_cast<std::size_t>(n)] /= z;
      mean_s += q[static_cast<std::size_t>(n)] * n;
      kl += q[static_cast<std::size_t>(n)] *
            std::log(q[static_cast<std::size_t>(n)] / p[static_cast<std::size_t>(n)]);
    }
    const double rhs = mean_s + gamma * kl;
    CHECK(rhs >= lhs - 1e-12);
    if (std::abs(c - 1.0 / gamma) < 1e-9) rhs_at_optimum = rhs;
    ++checked;
  }
  CHECK(checked >= 50);
  CHECK(rhs_at_optimum == doctest::Approx(lhs).epsilon(1e-9));
}

TEST_CASE("effective sample size diagnostics") {
  std::vector<double> uniform(100, 1.0);
  CHECK(effective_sample_size(uniform) == doctest::Approx(100.0));
  std::vector<double> concentrated(100, 1e-12);
  concentrated[0] = 1.0;
  CHECK(effective_sample_size(concentrated) == doctest::Approx(1.0).epsilon(1e-6));

  // A warning fires when the ESS drops below 1% of the batch.
  std::vector<Trajectory> trajs;
  std::vector<double> costs;
  for (int m = 0; m < 200; ++m) {
    trajs.push_back(events_only(EventSequence(1, 0.0, 1.0)));
    costs.push_back(m == 0 ? 0.0 : 1000.0);
  }
  const HawkesModel model = HawkesModel::poisson(1, 1.0);
  const WeightedSampleBatch batch =
      compute_weights(std::move(trajs), std::move(costs), 1.0);
  const double edges[2] = {0.0, 1.0};
  const PolicyEstimate est =
      estimate_policy(batch, model, std::span<const double>(edges, 2));
  CHECK(est.low_ess_warning);
}
