// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ppctrl/numerics.hpp"

namespace ppctrl {

FitResult fit_poisson(const EventSequence& events) {
  const double length = events.t_end() - events.t_begin();
  if (!(length > 0)) throw std::invalid_argument("fit_poisson: empty window");
  FitResult result;
  Eigen::VectorXd rates(events.dims());
  for (int i = 0; i < events.dims(); ++i) {
    rates[i] = static_cast<double>(events.times(i).size()) / length;
  }
  result.model = HawkesModel::poisson(rates);
  result.degenerate = (rates.array() == 0.0).any();
  result.log_likelihood = log_likelihood(result.model, events);
  return result;
}

namespace {

// Log-likelihood of a 1-d exponential-kernel Hawkes model in O(n) via the
// standard decay recursion. The search is restricted to the stationary
// family (branching ratio below one) and a sane kernel-decay range, so a
// sparse training window cannot yield an explosive model.
double hawkes1d_loglik(double mu, double alpha, double omega,
                       const std::vector<double>& t, double t0, double t1) {
  if (mu < 0 || alpha < 0 || omega <= 0) {
    return -std::numeric_limits<double>::infinity();
  }
  if (alpha >= 0.99 * omega || omega < 1e-3 || omega > 1e3) {
    return -std::numeric_limits<double>::infinity();
  }
  KahanSum logsum;
  double decayed = 0.0;  // sum over past events of exp(-omega (t_k - t_j))
  double prev = t0;
  for (double tk : t) {
    decayed *= std::exp(-omega * (tk - prev));
    const double lam = mu + alpha * decayed;
    if (lam <= 0.0) return -std::numeric_limits<double>::infinity();
    logsum.add(std::log(lam));
    decayed += 1.0;
    prev = tk;
  }
  KahanSum compensator;
  compensator.add(mu * (t1 - t0));
  for (double tj : t) {
    compensator.add(alpha / omega * (1.0 - std::exp(-omega * (t1 - tj))));
  }
  return logsum.value() - compensator.value();
}

}  // namespace

FitResult fit_hawkes_1d(const EventSequence& events) {
  if (events.dims() != 1) {
    throw std::invalid_argument("fit_hawkes_1d: needs a 1-d sequence");
  }
  const double t0 = events.t_begin();
  const double t1 = events.t_end();
  const double length = t1 - t0;
  if (!(length > 0)) throw std::invalid_argument("fit_hawkes_1d: empty window");
  const std::vector<double>& t = events.times(0);

  FitResult result;
  if (t.empty()) {
    result.model = HawkesModel::poisson(1, 0.0);
    result.degenerate = true;
    result.log_likelihood = 0.0;
    return result;
  }

  const double rate = static_cast<double>(t.size()) / length;
  auto loglik = [&](double mu, double alpha, double omega) {
    return hawkes1d_loglik(mu, alpha, omega, t, t0, t1);
  };

  // Multi-start coordinate search in log parameter space, tracking the best
  // candidate ever evaluated.
  double best_ll = -std::numeric_limits<double>::infinity();
  double best[3] = {rate, 0.0, 1.0};
  auto consider = [&](double mu, double alpha, double omega) {
    const double ll = loglik(mu, alpha, omega);
    if (ll > best_ll) {
      best_ll = ll;
      best[0] = mu;
      best[1] = alpha;
      best[2] = omega;
    }
    return ll;
  };

  consider(rate, 0.0, 1.0);  // Poisson fallback is always a candidate

  const double starts[][3] = {
      {rate, 0.25, 1.0},
      {0.5 * rate, 0.5, 1.0},
      {0.8 * rate, 0.1, 0.5},
      {0.2 * rate, 1.0, 2.0},
  };
  bool converged = false;
  for (const auto& start : starts) {
    double p[3] = {std::log(std::max(start[0], 1e-8)),
                   std::log(std::max(start[1], 1e-8)),
                   std::log(start[2])};
    double current = consider(std::exp(p[0]), std::exp(p[1]), std::exp(p[2]));
    for (int sweep = 0; sweep < 60; ++sweep) {
      const double before = current;
      for (int c = 0; c < 3; ++c) {
        const double lo = p[c] - 2.0, hi = p[c] + 2.0;
        p[c] = golden_section_minimize(
            [&](double x) {
              double trial[3] = {p[0], p[1], p[2]};
              trial[c] = x;
              return -consider(std::exp(trial[0]), std::exp(trial[1]),
                               std::exp(trial[2]));
            },
            lo, hi, 1e-6);
        current = consider(std::exp(p[0]), std::exp(p[1]), std::exp(p[2]));
      }
      if (std::abs(current - before) < 1e-9 * std::max(1.0, std::abs(current))) {
        converged = true;
        break;
      }
    }
  }

  HawkesModel model;
  model.mu = Eigen::VectorXd::Constant(1, best[0]);
  model.alpha = Eigen::MatrixXd::Constant(1, 1, best[1]);
  model.omega = best[2];
  result.model = std::move(model);
  result.log_likelihood = best_ll;
  result.converged = converged;
  return result;
}

FitResult fit_mle(const EventSequence& events, ModelFamily family) {
  switch (family) {
    case ModelFamily::Poisson:
      return fit_poisson(events);
    case ModelFamily::Hawkes1d:
      return fit_hawkes_1d(events);
  }
  throw std::invalid_argument("fit_mle: unknown model family");
}

ModelFamily parse_model_family(const std::string& name) {
  if (name == "poisson") return ModelFamily::Poisson;
  if (name == "hawkes1d") return ModelFamily::Hawkes1d;
  throw std::invalid_argument("unknown model family: " + name);
}

}  // namespace ppctrl
