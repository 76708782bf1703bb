// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <cmath>

#include "ppctrl/fit.hpp"
#include "ppctrl/rng.hpp"
#include "ppctrl/thinning.hpp"

using namespace ppctrl;

TEST_CASE("poisson MLE is count over length") {
  EventSequence ev(1, 0.0, 5.0);
  for (int k = 0; k < 10; ++k) ev.append(0, 0.25 + 0.45 * k);
  const FitResult fit = fit_poisson(ev);
  CHECK(fit.model.mu[0] == 2.0);
  CHECK_FALSE(fit.degenerate);
}

TEST_CASE("zero events give a degenerate boundary MLE") {
  EventSequence ev(1, 0.0, 5.0);
  const FitResult fit = fit_poisson(ev);
  CHECK(fit.model.mu[0] == 0.0);
  CHECK(fit.degenerate);
}

TEST_CASE("empty window is rejected") {
  EventSequence ev(1, 2.0, 2.0);
  CHECK_THROWS_AS(fit_poisson(ev), std::invalid_argument);
}

TEST_CASE("hawkes 1-d fit recovers simulated parameters") {
  HawkesModel truth;
  truth.mu = Eigen::VectorXd::Constant(1, 1.0);
  truth.alpha = Eigen::MatrixXd::Constant(1, 1, 0.5);
  truth.omega = 1.0;
  RngStream rng(derive_seed(2000, "fit"));
  const EventSequence ev = sample_thinning(truth, 0.0, 2000.0, rng);
  const FitResult fit = fit_hawkes_1d(ev);
  CHECK(std::abs(fit.model.mu[0] - 1.0) < 0.15);
  // The fitted candidate dominates both the truth and the Poisson fallback.
  CHECK(fit.log_likelihood >= log_likelihood(truth, ev));
  CHECK(fit.log_likelihood >= fit_poisson(ev).log_likelihood);
}

TEST_CASE("family dispatch and parsing") {
  CHECK(parse_model_family("poisson") == ModelFamily::Poisson);
  CHECK(parse_model_family("hawkes1d") == ModelFamily::Hawkes1d);
  CHECK_THROWS_AS(parse_model_family("weibull"), std::invalid_argument);
}
