// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <string>

#include "ppctrl/event_sequence.hpp"
#include "ppctrl/hawkes.hpp"

namespace ppctrl {

enum class ModelFamily { Poisson, Hawkes1d };

struct FitResult {
  HawkesModel model;
  double log_likelihood = 0.0;
  bool degenerate = false;  // boundary MLE (e.g. zero events)
  bool converged = true;    // search hit its iteration cap otherwise
};

// Exact Poisson MLE per dimension: rate = count / window length.
FitResult fit_poisson(const EventSequence& events);

// 1-d Hawkes fit by multi-start coordinate search on (mu, alpha, omega).
// The returned candidate dominates every point the search evaluated.
FitResult fit_hawkes_1d(const EventSequence& events);

FitResult fit_mle(const EventSequence& events, ModelFamily family);
ModelFamily parse_model_family(const std::string& name);

}  // namespace ppctrl
