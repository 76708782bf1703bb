// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <span>

#include "ppctrl/event_sequence.hpp"

namespace ppctrl {

/// Multivariate Hawkes model with a shared exponential kernel. An event of
/// dimension j raises the intensity of dimension i by alpha(i, j), decaying
/// at rate omega; a Poisson process is the alpha == 0 special case.
struct HawkesModel {
  Eigen::VectorXd mu;     // base rates, length M
  Eigen::MatrixXd alpha;  // M x M nonnegative excitation jumps
  double omega = 1.0;     // shared kernel decay rate, > 0

  int dims() const { return static_cast<int>(mu.size()); }

  static HawkesModel poisson(Eigen::VectorXd rates);
  static HawkesModel poisson(int dims, double rate);

  void validate() const;

  // Spectral radius of alpha / omega by power iteration; the process has a
  // stationary regime iff this is < 1.
  double branching_spectral_radius(int max_iter = 100, double tol = 1e-9) const;
  bool is_stationary() const { return branching_spectral_radius() < 1.0; }
};

// The excitation vector v(t) collects the kernel-weighted influence of all
// past events: lambda_i(t) = mu_i + v_i(t). With the shared exponential
// kernel it decays uniformly and jumps by alpha.col(j) at events of j, so it
// is a complete summary of history for everything downstream.

// v just before `to`, given v = init at `from` and the events of `seq` with
// times in [from, to).
Eigen::VectorXd evolve_excitation(const HawkesModel& model,
                                  const Eigen::VectorXd& init,
                                  const EventSequence& seq, double from,
                                  double to);

// Conditional intensity of dimension `dim` at time t (left limit: events at
// exactly t are excluded). `init_excitation`, when given, is v at the
// window start. Throws std::domain_error if t lies outside the window.
double intensity_at(const HawkesModel& model, const EventSequence& events,
                    int dim, double t,
                    const Eigen::VectorXd* init_excitation = nullptr);

// Closed-form integral of the intensity of `dim` over [a, b].
double integrated_intensity(const HawkesModel& model,
                            const EventSequence& events, int dim, double a,
                            double b,
                            const Eigen::VectorXd* init_excitation = nullptr);

// Per-dimension integrated intensity over the consecutive bins defined by
// `edges` (size K+1); fills `out` with shape K x M. One left-to-right sweep,
// O((K + events) * M).
void integrated_intensity_bins(const HawkesModel& model,
                               const EventSequence& events,
                               const Eigen::VectorXd* init_excitation,
                               std::span<const double> edges,
                               Eigen::MatrixXd& out);

// Log-likelihood of `events` on its window under `model`, with left-limit
// intensities. A zero intensity at an event time yields -infinity.
double log_likelihood(const HawkesModel& model, const EventSequence& events,
                      const Eigen::VectorXd* init_excitation = nullptr);

}  // namespace ppctrl
