// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/hawkes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ppctrl/numerics.hpp"

namespace ppctrl {

HawkesModel HawkesModel::poisson(Eigen::VectorXd rates) {
  HawkesModel m;
  const auto n = rates.size();
  m.mu = std::move(rates);
  m.alpha = Eigen::MatrixXd::Zero(n, n);
  m.omega = 1.0;
  return m;
}

HawkesModel HawkesModel::poisson(int dims, double rate) {
  return poisson(Eigen::VectorXd::Constant(dims, rate));
}

void HawkesModel::validate() const {
  if (mu.size() == 0) throw std::invalid_argument("HawkesModel: empty mu");
  if (alpha.rows() != mu.size() || alpha.cols() != mu.size()) {
    throw std::invalid_argument("HawkesModel: alpha shape mismatch");
  }
  if ((mu.array() < 0).any()) {
    throw std::invalid_argument("HawkesModel: negative base rate");
  }
  if ((alpha.array() < 0).any()) {
    throw std::invalid_argument("HawkesModel: negative excitation");
  }
  if (!(omega > 0) || !std::isfinite(omega)) {
    throw std::invalid_argument("HawkesModel: omega must be positive");
  }
  if (!mu.allFinite() || !alpha.allFinite()) {
    throw std::invalid_argument("HawkesModel: non-finite parameter");
  }
}

double HawkesModel::branching_spectral_radius(int max_iter, double tol) const {
  if (alpha.isZero(0.0)) return 0.0;
  const Eigen::MatrixXd b = alpha / omega;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(dims()) / std::sqrt(double(dims()));
  double radius = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = b * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    y /= norm;
    // For nonnegative matrices the dominant eigenvalue is real and the
    // Rayleigh quotient of the power iterate converges to it.
    const double next = y.dot(b * y);
    if (it > 0 && std::abs(next - radius) <= tol * std::max(1.0, next)) {
      return next;
    }
    radius = next;
    x = std::move(y);
  }
  return radius;
}

Eigen::VectorXd evolve_excitation(const HawkesModel& model,
                                  const Eigen::VectorXd& init,
                                  const EventSequence& seq, double from,
                                  double to) {
  if (!(from <= to)) throw std::domain_error("evolve_excitation: from > to");
  Eigen::VectorXd v = init.size() == 0
                          ? Eigen::VectorXd::Zero(model.dims()).eval()
                          : init;
  double t = from;
  for (const Event& e : seq.merged()) {
    if (e.time < from) continue;
    if (e.time >= to) break;
    v *= std::exp(-model.omega * (e.time - t));
    v += model.alpha.col(e.dim);
    t = e.time;
  }
  v *= std::exp(-model.omega * (to - t));
  return v;
}

double intensity_at(const HawkesModel& model, const EventSequence& events,
                    int dim, double t, const Eigen::VectorXd* init_excitation) {
  if (t < events.t_begin() || t > events.t_end()) {
    throw std::domain_error("intensity_at: time outside event window");
  }
  double value = model.mu[dim];
  if (init_excitation && init_excitation->size() > 0) {
    value += (*init_excitation)[dim] *
             std::exp(-model.omega * (t - events.t_begin()));
  }
  for (int j = 0; j < events.dims(); ++j) {
    const double a = model.alpha(dim, j);
    if (a == 0.0) continue;
    double sum = 0.0;
    for (double tj : events.times(j)) {
      if (tj >= t) break;  // left limit
      sum += std::exp(-model.omega * (t - tj));
    }
    value += a * sum;
  }
  return value;
}

double integrated_intensity(const HawkesModel& model,
                            const EventSequence& events, int dim, double a,
                            double b, const Eigen::VectorXd* init_excitation) {
  if (a > b) throw std::domain_error("integrated_intensity: a > b");
  if (a < events.t_begin() || b > events.t_end()) {
    throw std::domain_error("integrated_intensity: range outside window");
  }
  const double w = model.omega;
  double total = model.mu[dim] * (b - a);
  if (init_excitation && init_excitation->size() > 0) {
    const double t0 = events.t_begin();
    total += (*init_excitation)[dim] / w *
             (std::exp(-w * (a - t0)) - std::exp(-w * (b - t0)));
  }
  for (int j = 0; j < events.dims(); ++j) {
    const double aij = model.alpha(dim, j);
    if (aij == 0.0) continue;
    KahanSum sum;
    for (double tj : events.times(j)) {
      if (tj >= b) break;
      const double lo = std::max(a, tj);
      sum.add(std::exp(-w * (lo - tj)) - std::exp(-w * (b - tj)));
    }
    total += aij / w * sum.value();
  }
  return total;
}

void integrated_intensity_bins(const HawkesModel& model,
                               const EventSequence& events,
                               const Eigen::VectorXd* init_excitation,
                               std::span<const double> edges,
                               Eigen::MatrixXd& out) {
  const int bins = static_cast<int>(edges.size()) - 1;
  const int m = model.dims();
  if (bins < 1) throw std::invalid_argument("integrated_intensity_bins: no bins");
  if (edges.front() < events.t_begin() || edges.back() > events.t_end()) {
    throw std::domain_error("integrated_intensity_bins: bins outside window");
  }
  out.resize(bins, m);

  const double w = model.omega;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  // Excitation at the first edge, folding in any events before it.
  Eigen::VectorXd v = evolve_excitation(
      model, (init_excitation && init_excitation->size() > 0) ? *init_excitation : zero,
      events, events.t_begin(), edges[0]);
  const std::vector<Event> merged = events.merged();
  std::size_t next = 0;
  while (next < merged.size() && merged[next].time < edges[0]) ++next;

  for (int k = 0; k < bins; ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    if (!(hi >= lo)) throw std::invalid_argument("bins: edges not increasing");
    const double span = hi - lo;
    const double decay = std::exp(-w * span);
    out.row(k) = (model.mu * span + v * ((1.0 - decay) / w)).transpose();
    // Events inside [lo, hi) contribute from their own time.
    double t = lo;
    while (next < merged.size() && merged[next].time < hi) {
      const Event& e = merged[next++];
      out.row(k) +=
          (model.alpha.col(e.dim) *
           ((1.0 - std::exp(-w * (hi - e.time))) / w))
              .transpose();
      v *= std::exp(-w * (e.time - t));
      v += model.alpha.col(e.dim);
      t = e.time;
    }
    v *= std::exp(-w * (hi - t));
  }
}

double log_likelihood(const HawkesModel& model, const EventSequence& events,
                      const Eigen::VectorXd* init_excitation) {
  const int m = model.dims();
  const double w = model.omega;
  Eigen::VectorXd v = (init_excitation && init_excitation->size() > 0)
                          ? init_excitation->eval()
                          : Eigen::VectorXd::Zero(m).eval();
  KahanSum log_term;
  double t = events.t_begin();
  for (const Event& e : events.merged()) {
    v *= std::exp(-w * (e.time - t));
    t = e.time;
    const double lam = model.mu[e.dim] + v[e.dim];  // left limit
    if (lam <= 0.0) return -std::numeric_limits<double>::infinity();
    log_term.add(std::log(lam));
    v += model.alpha.col(e.dim);
  }
  KahanSum integral;
  for (int i = 0; i < m; ++i) {
    integral.add(integrated_intensity(model, events, i, events.t_begin(),
                                      events.t_end(), init_excitation));
  }
  return log_term.value() - integral.value();
}

}  // namespace ppctrl
