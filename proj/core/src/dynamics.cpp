// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/dynamics.hpp"

#include <stdexcept>

namespace ppctrl {

OpinionModel::OpinionModel(Eigen::VectorXd baseline, double volatility,
                           Eigen::MatrixXd influence)
    : baseline_(std::move(baseline)),
      volatility_(volatility),
      influence_(std::move(influence)) {
  if (influence_.rows() != baseline_.size() ||
      influence_.cols() != baseline_.size()) {
    throw std::invalid_argument("OpinionModel: influence shape mismatch");
  }
  if (volatility_ < 0) {
    throw std::invalid_argument("OpinionModel: negative volatility");
  }
  if ((influence_.array() < 0).any()) {
    throw std::invalid_argument("OpinionModel: negative influence weight");
  }
}

void OpinionModel::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out = baseline_ - x;
}

void OpinionModel::apply_jump(int j, Eigen::VectorXd& x) const {
  const double poster_opinion = x[j];  // pre-jump value
  x += influence_.col(j) * poster_opinion;
}

BroadcastModel::BroadcastModel(int followers, double broadcaster_rate,
                               const HawkesModel& feed_model,
                               double initial_rank)
    : followers_(followers),
      broadcaster_rate_(broadcaster_rate),
      initial_rank_(initial_rank) {
  if (followers < 1) throw std::invalid_argument("BroadcastModel: no followers");
  if (broadcaster_rate < 0) {
    throw std::invalid_argument("BroadcastModel: negative broadcaster rate");
  }
  if (!(initial_rank >= 1.0)) {
    throw std::invalid_argument("BroadcastModel: initial rank must be >= 1");
  }
  if (feed_model.dims() != 1) {
    throw std::invalid_argument("BroadcastModel: feed model must be 1-d");
  }
  feed_model.validate();
  const int n = followers + 1;
  joint_.mu = Eigen::VectorXd::Zero(n);
  joint_.alpha = Eigen::MatrixXd::Zero(n, n);
  joint_.omega = feed_model.omega;
  for (int j = 0; j < followers; ++j) {
    joint_.mu[j] = feed_model.mu[0];
    joint_.alpha(j, j) = feed_model.alpha(0, 0);
  }
  joint_.mu[followers] = broadcaster_rate;
}

void BroadcastModel::apply_jump(int j, Eigen::VectorXd& x) const {
  if (j == broadcaster_dim()) {
    x.setOnes();
  } else {
    x[j] += 1.0;
  }
}

AffineDynamics::AffineDynamics(Eigen::VectorXd constant,
                               Eigen::MatrixXd linear,
                               Eigen::VectorXd diffusion)
    : constant_(std::move(constant)),
      linear_(std::move(linear)),
      diffusion_(std::move(diffusion)) {
  if (linear_.rows() != constant_.size() || linear_.cols() != constant_.size() ||
      diffusion_.size() != constant_.size()) {
    throw std::invalid_argument("AffineDynamics: shape mismatch");
  }
}

void AffineDynamics::drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out = constant_;
  out.noalias() += linear_ * x;
}

}  // namespace ppctrl
