// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <Eigen/Core>
#include <vector>

#include "ppctrl/hawkes.hpp"

namespace ppctrl {

/// State dynamics driven by a point process: drift + constant diffusion per
/// state dimension + an instantaneous jump applied when an event of a given
/// process dimension fires.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual int state_dim() const = 0;
  virtual int process_dim() const = 0;
  virtual void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const = 0;
  virtual double diffusion(int state_index) const = 0;
  // Mutates x in place; the pre-jump value is what the jump rule sees.
  virtual void apply_jump(int process_index, Eigen::VectorXd& x) const = 0;

  bool has_diffusion() const {
    for (int i = 0; i < state_dim(); ++i) {
      if (diffusion(i) != 0.0) return true;
    }
    return false;
  }
};

/// Opinion dynamics: each user's opinion reverts to a personal baseline,
/// diffuses with a common volatility, and jumps by influence(i, j) times the
/// poster's pre-jump opinion when user j posts.
class OpinionModel final : public Dynamics {
 public:
  OpinionModel(Eigen::VectorXd baseline, double volatility,
               Eigen::MatrixXd influence);

  int state_dim() const override { return static_cast<int>(baseline_.size()); }
  int process_dim() const override { return state_dim(); }
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  double diffusion(int) const override { return volatility_; }
  void apply_jump(int j, Eigen::VectorXd& x) const override;

  const Eigen::VectorXd& baseline() const { return baseline_; }
  double volatility() const { return volatility_; }
  const Eigen::MatrixXd& influence() const { return influence_; }

 private:
  Eigen::VectorXd baseline_;
  double volatility_;
  Eigen::MatrixXd influence_;
};

/// Broadcast feed ranks: state j is the rank of the broadcaster's latest
/// post in follower feed j. A post by the competitor process of feed j
/// pushes that rank down by one; a post by the broadcaster resets every
/// rank to one. Process dimensions are feeds 0..F-1, broadcaster F (so a
/// same-instant tie is resolved competitor-first by dimension order).
class BroadcastModel final : public Dynamics {
 public:
  BroadcastModel(int followers, double broadcaster_rate,
                 const HawkesModel& feed_model, double initial_rank = 1.0);

  int state_dim() const override { return followers_; }
  int process_dim() const override { return followers_ + 1; }
  void drift(const Eigen::VectorXd&, Eigen::VectorXd& out) const override {
    out.setZero();
  }
  double diffusion(int) const override { return 0.0; }
  void apply_jump(int j, Eigen::VectorXd& x) const override;

  int followers() const { return followers_; }
  int broadcaster_dim() const { return followers_; }
  double broadcaster_rate() const { return broadcaster_rate_; }
  double initial_rank() const { return initial_rank_; }
  Eigen::VectorXd initial_state() const {
    return Eigen::VectorXd::Constant(followers_, initial_rank_);
  }

  // Joint point process: independent per-feed Hawkes competitors plus the
  // Poisson broadcaster in the last dimension.
  const HawkesModel& point_process() const { return joint_; }
  // Dimensions the controller may scale (just the broadcaster).
  std::vector<int> controlled_dims() const { return {broadcaster_dim()}; }

 private:
  int followers_;
  double broadcaster_rate_;
  double initial_rank_;
  HawkesModel joint_;
};

/// Affine drift-diffusion system dx = (c + F x) dt + diag(g) dw, no jump
/// response; the drift-control estimator operates on its sampled paths.
/// Pair it with a zero-rate point process.
class AffineDynamics final : public Dynamics {
 public:
  AffineDynamics(Eigen::VectorXd constant, Eigen::MatrixXd linear,
                 Eigen::VectorXd diffusion);

  int state_dim() const override { return static_cast<int>(constant_.size()); }
  int process_dim() const override { return state_dim(); }
  void drift(const Eigen::VectorXd& x, Eigen::VectorXd& out) const override;
  double diffusion(int i) const override { return diffusion_[i]; }
  void apply_jump(int, Eigen::VectorXd&) const override {}

 private:
  Eigen::VectorXd constant_;
  Eigen::MatrixXd linear_;
  Eigen::VectorXd diffusion_;
};

}  // namespace ppctrl
