#include "fusedrive/fusion.hpp"

#include <cmath>

namespace fusedrive::fusion {

FusionWeights::FusionWeights(double alpha, double beta, double lambda) {
  if (!(alpha >= 0.0 && beta >= 0.0 && lambda >= 0.0)) throw ConfigError("fusion weights must be nonnegative");
  const double sum = alpha + beta + lambda;
  if (!(std::abs(sum - 1.0) <= 1e-9)) throw ConfigError("fusion weights must sum to 1");
  alpha_ = alpha / sum;
  beta_ = beta / sum;
  lambda_ = lambda / sum;
}

namespace {

bool in_unit_box(Action a) { return std::abs(a.steer) <= 1.0 && std::abs(a.accel) <= 1.0; }

}  // namespace

Action fuse(Action policy, Action field, Action tracking, const FusionWeights& w) {
  if (!in_unit_box(policy) || !in_unit_box(field) || !in_unit_box(tracking))
    throw ContractViolation("fuse inputs must lie in [-1, 1]");
  return {w.alpha() * policy.steer + w.beta() * field.steer + w.lambda() * tracking.steer,
          w.alpha() * policy.accel + w.beta() * field.accel + w.lambda() * tracking.accel};
}

std::vector<double> policy_features(const sensors::Observation& obs, const ddpg::FeatureScaling& s) {
  return {obs.speed_long / s.speed_scale, obs.speed_raw / s.speed_scale, obs.angle / s.angle_scale,
          obs.track_pos / s.track_pos_scale};
}

ControllerBreakdown hybrid_step(const sensors::Observation& obs, Action policy_action,
                                const HybridController& c) {
  ControllerBreakdown out;
  out.policy = {clamp_unit(policy_action.steer), clamp_unit(policy_action.accel)};
  const auto obstacles = sensors::extract_obstacles(obs);
  out.field = apf::apf_control(obstacles, c.apf);
  out.tracking = tracking::tracking_control(obs.angle, obs.track_pos, c.tracking);
  out.fused = fuse(out.policy, out.field, out.tracking, c.weights);
  return out;
}

ControllerBreakdown hybrid_step(const sensors::Observation& obs, const HybridController& c) {
  if (c.actor == nullptr) throw ContractViolation("hybrid controller has no actor");
  const auto a = nn::predict(*c.actor, policy_features(obs, c.scaling));
  return hybrid_step(obs, Action{a.at(0), a.at(1)}, c);
}

}  // namespace fusedrive::fusion
