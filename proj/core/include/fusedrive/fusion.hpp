#pragma once

#include <vector>

#include "fusedrive/apf.hpp"
#include "fusedrive/common.hpp"
#include "fusedrive/ddpg.hpp"
#include "fusedrive/nn.hpp"
#include "fusedrive/sensors.hpp"
#include "fusedrive/tracking.hpp"

namespace fusedrive::fusion {

/// Convex weights for the policy (alpha), potential-field (beta) and
/// path-tracking (lambda) commands.
class FusionWeights {
 public:
  /// Table defaults 0.4 / 0.3 / 0.3.
  FusionWeights() = default;

  /// Throws ConfigError if any weight is negative or the sum is off 1 by more
  /// than 1e-9. Stored values are divided by their sum.
  FusionWeights(double alpha, double beta, double lambda);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double lambda() const { return lambda_; }

 private:
  double alpha_ = 0.4;
  double beta_ = 0.3;
  double lambda_ = 0.3;
};

struct ControllerBreakdown {
  Action policy;    // (delta_l, tau_l)
  Action field;     // (delta_f, tau_f)
  Action tracking;  // (delta_p, tau_p)
  Action fused;     // (delta, tau)
};

/// delta = alpha*delta_l + beta*delta_f + lambda*delta_p, and likewise for tau.
/// Throws ContractViolation if any sub-action component lies outside [-1, 1].
Action fuse(Action policy, Action field, Action tracking, const FusionWeights& w);

/// Network input built from the non-opponent observation fields:
/// {speed_long, speed_raw, angle, track_pos}, each divided by its scale.
inline constexpr std::size_t kPolicyFeatureCount = 4;
std::vector<double> policy_features(const sensors::Observation& obs, const ddpg::FeatureScaling& scaling);

struct HybridController {
  const nn::MlpParams* actor = nullptr;
  ddpg::FeatureScaling scaling;
  apf::ApfParams apf;
  tracking::TrackingParams tracking;
  FusionWeights weights;
};

/// Opponent ranges feed the potential field; the remaining fields feed the
/// actor and the path tracker. All three commands are fused.
ControllerBreakdown hybrid_step(const sensors::Observation& obs, const HybridController& controller);

/// Same routing, with the policy command supplied by the caller.
ControllerBreakdown hybrid_step(const sensors::Observation& obs, Action policy_action,
                                const HybridController& controller);

}  // namespace fusedrive::fusion
