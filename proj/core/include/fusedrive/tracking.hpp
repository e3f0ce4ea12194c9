#pragma once

#include "fusedrive/common.hpp"

namespace fusedrive::tracking {

struct TrackingParams {
  double heading_gain = 3.18;    // per radian of heading error
  double offset_gain = 2.0;      // per unit of normalized track position
  double steer_threshold = 0.4;  // |steer| above this starts braking
  double brake_gain = 2.0;
};

void validate(const TrackingParams& params);

/// Negative feedback on heading error and normalized lateral offset, clamped to [-1, 1].
/// Positive errors (heading or position left of the centerline) command a right turn.
double tracking_steer(double heading_error, double track_pos, const TrackingParams& params);

/// Braking once the steering command exceeds the threshold; never positive.
double tracking_accel(double steer, const TrackingParams& params);

inline Action tracking_control(double heading_error, double track_pos, const TrackingParams& params) {
  const double steer = tracking_steer(heading_error, track_pos, params);
  return {steer, tracking_accel(steer, params)};
}

}  // namespace fusedrive::tracking
