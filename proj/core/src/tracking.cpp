#include "fusedrive/tracking.hpp"

#include <algorithm>
#include <cmath>

namespace fusedrive::tracking {

void validate(const TrackingParams& p) {
  if (p.heading_gain < 0.0 || p.offset_gain < 0.0) throw ConfigError("tracking gains must be nonnegative");
  if (!(p.steer_threshold > 0.0 && p.steer_threshold < 1.0))
    throw ConfigError("tracking steer_threshold must lie in (0, 1)");
  if (!(p.brake_gain > 0.0)) throw ConfigError("tracking brake_gain must be positive");
}

double tracking_steer(double heading_error, double track_pos, const TrackingParams& p) {
  return clamp_unit(-(p.heading_gain * heading_error + p.offset_gain * track_pos));
}

double tracking_accel(double steer, const TrackingParams& p) {
  const double excess = std::max(0.0, std::abs(clamp_unit(steer)) - p.steer_threshold);
  return excess > 0.0 ? std::max(-1.0, -p.brake_gain * excess) : 0.0;
}

}  // namespace fusedrive::tracking
