#pragma once

#include <span>

#include "fusedrive/common.hpp"
#include "fusedrive/sensors.hpp"

namespace fusedrive::apf {

struct ApfParams {
  double eta = 1.5;        // distance exponent
  double k_fx = 20.0;      // lateral force -> steering gain
  double k_fy = 10.0;      // longitudinal force -> acceleration gain
  double d_min = 1.0;      // distances below this are clamped up to it
  double d_cut = 50.0;     // obstacles at or beyond this distance exert no force
};

/// Throws ConfigError unless eta, gains > 0 and 0 < d_min < d_cut <= max sensor range.
void validate(const ApfParams& params);

struct Force {
  double x = 0.0;  // lateral, positive toward the ego's left
  double y = 0.0;  // longitudinal, positive forward
};

/// F_x = -sum d^-eta cos(theta), F_y = -sum d^-eta sin(theta) over obstacles closer than d_cut.
Force repulsive_force(std::span<const sensors::ObstacleReading> obstacles, double eta, double d_min,
                      double d_cut);

/// Steering and acceleration proportional to the force, clamped to [-1, 1].
Action apf_action(Force force, double k_fx, double k_fy);

/// Convenience: repulsive_force followed by apf_action.
Action apf_control(std::span<const sensors::ObstacleReading> obstacles, const ApfParams& params);

}  // namespace fusedrive::apf
