#include "fusedrive/apf.hpp"

#include <algorithm>
#include <cmath>

namespace fusedrive::apf {

void validate(const ApfParams& p) {
  if (!(p.eta > 0.0)) throw ConfigError("apf eta must be positive");
  if (!(p.k_fx > 0.0) || !(p.k_fy > 0.0)) throw ConfigError("apf gains must be positive");
  if (!(p.d_min > 0.0 && p.d_min < p.d_cut && p.d_cut <= sensors::kMaxRange))
    throw ConfigError("apf distances must satisfy 0 < d_min < d_cut <= sensor range");
}

Force repulsive_force(std::span<const sensors::ObstacleReading> obstacles, double eta, double d_min,
                      double d_cut) {
  Force f;
  for (const auto& o : obstacles) {
    if (!(o.distance > 0.0)) throw ContractViolation("obstacle distance must be positive");
    if (o.distance >= d_cut) continue;
    const double magnitude = std::pow(std::max(o.distance, d_min), -eta);
    f.x -= magnitude * o.cos_bearing;
    f.y -= magnitude * o.sin_bearing;
  }
  return f;
}

Action apf_action(Force force, double k_fx, double k_fy) {
  return {clamp_unit(k_fx * force.x), clamp_unit(k_fy * force.y)};
}

Action apf_control(std::span<const sensors::ObstacleReading> obstacles, const ApfParams& p) {
  return apf_action(repulsive_force(obstacles, p.eta, p.d_min, p.d_cut), p.k_fx, p.k_fy);
}

}  // namespace fusedrive::apf
