#include "fusedrive/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fusedrive::sensors {

namespace {

constexpr double kSectorWidth = 2.0 * std::numbers::pi / static_cast<double>(kSectorCount);

// Ego-relative bearing (-pi, pi] to sector index.
std::size_t sector_of(double bearing) {
  double shifted = bearing + kSectorWidth / 2.0;
  if (shifted < 0.0) shifted += 2.0 * std::numbers::pi;
  const auto k = static_cast<std::size_t>(std::floor(shifted / kSectorWidth));
  return k % kSectorCount;
}

// Worst-case distance from the track before projection stops being meaningful.
constexpr double kProjectionLimitWidths = 5.0;

}  // namespace

double sector_bearing(std::size_t k) {
  k %= kSectorCount;
  if (k <= kSectorCount / 2) return static_cast<double>(k) * kSectorWidth;
  return -static_cast<double>(kSectorCount - k) * kSectorWidth;
}

ObstacleReading ObstacleReading::from_bearing(double distance, double bearing) {
  return {distance, bearing, std::cos(bearing), std::sin(bearing)};
}

ObstacleReading ObstacleReading::from_forward_bearing(double distance, double forward_bearing) {
  return {distance, wrap_angle(std::numbers::pi / 2.0 - forward_bearing), std::sin(forward_bearing),
          std::cos(forward_bearing)};
}

ObstacleReading ObstacleReading::mirrored() const {
  return {distance, wrap_angle(std::numbers::pi - bearing), -cos_bearing, sin_bearing};
}

Observation observe(const sim::WorldState& world, const sim::TrackSpec& track) {
  const sim::FrenetCoord frenet = sim::project_to_centerline(track, world.ego.position);
  if (std::abs(frenet.d) > kProjectionLimitWidths * track.half_width)
    throw SimulationFault("ego is too far from the track to project");

  Observation obs;
  obs.angle = wrap_angle(world.ego.heading - frenet.tangent_heading);
  obs.track_pos = frenet.d / track.half_width;
  obs.speed_raw = world.ego.speed;
  obs.speed_long = world.ego.speed * std::cos(obs.angle);
  obs.opponents.fill(kMaxRange);
  for (const auto& opp : world.opponents) {
    const Vec2 rel = opp.position - world.ego.position;
    const double dist = norm(rel);
    const double bearing = dist > 0.0 ? wrap_angle(std::atan2(rel.y, rel.x) - world.ego.heading) : 0.0;
    double& slot = obs.opponents[sector_of(bearing)];
    slot = std::min(slot, std::max(dist, kMinRange));
  }
  return obs;
}

std::vector<ObstacleReading> extract_obstacles(const Observation& obs) {
  std::vector<ObstacleReading> out;
  for (std::size_t k = 0; k < kSectorCount; ++k) {
    if (obs.opponents[k] >= kMaxRange) continue;
    out.push_back(ObstacleReading::from_forward_bearing(obs.opponents[k], sector_bearing(k)));
  }
  return out;
}

double reward(const Observation& obs, double v_max) {
  const double projected = obs.speed_raw * std::cos(obs.angle) / v_max;
  return 2.0 * std::clamp(projected, 0.0, 1.0);
}

std::string_view to_string(Termination cause) {
  switch (cause) {
    case Termination::none: return "none";
    case Termination::collision: return "collision";
    case Termination::off_track: return "off_track";
    case Termination::max_steps: return "max_steps";
  }
  return "unknown";
}

TerminalStatus is_terminal(const sim::WorldState& world, const sim::TrackSpec& track,
                           const sim::VehicleParams& params, std::size_t steps_taken,
                           std::size_t max_steps) {
  if (sim::detect_collision(world, params)) return {true, Termination::collision};
  if (sim::is_off_track(sim::project_to_centerline(track, world.ego.position), track))
    return {true, Termination::off_track};
  if (steps_taken >= max_steps) return {true, Termination::max_steps};
  return {};
}

}  // namespace fusedrive::sensors
