#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fusedrive/sim.hpp"

namespace fusedrive::sensors {

inline constexpr std::size_t kSectorCount = 36;
inline constexpr double kMaxRange = 200.0;
/// Readings never drop below this, so every entry stays strictly positive.
inline constexpr double kMinRange = 1e-3;

/// Sector k is centered on forward bearing k * 10 degrees (counterclockwise,
/// i.e. toward the ego's left) and spans +/- 5 degrees around it. Sectors past
/// 180 degrees report negative bearings, so sector_bearing(36 - k) == -sector_bearing(k).
double sector_bearing(std::size_t k);

struct Observation {
  double speed_long = 0.0;  // m/s along the track tangent
  double speed_raw = 0.0;   // m/s
  double angle = 0.0;       // heading minus tangent heading, (-pi, pi]
  double track_pos = 0.0;   // d / half_width
  std::array<double, kSectorCount> opponents{};
};

/// Obstacle in the ego frame. `bearing` is measured from the lateral axis
/// (pointing to the ego's left) toward the forward axis: an obstacle on the left
/// is at 0 and one dead ahead is at pi/2.
/// The direction cosines are stored alongside so that axis-aligned and
/// mirrored readings produce exact components.
struct ObstacleReading {
  double distance = 0.0;
  double bearing = 0.0;
  double cos_bearing = 0.0;
  double sin_bearing = 1.0;

  static ObstacleReading from_bearing(double distance, double bearing);
  /// `forward_bearing` is counterclockwise from the ego's forward axis.
  static ObstacleReading from_forward_bearing(double distance, double forward_bearing);

  /// Reflection about the forward axis (bearing -> pi - bearing).
  ObstacleReading mirrored() const;
};

Observation observe(const sim::WorldState& world, const sim::TrackSpec& track);

std::vector<ObstacleReading> extract_obstacles(const Observation& obs);

/// Projected speed scaled linearly into [0, 2].
double reward(const Observation& obs, double v_max);

enum class Termination : std::uint8_t { none, collision, off_track, max_steps };

std::string_view to_string(Termination cause);

struct TerminalStatus {
  bool done = false;
  Termination cause = Termination::none;
};

/// Collision takes precedence over off-track, which takes precedence over the step budget.
/// `steps_taken` counts steps already executed in the episode.
TerminalStatus is_terminal(const sim::WorldState& world, const sim::TrackSpec& track,
                           const sim::VehicleParams& params, std::size_t steps_taken,
                           std::size_t max_steps);

}  // namespace fusedrive::sensors
