#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fusedrive/common.hpp"

namespace fusedrive::sim {

/// Centerline polyline with a constant half width. A closed track connects
/// the last point back to the first.
struct TrackSpec {
  std::vector<Vec2> centerline;
  double half_width = 6.0;
  bool closed = false;
};

/// Throws ConfigError unless the track satisfies its invariants.
void validate(const TrackSpec& track);

/// Total arclength, including the closing segment of a closed track.
double track_length(const TrackSpec& track);

/// Oval made of two straights joined by semicircles, traversed counterclockwise
/// starting at the beginning of the bottom straight, which runs along +x from (0, 0).
TrackSpec make_oval_track(double straight_length, double radius, double half_width,
                          std::size_t arc_segments = 96);

/// Open straight track along +x from the origin.
TrackSpec make_straight_track(double length, double half_width);

struct VehicleState {
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Arclength s, signed lateral offset d (positive = left of travel), and the
/// heading of the projecting segment.
struct FrenetCoord {
  double s = 0.0;
  double d = 0.0;
  double tangent_heading = 0.0;
};

struct VehicleParams {
  double wheelbase = 2.5;
  double max_steer_angle = 0.5;
  double max_accel = 4.0;
  double max_brake = 8.0;
  double drag_coeff = 0.05;
  double v_max = 20.0;
  double body_length = 4.0;
  double body_width = 2.0;
};

void validate(const VehicleParams& params);

struct WorldState {
  VehicleState ego;
  std::vector<VehicleState> opponents;
  double sim_time = 0.0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

/// Nearest-point projection onto the centerline. Ties between segments go to
/// the lower segment index.
FrenetCoord project_to_centerline(const TrackSpec& track, Vec2 point);

/// Pose on the centerline at arclength s, shifted laterally by d. For closed
/// tracks s is taken modulo the track length; open tracks clamp s.
VehicleState pose_at(const TrackSpec& track, double s, double d, double speed = 0.0);

VehicleState step_vehicle(const VehicleState& state, Action action, double dt,
                          const VehicleParams& params);

/// Lane-following opponent: keeps lateral offset `d` and drives along the
/// centerline at constant `speed` (zero means static).
struct OpponentSpec {
  double s = 0.0;
  double d = 0.0;
  double speed = 0.0;
};

class OpponentScript {
 public:
  OpponentScript() = default;
  OpponentScript(const TrackSpec& track, std::vector<OpponentSpec> specs);

  /// Initial opponent poses.
  std::vector<VehicleState> initial_states() const;

  /// Next state of opponent `index` after `dt` seconds.
  VehicleState next(const VehicleState& current, std::size_t index, double dt) const;

  std::size_t size() const { return specs_.size(); }
  std::span<const OpponentSpec> specs() const { return specs_; }

 private:
  TrackSpec track_;
  std::vector<OpponentSpec> specs_;
};

WorldState step_world(const WorldState& world, Action ego_action, double dt,
                      const VehicleParams& params, const OpponentScript& script);

/// True iff the ego's oriented bounding box overlaps any opponent's (touching counts).
bool detect_collision(const WorldState& world, const VehicleParams& params);

/// |d| > half_width; the boundary itself is on track.
bool is_off_track(const FrenetCoord& frenet, const TrackSpec& track);

}  // namespace fusedrive::sim
