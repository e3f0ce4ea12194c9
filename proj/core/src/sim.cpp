#include "fusedrive/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace fusedrive::sim {

namespace {

std::size_t segment_count(const TrackSpec& track) {
  return track.closed ? track.centerline.size() : track.centerline.size() - 1;
}

Vec2 segment_end(const TrackSpec& track, std::size_t i) {
  return track.centerline[(i + 1) % track.centerline.size()];
}

}  // namespace

void validate(const TrackSpec& track) {
  if (track.centerline.size() < 2) throw ConfigError("track needs at least 2 centerline points");
  if (!(track.half_width > 0.0)) throw ConfigError("track half_width must be positive");
  for (std::size_t i = 0; i < segment_count(track); ++i) {
    if (track.centerline[i] == segment_end(track, i))
      throw ConfigError("track has coincident consecutive centerline points");
  }
}

double track_length(const TrackSpec& track) {
  double total = 0.0;
  for (std::size_t i = 0; i < segment_count(track); ++i)
    total += norm(segment_end(track, i) - track.centerline[i]);
  return total;
}

TrackSpec make_oval_track(double straight_length, double radius, double half_width,
                          std::size_t arc_segments) {
  TrackSpec track;
  track.half_width = half_width;
  track.closed = true;
  constexpr double pi = std::numbers::pi;
  // Bottom straight along +x, then the right semicircle turning left.
  track.centerline.push_back({0.0, 0.0});
  const Vec2 right_center{straight_length, radius};
  for (std::size_t k = 0; k < arc_segments; ++k) {
    const double a = -pi / 2.0 + pi * static_cast<double>(k) / static_cast<double>(arc_segments);
    track.centerline.push_back({right_center.x + radius * std::cos(a), right_center.y + radius * std::sin(a)});
  }
  const Vec2 left_center{0.0, radius};
  for (std::size_t k = 0; k < arc_segments; ++k) {
    const double a = pi / 2.0 + pi * static_cast<double>(k) / static_cast<double>(arc_segments);
    track.centerline.push_back({left_center.x + radius * std::cos(a), left_center.y + radius * std::sin(a)});
  }
  return track;
}

TrackSpec make_straight_track(double length, double half_width) {
  return TrackSpec{{{0.0, 0.0}, {length, 0.0}}, half_width, false};
}

void validate(const VehicleParams& p) {
  const std::array<double, 8> values{p.wheelbase, p.max_steer_angle, p.max_accel, p.max_brake,
                                     p.drag_coeff, p.v_max, p.body_length, p.body_width};
  for (double v : values)
    if (!(v > 0.0)) throw ConfigError("vehicle parameters must all be positive");
  if (p.max_steer_angle >= std::numbers::pi / 2.0)
    throw ConfigError("max_steer_angle must be below pi/2");
}

FrenetCoord project_to_centerline(const TrackSpec& track, Vec2 point) {
  if (track.centerline.size() < 2) throw ConfigError("track needs at least 2 centerline points");

  double best_dist2 = std::numeric_limits<double>::infinity();
  FrenetCoord best;
  double arclength = 0.0;
  for (std::size_t i = 0; i < segment_count(track); ++i) {
    const Vec2 a = track.centerline[i];
    const Vec2 seg = segment_end(track, i) - a;
    const double len2 = dot(seg, seg);
    const double len = std::sqrt(len2);
    const double t = std::clamp(dot(point - a, seg) / len2, 0.0, 1.0);
    const Vec2 foot = a + t * seg;
    const Vec2 offset = point - foot;
    const double dist2 = dot(offset, offset);
    if (dist2 < best_dist2) {
      best_dist2 = dist2;
      const double dist = std::sqrt(dist2);
      best.s = arclength + t * len;
      best.d = cross(seg, offset) < 0.0 ? -dist : dist;
      best.tangent_heading = std::atan2(seg.y, seg.x);
    }
    arclength += len;
  }
  if (track.closed && best.s >= arclength) best.s = std::fmod(best.s, arclength);
  return best;
}

VehicleState pose_at(const TrackSpec& track, double s, double d, double speed) {
  const double total = track_length(track);
  if (track.closed) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  const std::size_t n = segment_count(track);
  double start = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = track.centerline[i];
    const Vec2 seg = segment_end(track, i) - a;
    const double len = norm(seg);
    if (s <= start + len || i + 1 == n) {
      const double t = std::clamp((s - start) / len, 0.0, 1.0);
      const Vec2 left{-seg.y / len, seg.x / len};
      return VehicleState{a + t * seg + d * left, std::atan2(seg.y, seg.x), speed};
    }
    start += len;
  }
  return {};
}

VehicleState step_vehicle(const VehicleState& state, Action action, double dt,
                          const VehicleParams& params) {
  VehicleState next = state;
  const double v = state.speed;
  const double psi = state.heading;
  next.position.x += v * std::cos(psi) * dt;
  next.position.y += v * std::sin(psi) * dt;
  next.heading = wrap_angle(psi + (v / params.wheelbase) * std::tan(params.max_steer_angle * action.steer) * dt);
  const double accel_cmd = action.accel >= 0.0 ? params.max_accel * action.accel : params.max_brake * action.accel;
  next.speed = std::clamp(v + (accel_cmd - params.drag_coeff * v) * dt, 0.0, params.v_max);
  return next;
}

OpponentScript::OpponentScript(const TrackSpec& track, std::vector<OpponentSpec> specs)
    : track_(track), specs_(std::move(specs)) {}

std::vector<VehicleState> OpponentScript::initial_states() const {
  std::vector<VehicleState> states;
  states.reserve(specs_.size());
  for (const auto& spec : specs_) states.push_back(pose_at(track_, spec.s, spec.d, spec.speed));
  return states;
}

VehicleState OpponentScript::next(const VehicleState& current, std::size_t index, double dt) const {
  const OpponentSpec& spec = specs_.at(index);
  if (spec.speed == 0.0) return current;
  const FrenetCoord here = project_to_centerline(track_, current.position);
  return pose_at(track_, here.s + spec.speed * dt, spec.d, spec.speed);
}

WorldState step_world(const WorldState& world, Action ego_action, double dt,
                      const VehicleParams& params, const OpponentScript& script) {
  WorldState next;
  next.ego = step_vehicle(world.ego, ego_action, dt, params);
  next.opponents.reserve(world.opponents.size());
  for (std::size_t i = 0; i < world.opponents.size(); ++i)
    next.opponents.push_back(script.next(world.opponents[i], i, dt));
  next.sim_time = world.sim_time + dt;
  return next;
}

namespace {

struct Box {
  Vec2 center;
  Vec2 axis_long;
  Vec2 axis_lat;
  double half_length;
  double half_width;
};

Box body_box(const VehicleState& s, const VehicleParams& p) {
  const Vec2 fwd{std::cos(s.heading), std::sin(s.heading)};
  return {s.position, fwd, {-fwd.y, fwd.x}, p.body_length / 2.0, p.body_width / 2.0};
}

double radius_along(const Box& b, Vec2 axis) {
  return b.half_length * std::abs(dot(b.axis_long, axis)) + b.half_width * std::abs(dot(b.axis_lat, axis));
}

// Separating axis test over the four box edge normals.
bool overlaps(const Box& a, const Box& b) {
  const Vec2 between = b.center - a.center;
  for (Vec2 axis : {a.axis_long, a.axis_lat, b.axis_long, b.axis_lat}) {
    if (std::abs(dot(between, axis)) > radius_along(a, axis) + radius_along(b, axis)) return false;
  }
  return true;
}

}  // namespace

bool detect_collision(const WorldState& world, const VehicleParams& params) {
  const Box ego = body_box(world.ego, params);
  return std::any_of(world.opponents.begin(), world.opponents.end(),
                     [&](const VehicleState& o) { return overlaps(ego, body_box(o, params)); });
}

bool is_off_track(const FrenetCoord& frenet, const TrackSpec& track) {
  return std::abs(frenet.d) > track.half_width;
}

}  // namespace fusedrive::sim
