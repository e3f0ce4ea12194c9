#include <doctest.h>

#include <cmath>

#include "fusedrive/random.hpp"
#include "fusedrive/sensors.hpp"
#include "fusedrive/tracking.hpp"

using namespace fusedrive;
using namespace fusedrive::tracking;

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(validate(TrackingParams{}));
  TrackingParams p;
  p.steer_threshold = 1.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = {};
  p.brake_gain = 0.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
  p = {};
  p.heading_gain = -1.0;
  CHECK_THROWS_AS(validate(p), ConfigError);
}

TEST_CASE("steering examples") {
  const TrackingParams p;
  CHECK(tracking_steer(0, 0, p) == 0.0);
  CHECK(tracking_steer(0.1, 0.05, p) == doctest::Approx(-0.418));
  CHECK(tracking_steer(-0.1, -0.05, p) == -tracking_steer(0.1, 0.05, p));
  CHECK(tracking_steer(1.0, 1.0, p) == -1.0);
  CHECK(tracking_steer(-1.0, -1.0, p) == 1.0);
}

TEST_CASE("steering is odd and scale-consistent in the unclamped region") {
  const TrackingParams p;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double psi = rng.uniform(-0.1, 0.1);
    const double e = rng.uniform(-0.2, 0.2);
    const double s = tracking_steer(psi, e, p);
    CHECK(tracking_steer(-psi, -e, p) == -s);
    const double k = rng.uniform(0.1, 2.0);
    const double scaled = tracking_steer(k * psi, k * e, p);
    CHECK((scaled == 0.0 || s == 0.0 || (scaled > 0) == (s > 0)));
  }
}

TEST_CASE("brake rule") {
  const TrackingParams p;
  CHECK(tracking_accel(0.0, p) == 0.0);
  CHECK(tracking_accel(0.4, p) == 0.0);
  CHECK(tracking_accel(-0.3, p) == 0.0);
  CHECK(tracking_accel(0.9, p) == -1.0);
  CHECK(tracking_accel(0.6, p) == doctest::Approx(-0.4));
  double prev = 0.0;
  for (double s = 0.0; s <= 1.0; s += 0.01) {
    const double a = tracking_accel(s, p);
    CHECK(a <= 0.0);
    CHECK(a <= prev);
    CHECK(a == tracking_accel(-s, p));
    prev = a;
  }
}

TEST_CASE("closed loop on a straight track") {
  const auto track = sim::make_straight_track(200, 6);
  const sim::VehicleParams vehicle;
  const TrackingParams p;
  sim::WorldState w;
  w.ego = sim::pose_at(track, 0, 0.4 * track.half_width, 10.0);
  const sim::OpponentScript none(track, {});
  double settled_at = -1.0;
  for (int step = 0; step < 500; ++step) {
    const auto obs = sensors::observe(w, track);
    CHECK(std::abs(obs.track_pos) <= 1.0);
    if (std::abs(obs.track_pos) < 0.02 && settled_at < 0) settled_at = w.sim_time;
    if (settled_at >= 0) CHECK(std::abs(obs.track_pos) < 0.02);
    w = sim::step_world(w, tracking_control(obs.angle, obs.track_pos, p), 0.02, vehicle, none);
  }
  CHECK(settled_at >= 0.0);
  CHECK(settled_at <= 10.0);
}
