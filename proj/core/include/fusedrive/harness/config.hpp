#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fusedrive/apf.hpp"
#include "fusedrive/ddpg.hpp"
#include "fusedrive/fusion.hpp"
#include "fusedrive/sim.hpp"
#include "fusedrive/tracking.hpp"

namespace fusedrive::harness {

struct EgoStart {
  double s = 0.0;
  double d = 0.0;
  double heading = 0.0;  // relative to the track tangent
  double speed = 0.0;
};

struct ScenarioSpec {
  std::string name;
  std::filesystem::path track_path;
  sim::TrackSpec track;
  EgoStart ego;
  std::vector<sim::OpponentSpec> opponents;
};

/// Start-state perturbation for randomized episodes: s uniform over the track,
/// d uniform in +/- lateral_fraction * half_width, heading uniform in +/- heading.
struct StartRandomization {
  double lateral_fraction = 0.25;
  double heading = 0.1;
};

struct RunSettings {
  std::size_t episodes = 200;
  std::size_t max_steps = 500;
  double dt = 0.02;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  std::string train_scenario;  // empty: first scenario
  std::string eval_scenario;   // empty: first scenario
  std::size_t eval_episodes = 1;
  bool train_random_start = true;
  bool eval_random_start = false;
  StartRandomization randomization;
};

struct RunConfig {
  sim::VehicleParams vehicle;
  ddpg::AgentConfig agent;
  apf::ApfParams apf;
  tracking::TrackingParams tracking;
  fusion::FusionWeights weights;
  RunSettings run;
  std::vector<ScenarioSpec> scenarios;

  const ScenarioSpec& scenario(const std::string& name) const;
  const ScenarioSpec& train_scenario() const { return scenario(run.train_scenario); }
  const ScenarioSpec& eval_scenario() const { return scenario(run.eval_scenario); }

  ddpg::FeatureScaling feature_scaling() const;
};

/// Throws ConfigError if any section violates its invariants.
void validate(const RunConfig& config);

/// Parses a JSON run configuration. Relative paths resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);

/// Parses configuration text; `base_dir` anchors relative paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

sim::TrackSpec load_track(const std::filesystem::path& path);
void save_track(const sim::TrackSpec& track, const std::filesystem::path& path);

ScenarioSpec load_scenario(const std::filesystem::path& path);

}  // namespace fusedrive::harness
