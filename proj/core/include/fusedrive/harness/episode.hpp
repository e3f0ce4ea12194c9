#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fusedrive/fusion.hpp"
#include "fusedrive/harness/config.hpp"
#include "fusedrive/random.hpp"
#include "fusedrive/sensors.hpp"
#include "fusedrive/sim.hpp"

namespace fusedrive::harness {

/// Which controller drives the car. `random` draws i.i.d. uniform actions and
/// serves as the learning baseline.
enum class Mode { ddpg_only, apf_only, tracking_only, fused, random };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);

/// ddpg_only (1,0,0), apf_only (0,1,0), tracking_only (0,0,1), fused = configured.
fusion::FusionWeights weights_for(Mode mode, const fusion::FusionWeights& configured);

struct EpisodeRecord {
  std::size_t episode = 0;
  double total_return = 0.0;
  std::size_t steps = 0;
  sensors::Termination cause = sensors::Termination::none;
  double min_opponent_distance = 0.0;  // center to center; +inf without opponents
  double mean_abs_track_pos = 0.0;
};

/// One episode of the simulated world with its running statistics.
class Episode {
 public:
  /// Pass `start_rng` to perturb the scenario's start state; null keeps it as specified.
  Episode(const ScenarioSpec& scenario, const sim::VehicleParams& vehicle, std::size_t max_steps, double dt,
          Rng* start_rng = nullptr, const StartRandomization& randomization = {});

  const sensors::Observation& observation() const { return obs_; }
  const sim::WorldState& world() const { return world_; }
  const sim::TrackSpec& track() const { return scenario_->track; }
  bool done() const { return status_.done; }
  std::size_t steps() const { return steps_; }

  struct StepResult {
    double reward = 0.0;
    sensors::TerminalStatus status;
  };

  /// Advances one step; the reward scores the resulting observation.
  StepResult step(Action action);

  EpisodeRecord record(std::size_t index) const;

 private:
  void note_opponent_distance();

  const ScenarioSpec* scenario_;
  sim::VehicleParams vehicle_;
  std::size_t max_steps_;
  double dt_;
  sim::OpponentScript script_;
  sim::WorldState world_;
  sensors::Observation obs_;
  sensors::TerminalStatus status_;
  std::size_t steps_ = 0;
  double total_return_ = 0.0;
  double abs_track_pos_sum_ = 0.0;
  double min_opponent_distance_;
};

/// Column names of the per-step trace, in file order.
const std::vector<std::string>& trace_columns();

class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);

  /// One row: state and observation before the step, the commands issued, and
  /// the reward and termination status that followed.
  void write(std::size_t episode, std::size_t step, const sim::WorldState& world, const sensors::Observation& obs,
             const fusion::ControllerBreakdown& commands, double reward, const sensors::TerminalStatus& status);

 private:
  std::ofstream out_;
};

/// Drives one episode under `mode`. `actor` may be null, in which case the
/// policy command is zero. `random_rng` feeds the random mode.
EpisodeRecord run_episode(const RunConfig& config, const ScenarioSpec& scenario, Mode mode,
                          const nn::MlpParams* actor, const ddpg::FeatureScaling& scaling, std::size_t index,
                          Rng* start_rng, Rng& random_rng, TraceWriter* trace);

/// Runs `count` episodes with the run's seed streams ("env" for starts,
/// "noise" for random actions).
std::vector<EpisodeRecord> run_episodes(const RunConfig& config, const ScenarioSpec& scenario, Mode mode,
                                        const nn::MlpParams* actor, const ddpg::FeatureScaling& scaling,
                                        std::size_t count, bool randomize_start, TraceWriter* trace);

/// Shortest round-trip decimal form used in every CSV the harness writes.
std::string format_number(double v);

}  // namespace fusedrive::harness
