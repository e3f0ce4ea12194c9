#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fusedrive/harness/config.hpp"
#include "fusedrive/harness/episode.hpp"

namespace fusedrive::harness {

struct TrainEpisodeMetrics {
  std::size_t episode = 0;
  double total_return = 0.0;
  std::size_t steps = 0;
  sensors::Termination cause = sensors::Termination::none;
  double critic_loss = 0.0;  // mean over the episode's updates; NaN before training starts
  double mean_q = 0.0;       // likewise
};

struct TrainResult {
  std::vector<TrainEpisodeMetrics> episodes;
  std::filesystem::path metrics_path;
  std::optional<std::filesystem::path> checkpoint_path;
};

/// Policy-only training on the (opponent-free) training scenario. Writes
/// metrics.csv and, when at least one episode ran, agent.ckpt into `out_dir`.
/// Progress lines go to `log` when given.
TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct EvalResult {
  std::vector<EpisodeRecord> episodes;
  std::filesystem::path trace_path;
  std::filesystem::path summary_path;
};

/// Loads the actor from an agent checkpoint, checking it against the configured shape.
ddpg::AgentCheckpoint load_agent_for(const RunConfig& config, const std::filesystem::path& checkpoint);

/// Evaluates `mode` on one scenario without exploration, writing
/// trace_<scenario>_<mode>.csv and episodes_<scenario>_<mode>.csv. A checkpoint
/// is required for ddpg_only and fused; other modes use a zero policy command
/// when none is given.
EvalResult cmd_eval(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint, Mode mode,
                    const ScenarioSpec& scenario, const std::filesystem::path& out_dir);

struct CompareRow {
  std::string scenario;
  Mode mode = Mode::fused;
  double mean_return = 0.0;
  double min_opponent_distance = 0.0;
  sensors::Termination cause = sensors::Termination::none;  // of the last episode
  double mean_abs_track_pos = 0.0;
};

/// Runs the given modes (default: ddpg_only, apf_only, tracking_only, fused)
/// on every configured scenario and writes compare.csv.
std::vector<CompareRow> cmd_compare(const RunConfig& config, const std::filesystem::path& checkpoint,
                                    const std::filesystem::path& out_dir, std::vector<Mode> modes = {});

/// Human-readable table of a comparison.
std::string format_compare_table(const std::vector<CompareRow>& rows);

/// Copies the named columns of a trace CSV, in the requested order, to `out`.
/// Throws ConfigError on unknown columns and LoadError on malformed input.
void cmd_extract(const std::filesystem::path& trace, const std::vector<std::string>& columns, std::ostream& out);

}  // namespace fusedrive::harness
