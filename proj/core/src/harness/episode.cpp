#include "fusedrive/harness/episode.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace fusedrive::harness {

namespace {

constexpr std::array<std::string_view, 5> kModeNames{"ddpg_only", "apf_only", "tracking_only", "fused", "random"};

}  // namespace

std::string_view to_string(Mode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

std::optional<Mode> parse_mode(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i)
    if (kModeNames[i] == name) return static_cast<Mode>(i);
  return std::nullopt;
}

fusion::FusionWeights weights_for(Mode mode, const fusion::FusionWeights& configured) {
  switch (mode) {
    case Mode::ddpg_only:
    case Mode::random: return {1.0, 0.0, 0.0};
    case Mode::apf_only: return {0.0, 1.0, 0.0};
    case Mode::tracking_only: return {0.0, 0.0, 1.0};
    case Mode::fused: return configured;
  }
  return configured;
}

std::string format_number(double v) { return fmt::format("{}", v); }

Episode::Episode(const ScenarioSpec& scenario, const sim::VehicleParams& vehicle, std::size_t max_steps, double dt,
                 Rng* start_rng, const StartRandomization& randomization)
    : scenario_(&scenario),
      vehicle_(vehicle),
      max_steps_(max_steps),
      dt_(dt),
      script_(scenario.track, scenario.opponents),
      min_opponent_distance_(std::numeric_limits<double>::infinity()) {
  EgoStart start = scenario.ego;
  if (start_rng != nullptr) {
    const double length = sim::track_length(scenario.track);
    const double span = scenario.track.closed ? length : 0.5 * length;
    start.s = start_rng->uniform(0.0, span);
    const double lateral = randomization.lateral_fraction * scenario.track.half_width;
    start.d = start_rng->uniform(-lateral, lateral);
    start.heading = start_rng->uniform(-randomization.heading, randomization.heading);
  }
  world_.ego = sim::pose_at(scenario.track, start.s, start.d, start.speed);
  world_.ego.heading = wrap_angle(world_.ego.heading + start.heading);
  world_.opponents = script_.initial_states();
  obs_ = sensors::observe(world_, scenario.track);
  note_opponent_distance();
}

void Episode::note_opponent_distance() {
  for (const auto& o : world_.opponents)
    min_opponent_distance_ = std::min(min_opponent_distance_, norm(o.position - world_.ego.position));
}

Episode::StepResult Episode::step(Action action) {
  if (status_.done) throw ContractViolation("episode already finished");
  abs_track_pos_sum_ += std::abs(obs_.track_pos);
  world_ = sim::step_world(world_, action, dt_, vehicle_, script_);
  ++steps_;
  note_opponent_distance();
  status_ = sensors::is_terminal(world_, scenario_->track, vehicle_, steps_, max_steps_);
  obs_ = sensors::observe(world_, scenario_->track);
  const double r = sensors::reward(obs_, vehicle_.v_max);
  total_return_ += r;
  return {r, status_};
}

EpisodeRecord Episode::record(std::size_t index) const {
  EpisodeRecord rec;
  rec.episode = index;
  rec.total_return = total_return_;
  rec.steps = steps_;
  rec.cause = status_.cause;
  rec.min_opponent_distance = min_opponent_distance_;
  rec.mean_abs_track_pos = steps_ == 0 ? 0.0 : abs_track_pos_sum_ / static_cast<double>(steps_);
  return rec;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"episode", "step", "time", "x", "y", "heading", "speed",
                               "speed_long", "speed_raw", "angle", "track_pos"};
    for (std::size_t k = 0; k < sensors::kSectorCount; ++k) c.push_back(fmt::format("opp{:02}", k));
    for (const char* name : {"delta_l", "tau_l", "delta_f", "tau_f", "delta_p", "tau_p", "delta", "tau", "reward",
                             "done", "cause"})
      c.emplace_back(name);
    return c;
  }();
  return columns;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("cannot write trace " + path.string());
  const auto& cols = trace_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
  out_ << '\n';
}

void TraceWriter::write(std::size_t episode, std::size_t step, const sim::WorldState& world,
                        const sensors::Observation& obs, const fusion::ControllerBreakdown& c, double reward,
                        const sensors::TerminalStatus& status) {
  std::string row = fmt::format("{},{}", episode, step);
  auto add = [&row](double v) {
    row += ',';
    row += format_number(v);
  };
  add(world.sim_time);
  add(world.ego.position.x);
  add(world.ego.position.y);
  add(world.ego.heading);
  add(world.ego.speed);
  add(obs.speed_long);
  add(obs.speed_raw);
  add(obs.angle);
  add(obs.track_pos);
  for (double r : obs.opponents) add(r);
  for (const Action& a : {c.policy, c.field, c.tracking, c.fused}) {
    add(a.steer);
    add(a.accel);
  }
  add(reward);
  row += fmt::format(",{},{}\n", status.done ? 1 : 0, sensors::to_string(status.cause));
  out_ << row;
}

EpisodeRecord run_episode(const RunConfig& config, const ScenarioSpec& scenario, Mode mode,
                          const nn::MlpParams* actor, const ddpg::FeatureScaling& scaling, std::size_t index,
                          Rng* start_rng, Rng& random_rng, TraceWriter* trace) {
  Episode episode(scenario, config.vehicle, config.run.max_steps, config.run.dt, start_rng,
                  config.run.randomization);
  fusion::HybridController controller{actor, scaling, config.apf, config.tracking,
                                      weights_for(mode, config.weights)};
  while (!episode.done()) {
    const auto& obs = episode.observation();
    Action policy{};
    if (mode == Mode::random) {
      policy = {random_rng.uniform(-1.0, 1.0), random_rng.uniform(-1.0, 1.0)};
    } else if (actor != nullptr) {
      const auto a = nn::predict(*actor, fusion::policy_features(obs, scaling));
      policy = {a[0], a[1]};
    }
    const auto commands = fusion::hybrid_step(obs, policy, controller);
    const auto before = episode.world();
    const auto before_obs = obs;
    const std::size_t step_index = episode.steps();
    const auto result = episode.step(commands.fused);
    if (trace != nullptr) trace->write(index, step_index, before, before_obs, commands, result.reward, result.status);
  }
  return episode.record(index);
}

std::vector<EpisodeRecord> run_episodes(const RunConfig& config, const ScenarioSpec& scenario, Mode mode,
                                        const nn::MlpParams* actor, const ddpg::FeatureScaling& scaling,
                                        std::size_t count, bool randomize_start, TraceWriter* trace) {
  Rng env_rng(rng_split(config.run.seed, "env"));
  Rng random_rng(rng_split(config.run.seed, "noise"));
  std::vector<EpisodeRecord> records;
  records.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    records.push_back(run_episode(config, scenario, mode, actor, scaling, i, randomize_start ? &env_rng : nullptr,
                                  random_rng, trace));
  return records;
}

}  // namespace fusedrive::harness
