#include "fusedrive/harness/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace fusedrive::harness {

namespace {

std::vector<std::size_t> expected_dims(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream* log) {
  const ScenarioSpec& scenario = config.train_scenario();
  if (!scenario.opponents.empty())
    throw ConfigError("training scenario '" + scenario.name + "' must not contain opponents");
  std::filesystem::create_directories(out_dir);

  TrainResult result;
  result.metrics_path = out_dir / "metrics.csv";
  std::ofstream metrics(result.metrics_path, std::ios::trunc);
  if (!metrics) throw ConfigError("cannot write " + result.metrics_path.string());
  metrics << "episode,return,critic_loss,mean_q\n";

  const auto scaling = config.feature_scaling();
  ddpg::Agent agent(fusion::kPolicyFeatureCount, config.agent, ddpg::AgentSeeds::from_master(config.run.seed));
  Rng env_rng(rng_split(config.run.seed, "env"));

  for (std::size_t ep = 0; ep < config.run.episodes; ++ep) {
    Episode episode(scenario, config.vehicle, config.run.max_steps, config.run.dt,
                    config.run.train_random_start ? &env_rng : nullptr, config.run.randomization);
    agent.reset_noise();
    double loss_sum = 0.0;
    double q_sum = 0.0;
    std::size_t updates = 0;
    auto state = fusion::policy_features(episode.observation(), scaling);
    while (!episode.done()) {
      const Action action = agent.select_action(state, true);
      const auto step = episode.step(action);
      auto next_state = fusion::policy_features(episode.observation(), scaling);
      // A time-limit cut is not a true terminal state, so it keeps its bootstrap.
      const bool terminal = step.status.done && step.status.cause != sensors::Termination::max_steps;
      agent.remember({state, {action.steer, action.accel}, step.reward, next_state, terminal});
      const auto m = agent.train_step();
      if (m.ready) {
        loss_sum += m.critic_loss;
        q_sum += m.mean_q;
        ++updates;
      }
      state = std::move(next_state);
    }
    TrainEpisodeMetrics row;
    const auto rec = episode.record(ep);
    row.episode = ep;
    row.total_return = rec.total_return;
    row.steps = rec.steps;
    row.cause = rec.cause;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.critic_loss = updates ? loss_sum / static_cast<double>(updates) : nan;
    row.mean_q = updates ? q_sum / static_cast<double>(updates) : nan;
    result.episodes.push_back(row);
    metrics << fmt::format("{},{},{},{}\n", ep, format_number(row.total_return), format_number(row.critic_loss),
                           format_number(row.mean_q));
    if (log != nullptr && ((ep + 1) % 10 == 0 || ep + 1 == config.run.episodes)) {
      *log << fmt::format("episode {:4}  return {:8.2f}  steps {:4}  end {:<9}  critic_loss {:.4g}  mean_q {:.4g}\n",
                          ep + 1, row.total_return, row.steps, sensors::to_string(row.cause), row.critic_loss,
                          row.mean_q);
    }
  }
  metrics.close();
  if (!metrics) throw ConfigError("failed writing " + result.metrics_path.string());

  if (config.run.episodes > 0) {
    result.checkpoint_path = out_dir / "agent.ckpt";
    ddpg::save_agent(agent, scaling, *result.checkpoint_path);
  }
  return result;
}

ddpg::AgentCheckpoint load_agent_for(const RunConfig& config, const std::filesystem::path& checkpoint) {
  auto ck = ddpg::load_agent(checkpoint);
  const auto actor_dims = expected_dims(fusion::kPolicyFeatureCount, config.agent.actor_hidden, ddpg::kActionDim);
  const auto critic_dims =
      expected_dims(fusion::kPolicyFeatureCount + ddpg::kActionDim, config.agent.critic_hidden, 1);
  if (ck.actor.dims() != actor_dims || ck.critic.dims() != critic_dims)
    throw LoadError("checkpoint network shapes do not match the configuration: " + checkpoint.string());
  if (ck.actor.layers.back().activation != nn::Activation::tanh)
    throw LoadError("checkpoint actor must end in a tanh layer");
  return ck;
}

EvalResult cmd_eval(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint, Mode mode,
                    const ScenarioSpec& scenario, const std::filesystem::path& out_dir) {
  std::optional<ddpg::AgentCheckpoint> agent;
  if (checkpoint) {
    agent = load_agent_for(config, *checkpoint);
  } else if (mode == Mode::ddpg_only || mode == Mode::fused) {
    throw ConfigError(fmt::format("mode {} needs a checkpoint", to_string(mode)));
  }
  std::filesystem::create_directories(out_dir);
  const std::string tag = fmt::format("{}_{}", scenario.name, to_string(mode));

  EvalResult result;
  result.trace_path = out_dir / fmt::format("trace_{}.csv", tag);
  result.summary_path = out_dir / fmt::format("episodes_{}.csv", tag);
  {
    TraceWriter trace(result.trace_path);
    result.episodes = run_episodes(config, scenario, mode, agent ? &agent->actor : nullptr,
                                   agent ? agent->scaling : config.feature_scaling(), config.run.eval_episodes,
                                   config.run.eval_random_start, &trace);
  }
  std::ofstream summary(result.summary_path, std::ios::trunc);
  if (!summary) throw ConfigError("cannot write " + result.summary_path.string());
  summary << "episode,return,steps,cause,min_opponent_distance,mean_abs_track_pos\n";
  for (const auto& r : result.episodes)
    summary << fmt::format("{},{},{},{},{},{}\n", r.episode, format_number(r.total_return), r.steps,
                           sensors::to_string(r.cause), format_number(r.min_opponent_distance),
                           format_number(r.mean_abs_track_pos));
  return result;
}

std::vector<CompareRow> cmd_compare(const RunConfig& config, const std::filesystem::path& checkpoint,
                                    const std::filesystem::path& out_dir, std::vector<Mode> modes) {
  if (modes.empty()) modes = {Mode::ddpg_only, Mode::apf_only, Mode::tracking_only, Mode::fused};
  const auto agent = load_agent_for(config, checkpoint);
  std::vector<CompareRow> rows;
  for (const auto& scenario : config.scenarios) {
    for (Mode mode : modes) {
      const auto records = run_episodes(config, scenario, mode, &agent.actor, agent.scaling,
                                        config.run.eval_episodes, config.run.eval_random_start, nullptr);
      CompareRow row;
      row.scenario = scenario.name;
      row.mode = mode;
      row.min_opponent_distance = std::numeric_limits<double>::infinity();
      for (const auto& r : records) {
        row.mean_return += r.total_return / static_cast<double>(records.size());
        row.mean_abs_track_pos += r.mean_abs_track_pos / static_cast<double>(records.size());
        row.min_opponent_distance = std::min(row.min_opponent_distance, r.min_opponent_distance);
      }
      if (!records.empty()) row.cause = records.back().cause;
      rows.push_back(row);
    }
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "compare.csv", std::ios::trunc);
  if (!out) throw ConfigError("cannot write compare.csv");
  out << "scenario,mode,return,min_opponent_distance,cause,mean_abs_track_pos\n";
  for (const auto& r : rows)
    out << fmt::format("{},{},{},{},{},{}\n", r.scenario, to_string(r.mode), format_number(r.mean_return),
                       format_number(r.min_opponent_distance), sensors::to_string(r.cause),
                       format_number(r.mean_abs_track_pos));
  return rows;
}

std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::string s = fmt::format("{:<20} {:<14} {:>10} {:>12} {:<10} {:>10}\n", "scenario", "mode", "return",
                              "min_dist[m]", "end", "mean|e|");
  for (const auto& r : rows)
    s += fmt::format("{:<20} {:<14} {:>10.2f} {:>12.3f} {:<10} {:>10.4f}\n", r.scenario, to_string(r.mode),
                     r.mean_return, r.min_opponent_distance, sensors::to_string(r.cause), r.mean_abs_track_pos);
  return s;
}

void cmd_extract(const std::filesystem::path& trace, const std::vector<std::string>& columns, std::ostream& out) {
  std::ifstream in(trace);
  if (!in) throw LoadError("cannot open trace " + trace.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError("trace is empty: " + trace.string());
  const auto header = split_csv_line(line);
  std::vector<std::size_t> picks;
  for (const auto& name : columns) {
    std::size_t i = 0;
    while (i < header.size() && header[i] != name) ++i;
    if (i == header.size()) throw ConfigError("trace has no column '" + name + "'");
    picks.push_back(i);
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < picks.size(); ++k) out << (k ? "," : "") << cells[picks[k]];
    out << '\n';
  };
  emit(header);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw LoadError(fmt::format("trace row {} has {} cells, expected {}", row,
                                                                   cells.size(), header.size()));
    emit(cells);
  }
}

}  // namespace fusedrive::harness
