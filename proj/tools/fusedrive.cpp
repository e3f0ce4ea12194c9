#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fusedrive/harness/commands.hpp"

namespace fs = std::filesystem;
using namespace fusedrive;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

harness::RunConfig load(const CommonOptions& o) {
  auto config = harness::load_config(o.config);
  if (o.seed) config.run.seed = *o.seed;
  return config;
}

fs::path out_dir(const CommonOptions& o, const harness::RunConfig& config) {
  return o.out.empty() ? config.run.output_dir : fs::path(o.out);
}

harness::Mode mode_from(const std::string& name) {
  auto m = harness::parse_mode(name);
  if (!m) throw ConfigError("unknown mode '" + name + "'");
  return *m;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--out", o.out, "Output directory (defaults to run.output_dir)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid policy / potential-field / path-tracking driving controller"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  auto* train = app.add_subcommand("train", "Train the policy on the opponent-free training scenario");
  add_common(train, train_opts);

  CommonOptions eval_opts;
  std::string eval_checkpoint;
  std::string eval_mode = "fused";
  std::string eval_scenario;
  auto* eval = app.add_subcommand("eval", "Evaluate one controller mode and write a per-step trace");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", eval_checkpoint, "Agent checkpoint")->check(CLI::ExistingFile);
  eval->add_option("--mode", eval_mode, "ddpg_only, apf_only, tracking_only, fused or random");
  eval->add_option("--scenario", eval_scenario, "Scenario name (defaults to run.eval_scenario)");

  CommonOptions cmp_opts;
  std::string cmp_checkpoint;
  std::vector<std::string> cmp_modes;
  auto* compare = app.add_subcommand("compare", "Run every mode on every scenario and tabulate the results");
  add_common(compare, cmp_opts);
  compare->add_option("--checkpoint", cmp_checkpoint, "Agent checkpoint")->required()->check(CLI::ExistingFile);
  compare->add_option("--mode", cmp_modes, "Restrict to these modes (repeatable)");

  std::string trace_path;
  std::vector<std::string> columns;
  std::string extract_out;
  auto* extract = app.add_subcommand("extract", "Select columns from a trace CSV");
  extract->add_option("trace", trace_path, "Trace CSV")->required()->check(CLI::ExistingFile);
  extract->add_option("columns", columns, "Column names, in output order")->required();
  extract->add_option("--out", extract_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      const auto config = load(train_opts);
      const auto dir = out_dir(train_opts, config);
      const auto result = harness::cmd_train(config, dir, &std::cout);
      std::cout << "metrics: " << result.metrics_path.string() << '\n';
      if (result.checkpoint_path) std::cout << "checkpoint: " << result.checkpoint_path->string() << '\n';
    } else if (*eval) {
      const auto config = load(eval_opts);
      const auto mode = mode_from(eval_mode);
      const auto& scenario = config.scenario(eval_scenario.empty() ? config.run.eval_scenario : eval_scenario);
      std::optional<fs::path> ck;
      if (!eval_checkpoint.empty()) ck = eval_checkpoint;
      const auto result = harness::cmd_eval(config, ck, mode, scenario, out_dir(eval_opts, config));
      for (const auto& r : result.episodes)
        std::cout << fmt::format("episode {}  return {:.3f}  steps {}  end {}  min_dist {:.3f}  mean|e| {:.4f}\n",
                                 r.episode, r.total_return, r.steps, sensors::to_string(r.cause),
                                 r.min_opponent_distance, r.mean_abs_track_pos);
      std::cout << "trace: " << result.trace_path.string() << '\n';
    } else if (*compare) {
      const auto config = load(cmp_opts);
      std::vector<harness::Mode> modes;
      for (const auto& m : cmp_modes) modes.push_back(mode_from(m));
      const auto rows = harness::cmd_compare(config, cmp_checkpoint, out_dir(cmp_opts, config), modes);
      std::cout << harness::format_compare_table(rows);
    } else if (*extract) {
      if (extract_out.empty()) {
        harness::cmd_extract(trace_path, columns, std::cout);
      } else {
        std::ofstream out(extract_out, std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + extract_out);
        harness::cmd_extract(trace_path, columns, out);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime fault: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
