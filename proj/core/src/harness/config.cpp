#include "fusedrive/harness/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace fusedrive::harness {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(section));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

sim::TrackSpec parse_track(const json& j) {
  reject_unknown(j, "track", {"centerline", "half_width", "closed"});
  sim::TrackSpec track;
  if (!j.contains("centerline") || !j.at("centerline").is_array()) throw ConfigError("track needs a centerline array");
  for (const auto& p : j.at("centerline")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ConfigError("centerline points must be [x, y] pairs");
    track.centerline.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  read(j, "half_width", track.half_width);
  read(j, "closed", track.closed);
  sim::validate(track);
  return track;
}

ScenarioSpec parse_scenario(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "scenario", {"name", "track", "ego", "opponents"});
  ScenarioSpec sc;
  read(j, "name", sc.name);
  if (sc.name.empty()) throw ConfigError("scenario needs a name");
  std::string track_file;
  read(j, "track", track_file);
  if (track_file.empty()) throw ConfigError("scenario '" + sc.name + "' needs a track file");
  sc.track_path = base_dir / track_file;
  sc.track = load_track(sc.track_path);
  if (j.contains("ego")) {
    const auto& e = j.at("ego");
    reject_unknown(e, "scenario ego", {"s", "d", "heading", "speed"});
    read(e, "s", sc.ego.s);
    read(e, "d", sc.ego.d);
    read(e, "heading", sc.ego.heading);
    read(e, "speed", sc.ego.speed);
  }
  if (j.contains("opponents")) {
    if (!j.at("opponents").is_array()) throw ConfigError("scenario opponents must be an array");
    for (const auto& o : j.at("opponents")) {
      reject_unknown(o, "opponent", {"s", "d", "speed"});
      sim::OpponentSpec spec;
      read(o, "s", spec.s);
      read(o, "d", spec.d);
      read(o, "speed", spec.speed);
      if (spec.speed < 0.0) throw ConfigError("opponent speed must be nonnegative");
      sc.opponents.push_back(spec);
    }
  }
  return sc;
}

void parse_noise(const json& j, ddpg::NoiseConfig& n) {
  reject_unknown(j, "agent.noise", {"kind", "ou_theta", "ou_sigma", "gaussian_sigma"});
  std::string kind = n.kind == ddpg::NoiseKind::gaussian ? "gaussian" : "ou";
  read(j, "kind", kind);
  if (kind == "ou") {
    n.kind = ddpg::NoiseKind::ornstein_uhlenbeck;
  } else if (kind == "gaussian") {
    n.kind = ddpg::NoiseKind::gaussian;
  } else {
    throw ConfigError("noise kind must be 'ou' or 'gaussian'");
  }
  read(j, "ou_theta", n.ou_theta);
  read(j, "ou_sigma", n.ou_sigma);
  read(j, "gaussian_sigma", n.gaussian_sigma);
}

}  // namespace

const ScenarioSpec& RunConfig::scenario(const std::string& name) const {
  if (scenarios.empty()) throw ConfigError("configuration lists no scenarios");
  if (name.empty()) return scenarios.front();
  for (const auto& s : scenarios)
    if (s.name == name) return s;
  throw ConfigError("unknown scenario '" + name + "'");
}

ddpg::FeatureScaling RunConfig::feature_scaling() const {
  ddpg::FeatureScaling s;
  s.speed_scale = vehicle.v_max;
  return s;
}

void validate(const RunConfig& c) {
  sim::validate(c.vehicle);
  ddpg::validate(c.agent);
  apf::validate(c.apf);
  tracking::validate(c.tracking);
  if (!(c.run.dt > 0.0)) throw ConfigError("dt must be positive");
  if (c.run.max_steps == 0) throw ConfigError("max_steps must be positive");
  if (c.run.randomization.lateral_fraction < 0.0 || c.run.randomization.lateral_fraction > 1.0)
    throw ConfigError("start lateral_fraction must lie in [0, 1]");
  if (c.run.randomization.heading < 0.0) throw ConfigError("start heading perturbation must be nonnegative");
  if (c.scenarios.empty()) throw ConfigError("configuration lists no scenarios");
  for (std::size_t i = 0; i < c.scenarios.size(); ++i)
    for (std::size_t k = i + 1; k < c.scenarios.size(); ++k)
      if (c.scenarios[i].name == c.scenarios[k].name)
        throw ConfigError("duplicate scenario name '" + c.scenarios[i].name + "'");
  (void)c.train_scenario();
  (void)c.eval_scenario();
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json root = parse_json(text, "configuration");
  reject_unknown(root, "configuration", {"vehicle", "agent", "apf", "tracking", "fusion", "run", "scenarios"});
  RunConfig c;

  if (root.contains("vehicle")) {
    const auto& v = root.at("vehicle");
    reject_unknown(v, "vehicle", {"wheelbase", "max_steer_angle", "max_accel", "max_brake", "drag_coeff", "v_max",
                                  "body_length", "body_width"});
    read(v, "wheelbase", c.vehicle.wheelbase);
    read(v, "max_steer_angle", c.vehicle.max_steer_angle);
    read(v, "max_accel", c.vehicle.max_accel);
    read(v, "max_brake", c.vehicle.max_brake);
    read(v, "drag_coeff", c.vehicle.drag_coeff);
    read(v, "v_max", c.vehicle.v_max);
    read(v, "body_length", c.vehicle.body_length);
    read(v, "body_width", c.vehicle.body_width);
  }
  if (root.contains("agent")) {
    const auto& a = root.at("agent");
    reject_unknown(a, "agent", {"gamma", "lr_actor", "lr_critic", "tau_soft", "batch_size", "warmup_steps",
                                "buffer_capacity", "actor_hidden", "critic_hidden", "noise"});
    read(a, "gamma", c.agent.gamma);
    read(a, "lr_actor", c.agent.lr_actor);
    read(a, "lr_critic", c.agent.lr_critic);
    read(a, "tau_soft", c.agent.tau_soft);
    read(a, "batch_size", c.agent.batch_size);
    read(a, "warmup_steps", c.agent.warmup_steps);
    read(a, "buffer_capacity", c.agent.buffer_capacity);
    read(a, "actor_hidden", c.agent.actor_hidden);
    read(a, "critic_hidden", c.agent.critic_hidden);
    if (a.contains("noise")) parse_noise(a.at("noise"), c.agent.noise);
  }
  if (root.contains("apf")) {
    const auto& p = root.at("apf");
    reject_unknown(p, "apf", {"eta", "k_fx", "k_fy", "d_min", "d_cut"});
    read(p, "eta", c.apf.eta);
    read(p, "k_fx", c.apf.k_fx);
    read(p, "k_fy", c.apf.k_fy);
    read(p, "d_min", c.apf.d_min);
    read(p, "d_cut", c.apf.d_cut);
  }
  if (root.contains("tracking")) {
    const auto& t = root.at("tracking");
    reject_unknown(t, "tracking", {"heading_gain", "offset_gain", "steer_threshold", "brake_gain"});
    read(t, "heading_gain", c.tracking.heading_gain);
    read(t, "offset_gain", c.tracking.offset_gain);
    read(t, "steer_threshold", c.tracking.steer_threshold);
    read(t, "brake_gain", c.tracking.brake_gain);
  }
  if (root.contains("fusion")) {
    const auto& f = root.at("fusion");
    reject_unknown(f, "fusion", {"alpha", "beta", "lambda"});
    double alpha = c.weights.alpha(), beta = c.weights.beta(), lambda = c.weights.lambda();
    read(f, "alpha", alpha);
    read(f, "beta", beta);
    read(f, "lambda", lambda);
    c.weights = fusion::FusionWeights(alpha, beta, lambda);
  }
  if (root.contains("run")) {
    const auto& r = root.at("run");
    reject_unknown(r, "run", {"episodes", "max_steps", "dt", "seed", "output_dir", "train_scenario", "eval_scenario",
                              "eval_episodes", "train_random_start", "eval_random_start", "start_lateral_fraction",
                              "start_heading"});
    read(r, "episodes", c.run.episodes);
    read(r, "max_steps", c.run.max_steps);
    read(r, "dt", c.run.dt);
    read(r, "seed", c.run.seed);
    std::string out_dir;
    read(r, "output_dir", out_dir);
    if (!out_dir.empty()) c.run.output_dir = base_dir / out_dir;
    read(r, "train_scenario", c.run.train_scenario);
    read(r, "eval_scenario", c.run.eval_scenario);
    read(r, "eval_episodes", c.run.eval_episodes);
    read(r, "train_random_start", c.run.train_random_start);
    read(r, "eval_random_start", c.run.eval_random_start);
    read(r, "start_lateral_fraction", c.run.randomization.lateral_fraction);
    read(r, "start_heading", c.run.randomization.heading);
  }
  if (root.contains("scenarios")) {
    if (!root.at("scenarios").is_array()) throw ConfigError("scenarios must be an array");
    for (const auto& s : root.at("scenarios")) {
      if (s.is_string()) {
        c.scenarios.push_back(load_scenario(base_dir / s.get<std::string>()));
      } else {
        c.scenarios.push_back(parse_scenario(s, base_dir));
      }
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.parent_path());
}

sim::TrackSpec load_track(const std::filesystem::path& path) {
  return parse_track(parse_json(read_text(path), "track " + path.string()));
}

void save_track(const sim::TrackSpec& track, const std::filesystem::path& path) {
  sim::validate(track);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write track " + path.string());
  // One point per line keeps the files diffable.
  out << "{\n  \"half_width\": " << json(track.half_width).dump() << ",\n  \"closed\": "
      << (track.closed ? "true" : "false") << ",\n  \"centerline\": [\n";
  for (std::size_t i = 0; i < track.centerline.size(); ++i) {
    const auto& p = track.centerline[i];
    out << "    " << json::array({p.x, p.y}).dump() << (i + 1 < track.centerline.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return parse_scenario(parse_json(read_text(path), "scenario " + path.string()), path.parent_path());
}

}  // namespace fusedrive::harness
