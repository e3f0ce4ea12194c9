#include "fusedrive/ddpg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fusedrive::ddpg {

namespace {

constexpr std::array<char, 8> kAgentMagic{'F', 'D', 'A', 'G', 'E', 'N', 'T', '1'};

std::vector<double> concat(std::span<const double> state, std::span<const double> action) {
  std::vector<double> x;
  x.reserve(state.size() + action.size());
  x.insert(x.end(), state.begin(), state.end());
  x.insert(x.end(), action.begin(), action.end());
  return x;
}

nn::MlpParams make_network(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                           nn::Activation output_activation, std::uint64_t seed) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  std::vector<nn::Activation> acts(dims.size() - 1, nn::Activation::relu);
  acts.back() = output_activation;
  return nn::init(dims, acts, seed);
}

void require_same_shape(const nn::MlpParams& a, const nn::MlpParams& b) {
  if (a.dims() != b.dims()) throw ContractViolation("network shapes disagree");
  for (std::size_t i = 0; i < a.layers.size(); ++i)
    if (a.layers[i].activation != b.layers[i].activation) throw ContractViolation("network activations disagree");
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

std::uint64_t get_le(std::string_view bytes, std::size_t& pos, int width) {
  if (bytes.size() - pos < static_cast<std::size_t>(width)) throw LoadError("agent checkpoint is truncated");
  std::uint64_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(bytes[pos + static_cast<std::size_t>(i)]);
  pos += static_cast<std::size_t>(width);
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (storage_.size() == capacity_) storage_.pop_front();
  storage_.push_back(std::move(t));
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (storage_.empty()) throw ContractViolation("cannot sample from an empty replay buffer");
  std::vector<Transition> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) batch.push_back(storage_[rng.index(storage_.size())]);
  return batch;
}

std::array<double, kActionDim> ExplorationNoise::sample(Rng& rng) {
  std::array<double, kActionDim> out{};
  for (std::size_t i = 0; i < kActionDim; ++i) {
    if (config_.kind == NoiseKind::gaussian) {
      out[i] = config_.gaussian_sigma * rng.normal();
    } else {
      state_[i] += -config_.ou_theta * state_[i] + config_.ou_sigma * rng.normal();
      out[i] = state_[i];
    }
  }
  return out;
}

void validate(const AgentConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(c.tau_soft > 0.0 && c.tau_soft <= 1.0)) throw ConfigError("tau_soft must lie in (0, 1]");
  if (!(c.lr_actor > 0.0) || !(c.lr_critic > 0.0)) throw ConfigError("learning rates must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.buffer_capacity < c.batch_size) throw ConfigError("buffer_capacity must hold at least one batch");
  if (c.noise.ou_sigma < 0.0 || c.noise.gaussian_sigma < 0.0 || c.noise.ou_theta < 0.0)
    throw ConfigError("noise parameters must be nonnegative");
}

nn::MlpParams make_actor(std::size_t state_dim, std::span<const std::size_t> hidden, std::uint64_t seed) {
  return make_network(state_dim, hidden, kActionDim, nn::Activation::tanh, seed);
}

nn::MlpParams make_critic(std::size_t state_dim, std::span<const std::size_t> hidden, std::uint64_t seed) {
  return make_network(state_dim + kActionDim, hidden, 1, nn::Activation::linear, seed);
}

std::vector<double> critic_targets(std::span<const Transition> batch, const nn::MlpParams& target_actor,
                                   const nn::MlpParams& target_critic, double gamma) {
  if (batch.empty()) throw ContractViolation("critic targets need a nonempty batch");
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto& t : batch) {
    if (t.done) {
      y.push_back(t.reward);
      continue;
    }
    const auto next_action = nn::predict(target_actor, t.next_state);
    const double q_next = nn::predict(target_critic, concat(t.next_state, next_action))[0];
    y.push_back(t.reward + gamma * q_next);
  }
  return y;
}

LossAndGradient critic_loss_gradient(const nn::MlpParams& critic, std::span<const Transition> batch,
                                     std::span<const double> targets) {
  if (batch.empty() || targets.size() != batch.size())
    throw ContractViolation("critic loss needs one target per transition");
  LossAndGradient out{0.0, nn::Gradients::zeros_like(critic)};
  const double n = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto pass = nn::forward(critic, concat(batch[i].state, batch[i].action));
    const double err = pass.output[0] - targets[i];
    out.value += err * err / n;
    const std::array<double, 1> g{2.0 * err / n};
    nn::backward_accumulate(critic, pass.cache, g, &out.grads, nullptr);
  }
  return out;
}

LossAndGradient actor_objective_gradient(const nn::MlpParams& actor, const nn::MlpParams& critic,
                                         std::span<const Transition> batch) {
  if (batch.empty()) throw ContractViolation("actor update needs a nonempty batch");
  if (critic.input_dim() != actor.input_dim() + actor.output_dim())
    throw ContractViolation("critic input must be state followed by action");
  LossAndGradient out{0.0, nn::Gradients::zeros_like(actor)};
  const double n = static_cast<double>(batch.size());
  const std::array<double, 1> weight{1.0 / n};
  std::vector<double> input_grad;
  for (const auto& t : batch) {
    const auto actor_pass = nn::forward(actor, t.state);
    const auto critic_pass = nn::forward(critic, concat(t.state, actor_pass.output));
    out.value += critic_pass.output[0] / n;
    nn::backward_accumulate(critic, critic_pass.cache, weight, nullptr, &input_grad);
    const std::span<const double> dq_da(input_grad.data() + t.state.size(), actor.output_dim());
    nn::backward_accumulate(actor, actor_pass.cache, dq_da, &out.grads, nullptr);
  }
  return out;
}

void soft_update(nn::MlpParams& target, const nn::MlpParams& online, double tau) {
  require_same_shape(target, online);
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto blend = [tau](std::vector<double>& dst, const std::vector<double>& src) {
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = tau * src[k] + (1.0 - tau) * dst[k];
    };
    blend(target.layers[i].weights.data, online.layers[i].weights.data);
    blend(target.layers[i].bias, online.layers[i].bias);
  }
}

AgentSeeds AgentSeeds::from_master(std::uint64_t master_seed) {
  return {rng_split(master_seed, "init"), rng_split(master_seed, "noise"), rng_split(master_seed, "sampling")};
}

Agent::Agent(std::size_t state_dim, AgentConfig config, AgentSeeds seeds)
    : state_dim_(state_dim),
      config_(std::move(config)),
      buffer_(config_.buffer_capacity),
      noise_(config_.noise),
      noise_rng_(seeds.noise),
      sampling_rng_(seeds.sampling) {
  validate(config_);
  Rng init_rng(seeds.init);
  const std::uint64_t actor_seed = init_rng.next_u64();
  const std::uint64_t critic_seed = init_rng.next_u64();
  actor_ = make_actor(state_dim, config_.actor_hidden, actor_seed);
  critic_ = make_critic(state_dim, config_.critic_hidden, critic_seed);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = nn::AdamState::for_params(actor_);
  critic_opt_ = nn::AdamState::for_params(critic_);
}

Action Agent::select_action(std::span<const double> state, bool explore) {
  auto a = nn::predict(actor_, state);
  if (explore) {
    const auto n = noise_.sample(noise_rng_);
    for (std::size_t i = 0; i < kActionDim; ++i) a[i] += n[i];
  }
  return {clamp_unit(a[0]), clamp_unit(a[1])};
}

void Agent::remember(Transition t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_)
    throw ContractViolation("transition state has the wrong dimension");
  buffer_.push(std::move(t));
}

double Agent::critic_update(std::span<const Transition> batch) {
  const auto targets = critic_targets(batch, target_actor_, target_critic_, config_.gamma);
  auto loss = critic_loss_gradient(critic_, batch, targets);
  nn::adam_step(critic_, loss.grads, critic_opt_, config_.lr_critic);
  return loss.value;
}

double Agent::actor_update(std::span<const Transition> batch) {
  auto objective = actor_objective_gradient(actor_, critic_, batch);
  // Ascend J by descending -J.
  objective.grads.scale(-1.0);
  nn::adam_step(actor_, objective.grads, actor_opt_, config_.lr_actor);
  return objective.value;
}

void Agent::update_targets() {
  soft_update(target_critic_, critic_, config_.tau_soft);
  soft_update(target_actor_, actor_, config_.tau_soft);
}

TrainMetrics Agent::train_step() {
  if (buffer_.size() < std::max(config_.batch_size, config_.warmup_steps) || buffer_.size() == 0) return {};
  const auto batch = buffer_.sample(config_.batch_size, sampling_rng_);
  TrainMetrics m;
  m.ready = true;
  m.critic_loss = critic_update(batch);
  m.mean_q = actor_update(batch);
  update_targets();
  return m;
}

void Agent::load_networks(nn::MlpParams actor, nn::MlpParams critic, nn::MlpParams target_actor,
                          nn::MlpParams target_critic) {
  require_same_shape(actor, actor_);
  require_same_shape(critic, critic_);
  require_same_shape(target_actor, actor_);
  require_same_shape(target_critic, critic_);
  actor_ = std::move(actor);
  critic_ = std::move(critic);
  target_actor_ = std::move(target_actor);
  target_critic_ = std::move(target_critic);
  actor_opt_ = nn::AdamState::for_params(actor_);
  critic_opt_ = nn::AdamState::for_params(critic_);
}

void save_agent(const Agent& agent, const FeatureScaling& scaling, const std::filesystem::path& path) {
  nlohmann::ordered_json manifest;
  manifest["format"] = "fusedrive-agent";
  manifest["version"] = 1;
  manifest["state_dim"] = agent.state_dim();
  manifest["actor_dims"] = agent.actor().dims();
  manifest["critic_dims"] = agent.critic().dims();
  manifest["feature_scaling"] = {{"speed", scaling.speed_scale},
                                 {"angle", scaling.angle_scale},
                                 {"track_pos", scaling.track_pos_scale}};
  const std::string text = manifest.dump();

  std::string out(kAgentMagic.begin(), kAgentMagic.end());
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const nn::MlpParams* net : {&agent.actor(), &agent.critic(), &agent.target_actor(), &agent.target_critic()}) {
    const std::string block = nn::encode_checkpoint(*net);
    put_u64(out, block.size());
    out += block;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw LoadError("cannot open agent checkpoint for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw LoadError("failed writing agent checkpoint: " + path.string());
}

AgentCheckpoint load_agent(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw LoadError("cannot open agent checkpoint: " + path.string());
  std::ostringstream buf;
  buf << file.rdbuf();
  const std::string bytes = buf.str();
  const std::string_view view(bytes);

  if (view.size() < kAgentMagic.size() || !std::equal(kAgentMagic.begin(), kAgentMagic.end(), view.begin()))
    throw LoadError("not an agent checkpoint: " + path.string());
  std::size_t pos = kAgentMagic.size();
  const auto manifest_len = static_cast<std::size_t>(get_le(view, pos, 4));
  if (view.size() - pos < manifest_len) throw LoadError("agent checkpoint is truncated");
  AgentCheckpoint ck;
  try {
    const auto manifest = nlohmann::json::parse(view.substr(pos, manifest_len));
    const auto& fs = manifest.at("feature_scaling");
    ck.scaling = {fs.at("speed").get<double>(), fs.at("angle").get<double>(), fs.at("track_pos").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed agent manifest: ") + e.what());
  }
  pos += manifest_len;

  std::array<nn::MlpParams*, 4> nets{&ck.actor, &ck.critic, &ck.target_actor, &ck.target_critic};
  for (auto* net : nets) {
    const auto len = get_le(view, pos, 8);
    if (view.size() - pos < len) throw LoadError("agent checkpoint is truncated");
    *net = nn::decode_checkpoint(view.substr(pos, static_cast<std::size_t>(len)));
    pos += static_cast<std::size_t>(len);
  }
  if (pos != view.size()) throw LoadError("agent checkpoint has trailing bytes");
  if (ck.actor.dims() != ck.target_actor.dims() || ck.critic.dims() != ck.target_critic.dims())
    throw LoadError("agent checkpoint target shapes disagree with online shapes");
  return ck;
}

}  // namespace fusedrive::ddpg
