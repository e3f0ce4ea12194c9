#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fusedrive/common.hpp"
#include "fusedrive/nn.hpp"
#include "fusedrive/random.hpp"

namespace fusedrive::ddpg {

inline constexpr std::size_t kActionDim = 2;

struct Transition {
  std::vector<double> state;
  std::array<double, kActionDim> action{};
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

/// Bounded FIFO of transitions; pushing past capacity evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return storage_[i]; }

  /// Uniform sampling with replacement.
  std::vector<Transition> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> storage_;
};

enum class NoiseKind : std::uint8_t { ornstein_uhlenbeck, gaussian };

struct NoiseConfig {
  NoiseKind kind = NoiseKind::ornstein_uhlenbeck;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double gaussian_sigma = 0.1;
};

/// Per-dimension exploration noise. The OU process uses unit time steps.
class ExplorationNoise {
 public:
  explicit ExplorationNoise(NoiseConfig config = {}) : config_(config) {}

  std::array<double, kActionDim> sample(Rng& rng);
  void reset() { state_.fill(0.0); }

 private:
  NoiseConfig config_;
  std::array<double, kActionDim> state_{};
};

struct AgentConfig {
  double gamma = 0.99;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  double tau_soft = 0.001;
  std::size_t batch_size = 64;
  std::size_t warmup_steps = 1000;
  std::size_t buffer_capacity = 100000;
  std::vector<std::size_t> actor_hidden{64, 32};
  std::vector<std::size_t> critic_hidden{64, 32};
  NoiseConfig noise;
};

/// Throws ConfigError on out-of-range hyperparameters.
void validate(const AgentConfig& config);

/// Actor [state, hidden..., 2] with relu hidden layers and a tanh output.
nn::MlpParams make_actor(std::size_t state_dim, std::span<const std::size_t> hidden, std::uint64_t seed);
/// Critic [state + 2, hidden..., 1] with relu hidden layers and a linear output.
nn::MlpParams make_critic(std::size_t state_dim, std::span<const std::size_t> hidden, std::uint64_t seed);

/// y_i = r_i + gamma * (1 - done_i) * Q'(s'_i, mu'(s'_i)).
std::vector<double> critic_targets(std::span<const Transition> batch, const nn::MlpParams& target_actor,
                                   const nn::MlpParams& target_critic, double gamma);

struct LossAndGradient {
  double value = 0.0;
  nn::Gradients grads;
};

/// Mean squared error between Q(s_i, a_i) and targets, with its gradient in the critic weights.
LossAndGradient critic_loss_gradient(const nn::MlpParams& critic, std::span<const Transition> batch,
                                     std::span<const double> targets);

/// J = mean_i Q(s_i, mu(s_i)) and its gradient in the actor weights, obtained by
/// chaining dQ/da from the critic through the actor (ascent direction).
LossAndGradient actor_objective_gradient(const nn::MlpParams& actor, const nn::MlpParams& critic,
                                         std::span<const Transition> batch);

/// target <- tau * online + (1 - tau) * target, parameter by parameter.
void soft_update(nn::MlpParams& target, const nn::MlpParams& online, double tau);

struct TrainMetrics {
  bool ready = false;
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

/// Independent random streams used by an agent.
struct AgentSeeds {
  std::uint64_t init = 0;
  std::uint64_t noise = 0;
  std::uint64_t sampling = 0;

  /// Derives the "init", "noise" and "sampling" streams from a master seed.
  static AgentSeeds from_master(std::uint64_t master_seed);
};

class Agent {
 public:
  Agent(std::size_t state_dim, AgentConfig config, AgentSeeds seeds);

  /// mu(state), plus exploration noise when `explore`; clamped to [-1, 1].
  Action select_action(std::span<const double> state, bool explore);

  void remember(Transition t);

  /// Critic regression step on `batch`; returns the loss before the update.
  double critic_update(std::span<const Transition> batch);
  /// Actor ascent step on `batch`; returns mean Q under the pre-update actor.
  double actor_update(std::span<const Transition> batch);
  /// Blends both target networks toward the online networks.
  void update_targets();

  /// Samples a batch, then critic update, actor update, target update.
  /// Does nothing until the buffer holds max(batch_size, warmup_steps) transitions.
  TrainMetrics train_step();

  void reset_noise() { noise_.reset(); }

  std::size_t state_dim() const { return state_dim_; }
  const AgentConfig& config() const { return config_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  const nn::MlpParams& actor() const { return actor_; }
  const nn::MlpParams& critic() const { return critic_; }
  const nn::MlpParams& target_actor() const { return target_actor_; }
  const nn::MlpParams& target_critic() const { return target_critic_; }

  /// Replaces all four networks (optimizer state restarts). Shapes must match.
  void load_networks(nn::MlpParams actor, nn::MlpParams critic, nn::MlpParams target_actor,
                     nn::MlpParams target_critic);

  nn::MlpParams& mutable_actor() { return actor_; }
  nn::MlpParams& mutable_critic() { return critic_; }

 private:
  std::size_t state_dim_;
  AgentConfig config_;
  nn::MlpParams actor_;
  nn::MlpParams critic_;
  nn::MlpParams target_actor_;
  nn::MlpParams target_critic_;
  nn::AdamState actor_opt_;
  nn::AdamState critic_opt_;
  ReplayBuffer buffer_;
  ExplorationNoise noise_;
  Rng noise_rng_;
  Rng sampling_rng_;
};

/// Observation scaling recorded alongside the networks.
struct FeatureScaling {
  double speed_scale = 20.0;
  double angle_scale = 3.141592653589793;
  double track_pos_scale = 1.0;
};

/// Agent checkpoint: 8-byte magic, u32 manifest length, JSON manifest, then
/// four length-prefixed network checkpoints (actor, critic, target actor, target critic).
void save_agent(const Agent& agent, const FeatureScaling& scaling, const std::filesystem::path& path);

struct AgentCheckpoint {
  FeatureScaling scaling;
  nn::MlpParams actor;
  nn::MlpParams critic;
  nn::MlpParams target_actor;
  nn::MlpParams target_critic;
};

AgentCheckpoint load_agent(const std::filesystem::path& path);

}  // namespace fusedrive::ddpg
