#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fusedrive/ddpg.hpp"
#include "oracles.hpp"

using namespace fusedrive;
using namespace fusedrive::ddpg;

namespace {

Transition random_transition(Rng& rng, std::size_t dim, bool done = false) {
  Transition t;
  t.state = oracle::random_vector(rng, dim);
  t.action = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  t.reward = rng.uniform(0, 2);
  t.next_state = oracle::random_vector(rng, dim);
  t.done = done;
  return t;
}

std::vector<Transition> random_batch(Rng& rng, std::size_t n, std::size_t dim) {
  std::vector<Transition> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(random_transition(rng, dim, rng.uniform01() < 0.3));
  return b;
}

AgentConfig small_config() {
  AgentConfig c;
  c.actor_hidden = {6, 5};
  c.critic_hidden = {6, 5};
  c.batch_size = 8;
  c.warmup_steps = 16;
  c.buffer_capacity = 1000;
  return c;
}

void zero(nn::MlpParams& net) {
  for (auto& l : net.layers) {
    std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
}

}  // namespace

TEST_CASE("replay buffer evicts strictly FIFO") {
  ReplayBuffer buf(5);
  Rng rng(1);
  for (int i = 0; i < 8; ++i) {
    auto t = random_transition(rng, 2);
    t.reward = i;
    buf.push(t);
    CHECK(buf.size() == std::min(i + 1, 5));
  }
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf[i].reward == static_cast<double>(i + 3));
  const auto s = buf.sample(100, rng);
  CHECK(s.size() == 100);
  for (const auto& t : s) CHECK(t.reward >= 3.0);
  CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("config validation") {
  AgentConfig c;
  CHECK_NOTHROW(validate(c));
  c.gamma = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.tau_soft = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.lr_actor = -1;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("network shapes") {
  const std::size_t hidden[] = {64, 32};
  const auto actor = make_actor(4, hidden, 1);
  const auto critic = make_critic(4, hidden, 2);
  CHECK(actor.dims() == std::vector<std::size_t>{4, 64, 32, 2});
  CHECK(critic.dims() == std::vector<std::size_t>{6, 64, 32, 1});
  CHECK(actor.layers.back().activation == nn::Activation::tanh);
  CHECK(critic.layers.back().activation == nn::Activation::linear);
  const std::size_t paper[] = {400, 300};
  CHECK(make_actor(40, paper, 1).dims() == std::vector<std::size_t>{40, 400, 300, 2});
}

TEST_CASE("select_action") {
  Agent agent(3, small_config(), AgentSeeds::from_master(4));
  const std::vector<double> s{0.2, -0.4, 0.9};
  CHECK(agent.select_action(s, false) == agent.select_action(s, false));

  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = agent.select_action(oracle::random_vector(rng, 3, -5, 5), true);
    CHECK(std::abs(a.steer) <= 1.0);
    CHECK(std::abs(a.accel) <= 1.0);
  }

  zero(agent.mutable_actor());
  CHECK(agent.select_action(s, false) == Action{0.0, 0.0});

  auto quiet = small_config();
  quiet.noise.ou_sigma = 0.0;
  Agent calm(3, quiet, AgentSeeds::from_master(4));
  const auto mu = nn::predict(calm.actor(), s);
  for (int i = 0; i < 10; ++i) CHECK(calm.select_action(s, true) == Action{mu[0], mu[1]});
}

TEST_CASE("critic targets") {
  Rng rng(5);
  const std::size_t hidden[] = {5};
  const auto ta = make_actor(3, hidden, 1);
  const auto tc = make_critic(3, hidden, 2);

  SUBCASE("terminal transitions ignore the networks") {
    auto t = random_transition(rng, 3, true);
    t.reward = 1.0;
    const std::vector<Transition> batch{t};
    CHECK(critic_targets(batch, ta, tc, 0.99)[0] == 1.0);
    const auto other = make_critic(3, hidden, 99);
    CHECK(critic_targets(batch, ta, other, 0.5)[0] == 1.0);
  }
  SUBCASE("gamma zero returns rewards") {
    const auto batch = random_batch(rng, 16, 3);
    const auto y = critic_targets(batch, ta, tc, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(y[i] == batch[i].reward);
  }
  SUBCASE("matches a per-transition re-evaluation") {
    const auto batch = random_batch(rng, 16, 3);
    const auto y = critic_targets(batch, ta, tc, 0.9);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      double expected = batch[i].reward;
      if (!batch[i].done) {
        const auto a = nn::predict(ta, batch[i].next_state);
        auto in = batch[i].next_state;
        in.insert(in.end(), a.begin(), a.end());
        expected += 0.9 * nn::predict(tc, in)[0];
      }
      CHECK(y[i] == expected);
    }
  }
  CHECK_THROWS_AS(critic_targets(std::vector<Transition>{}, ta, tc, 0.9), ContractViolation);
}

TEST_CASE("critic loss on a one-unit critic") {
  // Q(s, a) = 0.5 s + 2 a0 - a1 + 0.1
  nn::MlpParams critic;
  nn::LayerParams l;
  l.weights = nn::Matrix(1, 3);
  l.weights.data = {0.5, 2.0, -1.0};
  l.bias = {0.1};
  critic.layers.push_back(l);
  Transition t{{0.4}, {0.3, 0.2}, 1.5, {0.0}, true};
  const std::vector<Transition> batch{t};
  const std::vector<double> y{1.5};
  const double q = 0.5 * 0.4 + 2.0 * 0.3 - 0.2 + 0.1;
  const auto lg = critic_loss_gradient(critic, batch, y);
  CHECK(lg.value == doctest::Approx((1.5 - q) * (1.5 - q)));
  CHECK(lg.grads.layers[0].bias[0] == doctest::Approx(2.0 * (q - 1.5)));
}

TEST_CASE("critic loss gradient matches finite differences") {
  Rng rng(8);
  const std::size_t hidden[] = {4};
  auto critic = make_critic(3, hidden, 11);  // [5, 4, 1]
  for (auto& layer : critic.layers)
    for (double& b : layer.bias) b = rng.uniform(-0.3, 0.3);
  const auto batch = random_batch(rng, 6, 3);
  std::vector<double> y;
  for (const auto& t : batch) y.push_back(t.reward);
  const auto lg = critic_loss_gradient(critic, batch, y);

  auto loss = [&](const nn::MlpParams& net) {
    double s = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::vector<double> in = batch[i].state;
      in.insert(in.end(), batch[i].action.begin(), batch[i].action.end());
      const double e = oracle::evaluate(net, in)[0] - y[i];
      s += e * e;
    }
    return s / static_cast<double>(batch.size());
  };
  for (std::size_t li = 0; li < critic.layers.size(); ++li) {
    for (std::size_t k = 0; k < critic.layers[li].weights.data.size(); ++k) {
      auto f = [&](double v) {
        auto net = critic;
        net.layers[li].weights.data[k] = v;
        return loss(net);
      };
      const double fd = oracle::central_difference(f, critic.layers[li].weights.data[k], 1e-6);
      CHECK(oracle::close(lg.grads.layers[li].weights.data[k], fd));
    }
    for (std::size_t k = 0; k < critic.layers[li].bias.size(); ++k) {
      auto f = [&](double v) {
        auto net = critic;
        net.layers[li].bias[k] = v;
        return loss(net);
      };
      CHECK(oracle::close(lg.grads.layers[li].bias[k], oracle::central_difference(f, critic.layers[li].bias[k], 1e-6)));
    }
  }
}

TEST_CASE("critic update at the fixed point changes nothing") {
  auto cfg = small_config();
  Agent agent(2, cfg, AgentSeeds::from_master(1));
  Rng rng(2);
  auto batch = random_batch(rng, 8, 2);
  for (auto& t : batch) {
    t.done = true;
    std::vector<double> in = t.state;
    in.insert(in.end(), t.action.begin(), t.action.end());
    t.reward = nn::predict(agent.critic(), in)[0];
  }
  const auto before = agent.critic();
  CHECK(agent.critic_update(batch) == 0.0);
  CHECK(agent.critic() == before);
}

TEST_CASE("updates touch only their own network") {
  Agent agent(3, small_config(), AgentSeeds::from_master(6));
  Rng rng(4);
  const auto batch = random_batch(rng, 8, 3);
  auto actor = agent.actor();
  agent.critic_update(batch);
  CHECK(agent.actor() == actor);
  auto critic = agent.critic();
  agent.actor_update(batch);
  CHECK(agent.critic() == critic);
  CHECK_FALSE(agent.actor() == actor);
}

TEST_CASE("critic independent of the action leaves the actor unchanged") {
  Agent agent(3, small_config(), AgentSeeds::from_master(6));
  auto& first = agent.mutable_critic().layers[0].weights;
  for (std::size_t r = 0; r < first.rows; ++r) first(r, 3) = first(r, 4) = 0.0;
  Rng rng(4);
  const auto batch = random_batch(rng, 8, 3);
  const auto actor = agent.actor();
  const auto g = actor_objective_gradient(agent.actor(), agent.critic(), batch);
  for (const auto& l : g.grads.layers) {
    for (double v : l.weights.data) CHECK(v == 0.0);
    for (double v : l.bias) CHECK(v == 0.0);
  }
  agent.actor_update(batch);
  CHECK(agent.actor() == actor);
}

TEST_CASE("actor gradient matches finite differences of J") {
  Rng rng(10);
  const std::size_t ah[] = {4};
  const std::size_t ch[] = {5};
  auto actor = make_actor(3, ah, 1);
  const auto critic = make_critic(3, ch, 2);
  for (auto& l : actor.layers)
    for (double& b : l.bias) b = rng.uniform(-0.3, 0.3);
  const auto batch = random_batch(rng, 8, 3);
  std::vector<std::vector<double>> states;
  for (const auto& t : batch) states.push_back(t.state);

  const auto g = actor_objective_gradient(actor, critic, batch);
  CHECK(g.value == doctest::Approx(oracle::actor_objective(actor, critic, states)).epsilon(1e-12));
  for (std::size_t li = 0; li < actor.layers.size(); ++li)
    for (std::size_t k = 0; k < actor.layers[li].weights.data.size(); ++k) {
      auto f = [&](double v) {
        auto net = actor;
        net.layers[li].weights.data[k] = v;
        return oracle::actor_objective(net, critic, states);
      };
      CHECK(oracle::close(g.grads.layers[li].weights.data[k],
                          oracle::central_difference(f, actor.layers[li].weights.data[k], 1e-6)));
    }
}

TEST_CASE("actor climbs to the critic's maximum") {
  // Critic: piecewise-linear interpolant of -(a0 - 0.5)^2 on knots -1, -0.75, ..., 1,
  // built from relu hinges. Its maximum is at a0 = 0.5.
  auto cfg = small_config();
  cfg.actor_hidden = {};
  cfg.critic_hidden = {8};
  cfg.lr_actor = 2e-3;
  Agent agent(1, cfg, AgentSeeds::from_master(3));
  auto& critic = agent.mutable_critic();
  auto f = [](double a) { return -(a - 0.5) * (a - 0.5); };
  std::vector<double> slopes;
  for (int k = 0; k < 8; ++k) {
    const double t0 = -1.0 + 0.25 * k;
    slopes.push_back((f(t0 + 0.25) - f(t0)) / 0.25);
  }
  auto& hidden = critic.layers[0];
  auto& out = critic.layers[1];
  for (std::size_t k = 0; k < 8; ++k) {
    hidden.weights(k, 0) = 0.0;
    hidden.weights(k, 1) = 1.0;
    hidden.weights(k, 2) = 0.0;
    hidden.bias[k] = -(-1.0 + 0.25 * static_cast<double>(k));
    out.weights(0, k) = k == 0 ? slopes[0] : slopes[k] - slopes[k - 1];
  }
  out.bias[0] = f(-1.0);
  CHECK(nn::predict(critic, std::vector<double>{0.0, 0.5, 0.0})[0] == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<Transition> batch;
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) batch.push_back({{s}, {0, 0}, 0.0, {s}, true});
  for (int i = 0; i < 3000; ++i) agent.actor_update(batch);
  for (const auto& t : batch) CHECK(nn::predict(agent.actor(), t.state)[0] == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("soft update") {
  const std::size_t hidden[] = {3};
  const auto online = make_actor(2, hidden, 1);
  auto target = make_actor(2, hidden, 2);
  const auto before = target;
  soft_update(target, online, 1.0);
  CHECK(target == online);

  nn::MlpParams one, zero_net;
  nn::LayerParams l;
  l.weights = nn::Matrix(1, 1);
  l.bias = {0.0};
  zero_net.layers.push_back(l);
  l.weights.data = {1.0};
  l.bias = {1.0};
  one.layers.push_back(l);
  auto t = zero_net;
  for (int i = 0; i < 1000; ++i) soft_update(t, one, 0.001);
  const double expected = 1.0 - std::pow(0.999, 1000);
  CHECK(t.layers[0].weights.data[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.6323).epsilon(1e-4));

  auto unchanged = before;
  soft_update(unchanged, online, 0.0);
  CHECK(unchanged == before);
}

TEST_CASE("train_step waits for warmup") {
  auto cfg = small_config();
  Agent a(3, cfg, AgentSeeds::from_master(12));
  Rng rng(3);
  for (std::size_t i = 0; i + 1 < cfg.warmup_steps; ++i) a.remember(random_transition(rng, 3));
  const auto actor = a.actor();
  const auto critic = a.critic();
  CHECK_FALSE(a.train_step().ready);
  CHECK(a.actor() == actor);
  CHECK(a.critic() == critic);
  CHECK(a.target_actor() == actor);

  a.remember(random_transition(rng, 3));
  CHECK(a.train_step().ready);
  CHECK_FALSE(a.critic() == critic);
}

TEST_CASE("train_step is deterministic for a fixed seed and buffer") {
  auto cfg = small_config();
  Agent c(3, cfg, AgentSeeds::from_master(12));
  Agent d(3, cfg, AgentSeeds::from_master(12));
  Rng rng(9);
  for (int i = 0; i < 40; ++i) {
    const auto t = random_transition(rng, 3);
    c.remember(t);
    d.remember(t);
  }
  for (int i = 0; i < 20; ++i) {
    const auto mc = c.train_step();
    const auto md = d.train_step();
    CHECK(mc.critic_loss == md.critic_loss);
    CHECK(mc.mean_q == md.mean_q);
  }
  CHECK(c.actor() == d.actor());
  CHECK(c.target_critic() == d.target_critic());
  CHECK_FALSE(c.target_critic() == c.critic());
}

TEST_CASE("agent checkpoint round trip") {
  Agent agent(4, small_config(), AgentSeeds::from_master(2));
  const auto path = std::filesystem::temp_directory_path() / "fusedrive_agent.ckpt";
  FeatureScaling scaling{25.0, 3.0, 1.0};
  save_agent(agent, scaling, path);
  const auto ck = load_agent(path);
  CHECK(ck.actor == agent.actor());
  CHECK(ck.critic == agent.critic());
  CHECK(ck.target_actor == agent.target_actor());
  CHECK(ck.target_critic == agent.target_critic());
  CHECK(ck.scaling.speed_scale == 25.0);
  CHECK(ck.scaling.angle_scale == 3.0);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS_AS(load_agent(path), LoadError);
  std::filesystem::remove(path);
}
