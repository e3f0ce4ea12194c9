#include <vector>

#include <benchmark/benchmark.h>

#include "fusedrive/apf.hpp"
#include "fusedrive/ddpg.hpp"
#include "fusedrive/sensors.hpp"
#include "fusedrive/sim.hpp"

using namespace fusedrive;

namespace {

const std::vector<std::size_t> kHidden{64, 32};

void bm_actor_forward(benchmark::State& state) {
  const auto actor = ddpg::make_actor(4, kHidden, 1);
  const std::vector<double> x{0.5, 0.5, 0.01, -0.2};
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(actor, x));
}
BENCHMARK(bm_actor_forward);

void bm_critic_backward(benchmark::State& state) {
  const auto critic = ddpg::make_critic(4, kHidden, 2);
  const std::vector<double> x{0.5, 0.5, 0.01, -0.2, 0.3, 0.7};
  const std::vector<double> g{1.0};
  const auto pass = nn::forward(critic, x);
  for (auto _ : state) benchmark::DoNotOptimize(nn::backward(critic, pass.cache, g));
}
BENCHMARK(bm_critic_backward);

void bm_train_step(benchmark::State& state) {
  ddpg::AgentConfig cfg;
  cfg.batch_size = static_cast<std::size_t>(state.range(0));
  cfg.warmup_steps = 0;
  ddpg::Agent agent(4, cfg, ddpg::AgentSeeds::from_master(3));
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    auto s = std::vector<double>{rng.uniform01(), rng.uniform01(), rng.uniform(-0.1, 0.1), rng.uniform(-1, 1)};
    agent.remember({s, {rng.uniform(-1, 1), rng.uniform(-1, 1)}, rng.uniform(0, 2), s, false});
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.train_step());
}
BENCHMARK(bm_train_step)->Arg(32)->Arg(64)->Arg(128);

void bm_projection(benchmark::State& state) {
  const auto track = sim::make_oval_track(100, 30, 6);
  Rng rng(7);
  std::vector<Vec2> points;
  for (int i = 0; i < 256; ++i) points.push_back({rng.uniform(-40, 140), rng.uniform(-10, 70)});
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim::project_to_centerline(track, points[i++ % points.size()]));
}
BENCHMARK(bm_projection);

void bm_observe(benchmark::State& state) {
  const auto track = sim::make_oval_track(100, 30, 6);
  sim::WorldState world;
  world.ego = sim::pose_at(track, 10, 0, 12);
  for (int k = 0; k < state.range(0); ++k) world.opponents.push_back(sim::pose_at(track, 20.0 + 8.0 * k, 2.0, 8));
  for (auto _ : state) benchmark::DoNotOptimize(sensors::observe(world, track));
}
BENCHMARK(bm_observe)->Arg(0)->Arg(4)->Arg(16);

void bm_apf(benchmark::State& state) {
  sensors::Observation obs;
  obs.opponents.fill(sensors::kMaxRange);
  for (std::size_t k = 0; k < sensors::kSectorCount; k += 3) obs.opponents[k] = 5.0 + static_cast<double>(k);
  const apf::ApfParams params;
  for (auto _ : state) benchmark::DoNotOptimize(apf::apf_control(sensors::extract_obstacles(obs), params));
}
BENCHMARK(bm_apf);

}  // namespace

BENCHMARK_MAIN();
