// Copyright 2026 The dapfl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dapfl/ddpg.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "dapfl/bigint.h"
#include "dapfl/errors.h"

namespace dapfl::ddpg {
namespace {

std::array<double, kStateDim + kActionDim> CriticInput(
    const AgentState& s, std::span<const double> action) {
  return {s.loss, s.accuracy, s.f1, action[0], action[1]};
}

void Descend(std::span<double> params, std::span<const double> grad, double rate) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= rate * grad[i];
}

}  // namespace

void DdpgConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(hidden > 0, "ddpg hidden width must be positive");
  require(gamma > 0.0 && gamma < 1.0, "ddpg gamma must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, "ddpg beta must lie in (0, 1)");
  require(actor_lr >= 0.0 && critic_lr >= 0.0 && lagrangian_lr >= 0.0,
          "ddpg learning rates must be nonnegative");
  require(batch_size > 0, "ddpg batch size must be positive");
  require(buffer_capacity >= batch_size, "ddpg buffer smaller than batch");
  require(noise_start >= 0.0 && noise_end >= 0.0, "noise std must be nonnegative");
  require(bounds.eta_min > 0.0 && bounds.eta_max > bounds.eta_min,
          "eta bounds must satisfy 0 < eta_min < eta_max");
  require(bounds.alpha_max >= 1, "alpha_max must be at least 1");
  require(xi.xi1 > 0.0 && xi.xi2 > 0.0 && xi.xi3 > 0.0,
          "reward weights must be positive");
}

double ComputeReward(const ml::EvalReport& prev, const ml::EvalReport& curr,
                     const RewardWeights& xi) {
  return xi.xi1 * (prev.loss - curr.loss) + xi.xi2 * (curr.accuracy - prev.accuracy) +
         xi.xi3 * (curr.f1 - prev.f1);
}

LagrangianState UpdateLagrangian(const LagrangianState& lag, double slack) {
  LagrangianState out = lag;
  out.lambda = std::max(0.0, lag.lambda + lag.learning_rate * slack);
  return out;
}

AgentAction ActionFromNormalized(std::array<double, kActionDim> u,
                                 const ActionBounds& b) {
  for (double& v : u) v = std::clamp(v, -1.0, 1.0);
  AgentAction a;
  a.normalized = u;
  a.eta = b.eta_min + 0.5 * (u[0] + 1.0) * (b.eta_max - b.eta_min);
  a.eta = std::clamp(a.eta, b.eta_min, b.eta_max);
  double alpha = 1.0 + 0.5 * (u[1] + 1.0) * (b.alpha_max - 1);
  a.alpha = std::clamp(static_cast<int>(std::lround(alpha)), 1, b.alpha_max);
  return a;
}

double NormalizeAlpha(int alpha, const ActionBounds& b) {
  if (b.alpha_max == 1) return 0.0;
  return std::clamp(2.0 * (alpha - 1) / (b.alpha_max - 1) - 1.0, -1.0, 1.0);
}

double NormalizeEta(double eta, const ActionBounds& b) {
  return std::clamp(2.0 * (eta - b.eta_min) / (b.eta_max - b.eta_min) - 1.0, -1.0,
                    1.0);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::Add(const Transition& t) {
  if (items_.size() < capacity_) {
    items_.push_back(t);
  } else {
    items_[next_] = t;
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::SampleIndices(std::size_t count,
                                                     std::mt19937_64& rng) const {
  std::vector<std::size_t> all(items_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min(count, all.size()));
  return all;
}

DdpgNets DdpgNets::Create(std::size_t hidden, double final_layer_init,
                          std::mt19937_64& rng) {
  DdpgNets n;
  n.actor = DenseNet({kStateDim, hidden, hidden, kActionDim});
  n.critic = DenseNet({kStateDim + kActionDim, hidden, hidden, 1});
  n.actor.InitRandom(rng, final_layer_init);
  n.critic.InitRandom(rng, final_layer_init);
  n.actor_target = n.actor;
  n.critic_target = n.critic;
  return n;
}

std::array<double, kActionDim> PolicyAction(const DenseNet& actor,
                                            const AgentState& s) {
  auto raw = actor.Forward(s.AsArray());
  return {std::tanh(raw[0]), std::tanh(raw[1])};
}

double CriticValue(const DenseNet& critic, const AgentState& s,
                   std::span<const double> action) {
  return critic.Forward(CriticInput(s, action))[0];
}

double CriticLossAndGradient(const DdpgNets& nets, double gamma, double lambda,
                             std::span<const Transition> batch,
                             std::vector<double>& grad) {
  grad.assign(nets.critic.ParameterCount(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  DenseNet::Tape tape;
  for (const Transition& t : batch) {
    auto next_action = PolicyAction(nets.actor_target, t.next_state);
    double q_next = CriticValue(nets.critic_target, t.next_state, next_action);
    double y = TdTarget(t.reward - lambda * t.slack, gamma, q_next);
    double q = nets.critic.Forward(CriticInput(t.state, t.action), tape)[0];
    double err = y - q;
    loss += err * err * inv_b;
    double dq = -2.0 * err * inv_b;
    nets.critic.Backward(tape, std::span(&dq, 1), grad);
  }
  return loss;
}

double ActorLossAndGradient(const DdpgNets& nets, std::span<const Transition> batch,
                            std::vector<double>& grad) {
  grad.assign(nets.actor.ParameterCount(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double objective = 0.0;
  DenseNet::Tape actor_tape, critic_tape;
  std::vector<double> critic_scratch(nets.critic.ParameterCount());
  for (const Transition& t : batch) {
    auto raw = nets.actor.Forward(t.state.AsArray(), actor_tape);
    std::array<double, kActionDim> u = {std::tanh(raw[0]), std::tanh(raw[1])};
    double q = nets.critic.Forward(CriticInput(t.state, u), critic_tape)[0];
    objective += q * inv_b;
    double one = 1.0;
    auto dq_dinput = nets.critic.Backward(critic_tape, std::span(&one, 1), critic_scratch);
    std::array<double, kActionDim> d_raw;
    for (std::size_t k = 0; k < kActionDim; ++k) {
      d_raw[k] = -inv_b * dq_dinput[kStateDim + k] * (1.0 - u[k] * u[k]);
    }
    nets.actor.Backward(actor_tape, d_raw, grad);
  }
  return -objective;
}

TrainStats TrainStep(DdpgNets& nets, const LagrangianState& lag,
                     const ReplayBuffer& buffer, const DdpgConfig& config,
                     std::mt19937_64& rng) {
  TrainStats stats;
  if (buffer.size() < config.batch_size) return stats;
  std::vector<Transition> batch;
  batch.reserve(config.batch_size);
  for (std::size_t i : buffer.SampleIndices(config.batch_size, rng)) {
    batch.push_back(buffer.at(i));
  }
  const DenseNet actor_before = nets.actor;
  const DenseNet critic_before = nets.critic;

  std::vector<double> grad;
  stats.critic_loss = CriticLossAndGradient(nets, config.gamma, lag.lambda, batch, grad);
  Descend(nets.critic.params(), grad, config.critic_lr);

  stats.actor_objective = -ActorLossAndGradient(nets, batch, grad);
  Descend(nets.actor.params(), grad, config.actor_lr);

  SoftUpdate(nets.actor_target, actor_before, config.beta);
  SoftUpdate(nets.critic_target, critic_before, config.beta);
  stats.trained = true;
  return stats;
}

Agent::Agent(const DdpgConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed), buffer_(config.buffer_capacity) {
  config_.Validate();
  nets_ = DdpgNets::Create(config_.hidden, config_.final_layer_init, rng_);
  lag_.learning_rate = config_.lagrangian_lr;
}

double Agent::NoiseStd() const {
  if (config_.noise_decay_rounds == 0) return config_.noise_end;
  double frac = std::min(1.0, static_cast<double>(schedule_position_) /
                                  static_cast<double>(config_.noise_decay_rounds));
  return (1.0 - frac) * config_.noise_start + frac * config_.noise_end;
}

AgentAction Agent::RandomAction() {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double u_eta = dist(rng_);
  double u_alpha = dist(rng_);
  return ActionFromNormalized({u_eta, u_alpha}, config_.bounds);
}

AgentAction Agent::SelectAction(const AgentState& state, bool explore) {
  auto raw = nets_.actor.Forward(state.AsArray());
  if (explore) {
    std::normal_distribution<double> noise(0.0, NoiseStd());
    for (double& r : raw) r += noise(rng_);
  }
  return ActionFromNormalized({std::tanh(raw[0]), std::tanh(raw[1])}, config_.bounds);
}

TrainStats Agent::Train() {
  TrainStats last;
  for (std::size_t i = 0; i < config_.updates_per_round; ++i) {
    last = TrainStep(nets_, lag_, buffer_, config_, rng_);
    if (!last.trained) break;
  }
  return last;
}

namespace {

constexpr std::uint8_t kCheckpointMagic[4] = {'D', 'P', 'C', 'K'};
constexpr std::uint8_t kCheckpointVersion = 1;

void WriteNet(ByteWriter& w, const DenseNet& net) {
  w.U32(static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (std::size_t s : net.layer_sizes()) w.U32(static_cast<std::uint32_t>(s));
  for (double p : net.params()) w.F64(p);
}

void ReadNet(ByteReader& r, DenseNet& net) {
  std::uint32_t layers = r.U32();
  std::vector<std::size_t> sizes(layers);
  for (auto& s : sizes) s = r.U32();
  if (sizes != net.layer_sizes()) throw FormatError("checkpoint layer sizes differ");
  for (double& p : net.params()) p = r.F64();
}

}  // namespace

void Agent::SaveCheckpoint(const std::filesystem::path& path) const {
  ByteWriter w;
  w.Raw(kCheckpointMagic);
  w.U8(kCheckpointVersion);
  WriteNet(w, nets_.actor);
  WriteNet(w, nets_.critic);
  WriteNet(w, nets_.actor_target);
  WriteNet(w, nets_.critic_target);
  w.F64(lag_.lambda);
  w.U64(schedule_position_);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(w.bytes().data()),
          static_cast<std::streamsize>(w.bytes().size()));
}

void Agent::LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kCheckpointMagic))) {
    throw FormatError("not an agent checkpoint");
  }
  if (r.U8() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  DdpgNets loaded = nets_;
  ReadNet(r, loaded.actor);
  ReadNet(r, loaded.critic);
  ReadNet(r, loaded.actor_target);
  ReadNet(r, loaded.critic_target);
  double lambda = r.F64();
  std::uint64_t position = r.U64();
  r.ExpectDone();
  if (!(lambda >= 0.0)) throw FormatError("checkpoint multiplier is negative");
  nets_ = std::move(loaded);
  lag_.lambda = lambda;
  schedule_position_ = position;
}

}  // namespace dapfl::ddpg
