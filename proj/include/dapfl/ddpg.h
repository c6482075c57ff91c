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

// Per-client DDPG agent that picks the local learning rate and epoch count.
//
// The agent solves the Lagrangian relaxation of a budget-constrained MDP:
// each stored transition keeps its raw reward r and constraint slack b, and
// training bootstraps on the augmented reward r - lambda * b, where lambda is
// a nonnegative multiplier moved by projected ascent along b each round.
//
// Networks (hidden width h, ReLU hidden layers):
//   actor  3 -> h -> h -> 2, followed by tanh into [-1, 1]^2
//   critic 5 -> h -> h -> 1, input [loss, accuracy, f1, u_eta, u_alpha]
// The normalized action u in [-1, 1]^2 maps affinely onto
// [eta_min, eta_max] x [1, alpha_max]; alpha is rounded after the mapping.

#ifndef DAPFL_DDPG_H_
#define DAPFL_DDPG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dapfl/dense_net.h"
#include "dapfl/ml.h"

namespace dapfl::ddpg {

inline constexpr std::size_t kStateDim = 3;
inline constexpr std::size_t kActionDim = 2;

struct AgentState {
  double loss = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;

  static AgentState From(const ml::EvalReport& r) { return {r.loss, r.accuracy, r.f1}; }
  std::array<double, kStateDim> AsArray() const { return {loss, accuracy, f1}; }
};

struct AgentAction {
  double eta = 0.0;
  int alpha = 1;
  // Continuous pre-rounding form in [-1, 1]^2: {u_eta, u_alpha}.
  std::array<double, kActionDim> normalized{};
};

struct Transition {
  AgentState state;
  std::array<double, kActionDim> action{};
  double reward = 0.0;
  AgentState next_state;
  double slack = 0.0;
};

struct RewardWeights {
  double xi1 = 1.0;
  double xi2 = 1.0;
  double xi3 = 1.0;
};

struct ActionBounds {
  double eta_min = 1e-5;
  double eta_max = 1e-2;
  int alpha_max = 30;
};

struct DdpgConfig {
  std::size_t hidden = 64;
  double gamma = 0.99;
  double beta = 0.01;            // soft target rate
  double actor_lr = 1e-4;        // l^A
  double critic_lr = 1e-3;       // l^C
  double lagrangian_lr = 0.05;   // l^L
  std::size_t batch_size = 32;
  std::size_t buffer_capacity = 10000;
  double noise_start = 0.3;
  double noise_end = 0.02;
  // Rounds over which the exploration std decays linearly to noise_end.
  std::size_t noise_decay_rounds = 100;
  // Gradient steps taken per round.
  std::size_t updates_per_round = 1;
  double final_layer_init = 3e-3;
  ActionBounds bounds;
  RewardWeights xi;

  // Throws ConfigError on out-of-range values.
  void Validate() const;
};

// r = xi1 * (loss_prev - loss_curr) + xi2 * (acc_curr - acc_prev)
//   + xi3 * (f1_curr - f1_prev)
double ComputeReward(const ml::EvalReport& prev, const ml::EvalReport& curr,
                     const RewardWeights& xi);

struct LagrangianState {
  double lambda = 0.0;
  double learning_rate = 0.05;
};

// lambda' = max(0, lambda + l^L * slack)
LagrangianState UpdateLagrangian(const LagrangianState& lag, double slack);

// Affine squash of u in [-1, 1] onto the configured intervals.
AgentAction ActionFromNormalized(std::array<double, kActionDim> u,
                                 const ActionBounds& bounds);
// Inverse map for a fixed alpha (modes that pin one hyper-parameter).
double NormalizeAlpha(int alpha, const ActionBounds& bounds);
double NormalizeEta(double eta, const ActionBounds& bounds);

// y = r_aug + gamma * q_next
inline double TdTarget(double augmented_reward, double gamma, double q_next) {
  return augmented_reward + gamma * q_next;
}

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  // Overwrites the oldest entry once full.
  void Add(const Transition& t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_[i]; }

  // Distinct indices drawn uniformly without replacement.
  std::vector<std::size_t> SampleIndices(std::size_t count,
                                         std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Main and target parameter sets for actor and critic.
struct DdpgNets {
  DenseNet actor;
  DenseNet critic;
  DenseNet actor_target;
  DenseNet critic_target;

  // Random main nets, targets initialized as exact copies.
  static DdpgNets Create(std::size_t hidden, double final_layer_init,
                         std::mt19937_64& rng);
};

// tanh(actor(s)), the deterministic policy in normalized action space.
std::array<double, kActionDim> PolicyAction(const DenseNet& actor,
                                            const AgentState& s);
double CriticValue(const DenseNet& critic, const AgentState& s,
                   std::span<const double> action);

// Mean squared TD error over `batch` and its gradient w.r.t. the critic's
// parameters (overwrites `grad`). Targets use the target nets and the
// augmented reward r - lambda * b.
double CriticLossAndGradient(const DdpgNets& nets, double gamma, double lambda,
                             std::span<const Transition> batch,
                             std::vector<double>& grad);

// Negated mean Q(s, tanh(actor(s))) over the batch and its gradient w.r.t.
// the actor's parameters; descending it ascends the policy objective.
double ActorLossAndGradient(const DdpgNets& nets, std::span<const Transition> batch,
                            std::vector<double>& grad);

struct TrainStats {
  bool trained = false;
  double critic_loss = 0.0;
  double actor_objective = 0.0;  // mean Q under the current policy
};

// One DDPG update: critic descent, actor ascent, then soft target updates
// toward the pre-update main parameters. A no-op (trained = false) when the
// buffer holds fewer than config.batch_size transitions.
TrainStats TrainStep(DdpgNets& nets, const LagrangianState& lag,
                     const ReplayBuffer& buffer, const DdpgConfig& config,
                     std::mt19937_64& rng);

// Owns the nets, replay buffer, multiplier and exploration schedule of one
// client. Not thread-safe; each client runs its own instance.
class Agent {
 public:
  Agent(const DdpgConfig& config, std::uint64_t seed);

  // Uniform random action in normalized space (the first round).
  AgentAction RandomAction();
  // Policy action; with explore, Gaussian noise of the scheduled std is
  // added to the raw actor outputs before tanh.
  AgentAction SelectAction(const AgentState& state, bool explore);

  void Observe(const Transition& t) { buffer_.Add(t); }
  // Runs config.updates_per_round TrainSteps; returns the last stats.
  TrainStats Train();
  // Projected multiplier step with the given slack.
  void UpdateMultiplier(double slack) { lag_ = UpdateLagrangian(lag_, slack); }
  // Advances the exploration schedule by one round.
  void AdvanceSchedule() { ++schedule_position_; }
  double NoiseStd() const;

  const DdpgConfig& config() const { return config_; }
  const DdpgNets& nets() const { return nets_; }
  DdpgNets& mutable_nets() { return nets_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  double lambda() const { return lag_.lambda; }
  std::uint64_t schedule_position() const { return schedule_position_; }

  // Versioned binary checkpoint: magic "DPCK", version, layer sizes, the four
  // parameter vectors, lambda, and the schedule position.
  void SaveCheckpoint(const std::filesystem::path& path) const;
  // Throws FormatError on a malformed file or a shape mismatch.
  void LoadCheckpoint(const std::filesystem::path& path);

 private:
  DdpgConfig config_;
  std::mt19937_64 rng_;
  DdpgNets nets_;
  ReplayBuffer buffer_;
  LagrangianState lag_;
  std::uint64_t schedule_position_ = 0;
};

}  // namespace dapfl::ddpg

#endif  // DAPFL_DDPG_H_
