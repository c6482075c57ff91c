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

// Per-client, per-round resource budgets and the budget constraint
//   alpha * E_cpt + 2 * E_cmu <= E
// whose slack b = alpha * E_cpt + 2 * E_cmu - E drives the Lagrangian
// multiplier of the hyper-parameter agent.

#ifndef DAPFL_RESOURCE_H_
#define DAPFL_RESOURCE_H_

#include <cstdint>
#include <string>

namespace dapfl::resource {

enum class BudgetLaw : std::uint8_t { kGaussian, kUniform };

std::string ToString(BudgetLaw law);
BudgetLaw ParseBudgetLaw(const std::string& name);

struct ResourceSample {
  double budget = 0.0;          // E(t)
  double per_epoch_cost = 0.0;  // E_cpt(t)
  double per_comm_cost = 0.0;   // E_cmu(t), one transfer
};

struct ResourceProfile {
  // Compute capability multiplier in (0, 1]; per-epoch cost scales as 1/tier.
  double gpu_tier = 1.0;
  BudgetLaw law = BudgetLaw::kGaussian;
  double budget_mean = 20.0;
  // Standard deviation (Gaussian) or half-width (uniform) of the budget.
  double budget_spread = 4.0;
  // Per-epoch cost at tier 1.0.
  double epoch_cost = 1.0;
  double comm_cost = 1.0;
  // Relative uniform jitter in [0, 1) applied to both unit costs.
  double cost_jitter = 0.0;
  std::uint64_t seed = 0;
};

// Throws DomainError if the profile parameters are out of range.
void Validate(const ResourceProfile& profile);

// Deterministic in (profile.seed, round). Budgets are clamped at zero.
ResourceSample SampleRound(const ResourceProfile& profile, std::uint64_t round);

// b = alpha * E_cpt + 2 * E_cmu - E; the round is feasible iff b <= 0.
double ConstraintSlack(int alpha, const ResourceSample& r);

// floor((E - 2 E_cmu) / E_cpt); may be < 1 when no epoch count is feasible.
long MaxFeasibleAlpha(const ResourceSample& r);

}  // namespace dapfl::resource

#endif  // DAPFL_RESOURCE_H_
