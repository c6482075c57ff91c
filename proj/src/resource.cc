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

#include "dapfl/resource.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "dapfl/errors.h"
#include "dapfl/random.h"

namespace dapfl::resource {

std::string ToString(BudgetLaw law) {
  return law == BudgetLaw::kGaussian ? "gaussian" : "uniform";
}

BudgetLaw ParseBudgetLaw(const std::string& name) {
  if (name == "gaussian") return BudgetLaw::kGaussian;
  if (name == "uniform") return BudgetLaw::kUniform;
  throw DomainError("unknown budget law '" + name + "'");
}

void Validate(const ResourceProfile& p) {
  if (!(p.gpu_tier > 0.0 && p.gpu_tier <= 1.0)) {
    throw DomainError("gpu_tier must lie in (0, 1]");
  }
  if (!(p.epoch_cost > 0.0) || !(p.comm_cost >= 0.0)) {
    throw DomainError("epoch cost must be positive and comm cost nonnegative");
  }
  if (!(p.budget_mean >= 0.0) || !(p.budget_spread >= 0.0)) {
    throw DomainError("budget mean and spread must be nonnegative");
  }
  if (!(p.cost_jitter >= 0.0 && p.cost_jitter < 1.0)) {
    throw DomainError("cost_jitter must lie in [0, 1)");
  }
}

ResourceSample SampleRound(const ResourceProfile& p, std::uint64_t round) {
  std::mt19937_64 gen(MixSeed(p.seed, round));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double draw;
  if (p.law == BudgetLaw::kGaussian) {
    draw = p.budget_spread * std::normal_distribution<double>(0.0, 1.0)(gen);
  } else {
    draw = p.budget_spread * unit(gen);
  }
  double cpt_jitter = 1.0 + p.cost_jitter * unit(gen);
  double cmu_jitter = 1.0 + p.cost_jitter * unit(gen);

  ResourceSample s;
  s.budget = std::max(0.0, p.budget_mean + draw);
  s.per_epoch_cost = p.epoch_cost / p.gpu_tier * cpt_jitter;
  s.per_comm_cost = p.comm_cost * cmu_jitter;
  return s;
}

double ConstraintSlack(int alpha, const ResourceSample& r) {
  if (alpha < 1) throw DomainError("epoch count must be at least 1");
  return alpha * r.per_epoch_cost + 2.0 * r.per_comm_cost - r.budget;
}

long MaxFeasibleAlpha(const ResourceSample& r) {
  return static_cast<long>(
      std::floor((r.budget - 2.0 * r.per_comm_cost) / r.per_epoch_cost));
}

}  // namespace dapfl::resource
