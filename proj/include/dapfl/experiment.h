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

// Experiment runner: prepares data and keys, drives the round protocol over
// the configured transport, and records per-round metrics.

#ifndef DAPFL_EXPERIMENT_H_
#define DAPFL_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dapfl/config.h"
#include "dapfl/ml.h"

namespace dapfl::harness {

struct ClientMetrics {
  std::uint32_t client = 0;
  bool completed = false;  // the client produced an upload
  bool included = false;   // the upload is in C(t)
  double eta = 0.0;
  int alpha = 0;
  bool has_reward = false;
  double reward = 0.0;
  double slack = 0.0;
  double lambda = 0.0;
  bool violation = false;
};

struct RoundMetrics {
  std::uint32_t round = 0;
  ml::EvalReport global;        // W(t+1) on the test set
  std::size_t legitimate = 0;   // |C(t)|
  bool skipped = false;         // no upload verified; W(t) kept
  std::vector<ClientMetrics> clients;
  double wall_seconds = 0.0;
};

struct ExperimentData {
  std::vector<ml::Dataset> shards;  // one per client
  ml::Dataset test;
};

// Loads or synthesizes the data and splits the training rows over clients.
ExperimentData PrepareData(const ExperimentConfig& cfg);

using RoundCallback = std::function<void(const RoundMetrics&)>;

// Runs cfg.rounds rounds. Deterministic under cfg.seed with the in-process
// transport and seeded nonces. Client failures and empty rounds are recorded,
// not thrown; setup errors (data, keys, headroom) throw.
std::vector<RoundMetrics> RunExperiment(const ExperimentConfig& cfg,
                                        const RoundCallback& on_round = {});

enum class MetricsFormat { kCsv, kJsonl };

// .csv -> kCsv; .jsonl or .json -> kJsonl; anything else throws ConfigError.
MetricsFormat FormatForPath(const std::filesystem::path& path);

// CSV: one row per (round, client) with the header in MetricsCsvHeader().
// JSONL: one object per round. Reals carry 9 significant digits.
void ExportMetrics(const std::vector<RoundMetrics>& records, std::ostream& out,
                   MetricsFormat format, bool wall_time = false);
void ExportMetrics(const std::vector<RoundMetrics>& records,
                   const std::filesystem::path& path, MetricsFormat format,
                   bool wall_time = false);
std::string MetricsCsvHeader(bool wall_time = false);

}  // namespace dapfl::harness

#endif  // DAPFL_EXPERIMENT_H_
