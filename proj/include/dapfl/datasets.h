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

// Dataset sources for experiments: IDX files, synthetic Gaussian blobs, and
// the size-heterogeneous split across clients.

#ifndef DAPFL_DATASETS_H_
#define DAPFL_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dapfl/ml.h"

namespace dapfl::harness {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads an IDX image file and its label file; pixels scale to [0, 1] and
// the task has 10 classes. limit > 0 keeps only the first `limit` rows.
// Throws FormatError (bad magic), TruncatedError, or DataError (count
// mismatch, label outside [0, 9]).
ml::Dataset LoadIdx(const std::filesystem::path& images,
                    const std::filesystem::path& labels, std::size_t limit = 0);

// Gaussian blobs with a shared anisotropic covariance. Noise has standard
// deviation running geometrically from 1 down to 1 / condition along the axes
// of a random rotation; class centers are offset by separation * m_k * s with
// m_k ~ N(0, I), so every axis carries the same signal-to-noise ratio. For
// condition > 1 the class-mean direction that plain gradient descent follows
// first is not the best separating direction, and reaching the best one takes
// many small steps.
struct SynthSpec {
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t per_class = 300;
  double separation = 1.0;
  double condition = 1.0;
  std::uint64_t seed = 0;  // fixes the geometry
};

// `stream` selects an independent sample from the same geometry (for
// example 0 for training rows, 1 for test rows). Rows come shuffled.
ml::Dataset SynthDataset(const SynthSpec& spec, std::uint64_t stream = 0);

struct PartitionSpec {
  std::size_t clients = 5;
  double size_mean = 600.0;
  double size_std = 200.0;
  std::uint64_t seed = 0;
};

// Disjoint client shards with sizes drawn from N(mean, std), rounded and
// clamped to >= 1. If the draws exceed the source they are scaled down
// proportionally. Throws DataError when there are fewer rows than clients.
std::vector<ml::Dataset> Partition(const ml::Dataset& data, const PartitionSpec& spec);

}  // namespace dapfl::harness

#endif  // DAPFL_DATASETS_H_
