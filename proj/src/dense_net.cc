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

#include "dapfl/dense_net.h"

#include <algorithm>
#include <cmath>

#include "dapfl/errors.h"

namespace dapfl::ddpg {

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes)
    : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw DomainError("network needs at least two layers");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] == 0 || sizes_[l + 1] == 0) {
      throw DomainError("layer sizes must be positive");
    }
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

void DenseNet::InitRandom(std::mt19937_64& rng, double final_scale) {
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    double bound = l + 1 == layers
                       ? final_scale
                       : 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::size_t count = sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    for (std::size_t i = 0; i < count; ++i) params_[offsets_[l] + i] = dist(rng);
  }
}

std::vector<double> DenseNet::Forward(std::span<const double> x) const {
  Tape tape;
  return Forward(x, tape);
}

std::vector<double> DenseNet::Forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != inputs()) {
    throw DomainError("network input has " + std::to_string(x.size()) +
                      " entries, expected " + std::to_string(inputs()));
  }
  const std::size_t layers = sizes_.size() - 1;
  tape.values.resize(layers + 1);
  tape.values[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    const double* w = params_.data() + offsets_[l];
    const double* b = w + out * in;
    const std::vector<double>& a = tape.values[l];
    std::vector<double>& z = tape.values[l + 1];
    z.assign(b, b + out);
    for (std::size_t r = 0; r < out; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < in; ++c) acc += w[r * in + c] * a[c];
      z[r] += acc;
    }
    if (l + 1 < layers) {
      for (double& v : z) v = std::max(v, 0.0);
    }
  }
  return tape.values.back();
}

std::vector<double> DenseNet::Backward(const Tape& tape,
                                       std::span<const double> grad_out,
                                       std::span<double> param_grad) const {
  if (grad_out.size() != outputs() || param_grad.size() != params_.size()) {
    throw DomainError("gradient shape mismatch");
  }
  const std::size_t layers = sizes_.size() - 1;
  std::vector<double> delta(grad_out.begin(), grad_out.end());
  for (std::size_t l = layers; l-- > 0;) {
    const std::size_t in = sizes_[l], out = sizes_[l + 1];
    if (l + 1 < layers) {
      // ReLU derivative, using the cached post-activation.
      const std::vector<double>& z = tape.values[l + 1];
      for (std::size_t r = 0; r < out; ++r) {
        if (z[r] <= 0.0) delta[r] = 0.0;
      }
    }
    const double* w = params_.data() + offsets_[l];
    double* gw = param_grad.data() + offsets_[l];
    double* gb = gw + out * in;
    const std::vector<double>& a = tape.values[l];
    std::vector<double> prev(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      for (std::size_t c = 0; c < in; ++c) {
        gw[r * in + c] += d * a[c];
        prev[c] += d * w[r * in + c];
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

void SoftUpdate(std::span<double> target, std::span<const double> source,
                double beta) {
  if (target.size() != source.size()) throw DomainError("soft update shape mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = beta * source[i] + (1.0 - beta) * target[i];
  }
}

void SoftUpdate(DenseNet& target, const DenseNet& source, double beta) {
  if (!target.SameShape(source)) throw DomainError("soft update shape mismatch");
  SoftUpdate(target.params(), source.params(), beta);
}

}  // namespace dapfl::ddpg
