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

#ifndef DAPFL_DENSE_NET_H_
#define DAPFL_DENSE_NET_H_

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace dapfl::ddpg {

// Fully connected network with ReLU hidden layers and a linear output layer.
// Parameters are one flat vector; layer l stores W[out][in] then b[out].
class DenseNet {
 public:
  DenseNet() = default;
  // layer_sizes = {inputs, hidden..., outputs}; at least two entries.
  explicit DenseNet(std::vector<std::size_t> layer_sizes);

  // Hidden layers ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer
  // ~ U(-final_scale, final_scale) so initial outputs sit near zero.
  void InitRandom(std::mt19937_64& rng, double final_scale);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t inputs() const { return sizes_.front(); }
  std::size_t outputs() const { return sizes_.back(); }
  std::size_t ParameterCount() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Cached activations of one forward pass, consumed by Backward.
  struct Tape {
    // values[0] is the input; values[l] the post-activation of layer l.
    std::vector<std::vector<double>> values;
  };

  std::vector<double> Forward(std::span<const double> x) const;
  std::vector<double> Forward(std::span<const double> x, Tape& tape) const;

  // Back-propagates d(loss)/d(output). Adds parameter gradients into
  // `param_grad` (same layout as params()) and returns d(loss)/d(input).
  std::vector<double> Backward(const Tape& tape, std::span<const double> grad_out,
                               std::span<double> param_grad) const;

  bool SameShape(const DenseNet& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;  // start of W for each layer
  std::vector<double> params_;
};

// target <- beta * source + (1 - beta) * target, elementwise.
void SoftUpdate(DenseNet& target, const DenseNet& source, double beta);
void SoftUpdate(std::span<double> target, std::span<const double> source,
                double beta);

}  // namespace dapfl::ddpg

#endif  // DAPFL_DENSE_NET_H_
