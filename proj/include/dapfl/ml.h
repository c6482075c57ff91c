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

// Small trainable classifiers for local training: multinomial logistic
// regression and a one-hidden-layer ReLU network, both trained with
// mini-batch SGD on softmax cross-entropy.

#ifndef DAPFL_ML_H_
#define DAPFL_ML_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dapfl::ml {

enum class ModelKind : std::uint8_t { kLogistic = 0, kMlp = 1 };

std::string ToString(ModelKind kind);
ModelKind ParseModelKind(const std::string& name);

struct ModelShape {
  ModelKind kind = ModelKind::kLogistic;
  std::size_t inputs = 0;
  std::size_t classes = 0;
  // Hidden width; only used by kMlp.
  std::size_t hidden = 0;

  std::size_t ParameterCount() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Flattened parameter layout:
//   logistic: W[classes][inputs], b[classes]
//   mlp:      W1[hidden][inputs], b1[hidden], W2[classes][hidden], b2[classes]
struct Model {
  ModelShape shape;
  std::vector<double> weights;
};

// Zero weights, or N(0, init_scale^2) weights when init_scale > 0.
Model MakeModel(const ModelShape& shape, double init_scale, std::mt19937_64& rng);

std::vector<double> Flatten(const Model& model);
// Throws DomainError when the vector length does not match the shape.
Model Unflatten(std::span<const double> weights, const ModelShape& shape);

// Row-major feature matrix with one integer label per row.
struct Dataset {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t dim = 0;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const double> Row(std::size_t i) const {
    return std::span(features).subspan(i * dim, dim);
  }
  // Throws DataError unless rows, labels and class range agree and size > 0.
  void Validate() const;
  // Rows selected by index, in the given order.
  Dataset Subset(std::span<const std::size_t> rows) const;
};

struct EvalReport {
  double loss = 0.0;      // mean cross-entropy
  double accuracy = 0.0;  // fraction of argmax hits
  double f1 = 0.0;        // macro-averaged F1
};

// Class scores before softmax for one input row.
std::vector<double> Logits(const Model& model, std::span<const double> x);

EvalReport Evaluate(const Model& model, const Dataset& data);

// Fraction of positions where labels and predictions agree.
double Accuracy(std::span<const int> labels, std::span<const int> predictions);

// Unweighted mean of per-class F1 over classes occurring in either labels or
// predictions. A class with zero precision and recall contributes 0.
double MacroF1(std::span<const int> labels, std::span<const int> predictions);

// Mean cross-entropy over `rows` and its gradient (overwrites `grad`).
double LossAndGradient(const Model& model, const Dataset& data,
                       std::span<const std::size_t> rows,
                       std::vector<double>& grad);

// w <- w - eta * grad
void SgdStep(std::span<double> weights, std::span<const double> grad, double eta);

inline constexpr std::size_t kDefaultBatchSize = 32;

// Runs `alpha` epochs of shuffled mini-batch SGD at rate `eta` and returns
// the trained copy. eta = 0 returns the input unchanged. Throws DomainError
// for eta < 0 or alpha < 1, and TrainingError if the loss or gradient turns
// non-finite.
Model TrainLocal(const Model& model, const Dataset& data, double eta, int alpha,
                 std::mt19937_64& rng, std::size_t batch_size = kDefaultBatchSize);

}  // namespace dapfl::ml

#endif  // DAPFL_ML_H_
