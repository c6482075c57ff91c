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

#include "dapfl/ml.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "dapfl/errors.h"

namespace dapfl::ml {
namespace {

// Numerically stable softmax in place; returns log-sum-exp of the input.
double SoftmaxInPlace(std::vector<double>& z) {
  double max = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return max + std::log(sum);
}

int Argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct MlpView {
  std::span<const double> w1, b1, w2, b2;
};

MlpView SplitMlp(const ModelShape& s, std::span<const double> w) {
  std::size_t o = 0;
  MlpView v;
  v.w1 = w.subspan(o, s.hidden * s.inputs);
  o += s.hidden * s.inputs;
  v.b1 = w.subspan(o, s.hidden);
  o += s.hidden;
  v.w2 = w.subspan(o, s.classes * s.hidden);
  o += s.classes * s.hidden;
  v.b2 = w.subspan(o, s.classes);
  return v;
}

void Affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::vector<double>& out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  out.assign(b.begin(), b.end());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    out[r] += acc;
  }
}

}  // namespace

std::string ToString(ModelKind kind) {
  return kind == ModelKind::kLogistic ? "logistic" : "mlp";
}

ModelKind ParseModelKind(const std::string& name) {
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp") return ModelKind::kMlp;
  throw DomainError("unknown model kind '" + name + "'");
}

std::size_t ModelShape::ParameterCount() const {
  if (kind == ModelKind::kLogistic) return classes * inputs + classes;
  return hidden * inputs + hidden + classes * hidden + classes;
}

Model MakeModel(const ModelShape& shape, double init_scale, std::mt19937_64& rng) {
  if (shape.inputs == 0 || shape.classes < 2) {
    throw DomainError("model needs inputs > 0 and at least two classes");
  }
  if (shape.kind == ModelKind::kMlp && shape.hidden == 0) {
    throw DomainError("mlp needs a hidden width");
  }
  Model m{shape, std::vector<double>(shape.ParameterCount(), 0.0)};
  if (init_scale > 0.0) {
    std::normal_distribution<double> dist(0.0, init_scale);
    for (double& w : m.weights) w = dist(rng);
  }
  return m;
}

std::vector<double> Flatten(const Model& model) { return model.weights; }

Model Unflatten(std::span<const double> weights, const ModelShape& shape) {
  if (weights.size() != shape.ParameterCount()) {
    throw DomainError("parameter vector has " + std::to_string(weights.size()) +
                      " entries, shape needs " +
                      std::to_string(shape.ParameterCount()));
  }
  return Model{shape, std::vector<double>(weights.begin(), weights.end())};
}

void Dataset::Validate() const {
  if (labels.empty()) throw DataError("dataset is empty");
  if (dim == 0 || features.size() != labels.size() * dim) {
    throw DataError("feature matrix does not match label count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
  }
}

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.classes = classes;
  out.features.reserve(rows.size() * dim);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) {
    auto row = Row(r);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(labels[r]);
  }
  return out;
}

std::vector<double> Logits(const Model& model, std::span<const double> x) {
  const ModelShape& s = model.shape;
  std::span<const double> w(model.weights);
  std::vector<double> z;
  if (s.kind == ModelKind::kLogistic) {
    Affine(w.first(s.classes * s.inputs), w.subspan(s.classes * s.inputs), x, z);
    return z;
  }
  MlpView v = SplitMlp(s, w);
  std::vector<double> h;
  Affine(v.w1, v.b1, x, h);
  for (double& a : h) a = std::max(a, 0.0);
  Affine(v.w2, v.b2, h, z);
  return z;
}

double Accuracy(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predictions[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double MacroF1(std::span<const int> labels, std::span<const int> predictions) {
  std::set<int> present(labels.begin(), labels.end());
  present.insert(predictions.begin(), predictions.end());
  if (present.empty()) return 0.0;
  double total = 0.0;
  for (int c : present) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      bool actual = labels[i] == c;
      bool predicted = predictions[i] == c;
      tp += actual && predicted;
      fp += !actual && predicted;
      fn += actual && !predicted;
    }
    if (tp > 0) total += 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  }
  return total / static_cast<double>(present.size());
}

EvalReport Evaluate(const Model& model, const Dataset& data) {
  data.Validate();
  std::vector<int> predictions(data.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> z = Logits(model, data.Row(i));
    predictions[i] = Argmax(z);
    double y_logit = z[static_cast<std::size_t>(data.labels[i])];
    loss += SoftmaxInPlace(z) - y_logit;
  }
  EvalReport r;
  r.loss = loss / static_cast<double>(data.size());
  r.accuracy = Accuracy(data.labels, predictions);
  r.f1 = MacroF1(data.labels, predictions);
  return r;
}

double LossAndGradient(const Model& model, const Dataset& data,
                       std::span<const std::size_t> rows,
                       std::vector<double>& grad) {
  const ModelShape& s = model.shape;
  grad.assign(model.weights.size(), 0.0);
  if (rows.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(rows.size());
  double loss = 0.0;
  std::span<double> g(grad);
  std::vector<double> z, h;
  for (std::size_t r : rows) {
    auto x = data.Row(r);
    const auto y = static_cast<std::size_t>(data.labels[r]);
    if (s.kind == ModelKind::kLogistic) {
      std::span<const double> w(model.weights);
      Affine(w.first(s.classes * s.inputs), w.subspan(s.classes * s.inputs), x, z);
      double y_logit = z[y];
      loss += SoftmaxInPlace(z) - y_logit;
      z[y] -= 1.0;
      for (std::size_t c = 0; c < s.classes; ++c) {
        double d = z[c] * scale;
        double* gw = g.data() + c * s.inputs;
        for (std::size_t j = 0; j < s.inputs; ++j) gw[j] += d * x[j];
        g[s.classes * s.inputs + c] += d;
      }
      continue;
    }
    MlpView v = SplitMlp(s, model.weights);
    Affine(v.w1, v.b1, x, h);
    for (double& a : h) a = std::max(a, 0.0);
    Affine(v.w2, v.b2, h, z);
    double y_logit = z[y];
    loss += SoftmaxInPlace(z) - y_logit;
    z[y] -= 1.0;
    const std::size_t o_b1 = s.hidden * s.inputs;
    const std::size_t o_w2 = o_b1 + s.hidden;
    const std::size_t o_b2 = o_w2 + s.classes * s.hidden;
    std::vector<double> dh(s.hidden, 0.0);
    for (std::size_t c = 0; c < s.classes; ++c) {
      double d = z[c] * scale;
      for (std::size_t k = 0; k < s.hidden; ++k) {
        g[o_w2 + c * s.hidden + k] += d * h[k];
        dh[k] += d * v.w2[c * s.hidden + k];
      }
      g[o_b2 + c] += d;
    }
    for (std::size_t k = 0; k < s.hidden; ++k) {
      if (h[k] <= 0.0) continue;
      for (std::size_t j = 0; j < s.inputs; ++j) g[k * s.inputs + j] += dh[k] * x[j];
      g[o_b1 + k] += dh[k];
    }
  }
  return loss * scale;
}

void SgdStep(std::span<double> weights, std::span<const double> grad, double eta) {
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= eta * grad[i];
}

Model TrainLocal(const Model& model, const Dataset& data, double eta, int alpha,
                 std::mt19937_64& rng, std::size_t batch_size) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw DomainError("learning rate must be finite and nonnegative");
  }
  if (alpha < 1) throw DomainError("epoch count must be at least 1");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  data.Validate();
  Model out = model;
  if (eta == 0.0) return out;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  for (int epoch = 0; epoch < alpha; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t len = std::min(batch_size, order.size() - start);
      double loss = LossAndGradient(
          out, data, std::span(order).subspan(start, len), grad);
      bool finite = std::isfinite(loss);
      for (double gi : grad) finite = finite && std::isfinite(gi);
      if (!finite) {
        std::ostringstream msg;
        msg << "non-finite loss/gradient at epoch " << epoch << ", batch offset "
            << start << " (eta=" << eta << ", loss=" << loss << ")";
        throw TrainingError(msg.str());
      }
      SgdStep(out.weights, grad, eta);
    }
  }
  for (double w : out.weights) {
    if (!std::isfinite(w)) throw TrainingError("training produced non-finite weights");
  }
  return out;
}

}  // namespace dapfl::ml
