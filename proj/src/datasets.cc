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

#include "dapfl/datasets.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "dapfl/bigint.h"
#include "dapfl/errors.h"
#include "dapfl/random.h"

namespace dapfl::harness {
namespace {

Bytes ReadFile(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Random orthogonal matrix (row-major) by Gram-Schmidt on Gaussian columns.
std::vector<double> RandomRotation(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> q(d * d);
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> v(d);
    for (double& x : v) x = n01(rng);
    for (std::size_t p = 0; p < c; ++p) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += v[r] * q[r * d + p];
      for (std::size_t r = 0; r < d; ++r) v[r] -= dot * q[r * d + p];
    }
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t r = 0; r < d; ++r) q[r * d + c] = v[r] / norm;
  }
  return q;
}

}  // namespace

ml::Dataset LoadIdx(const std::filesystem::path& images,
                    const std::filesystem::path& labels, std::size_t limit) {
  Bytes img = ReadFile(images);
  Bytes lab = ReadFile(labels);
  ByteReader ir(img), lr(lab);
  if (ir.U32() != kIdxImageMagic) throw FormatError("not an IDX image file: " + images.string());
  if (lr.U32() != kIdxLabelMagic) throw FormatError("not an IDX label file: " + labels.string());
  std::uint32_t count = ir.U32();
  std::uint32_t rows = ir.U32();
  std::uint32_t cols = ir.U32();
  std::uint32_t label_count = lr.U32();
  if (count != label_count) {
    throw DataError("image count " + std::to_string(count) + " != label count " +
                    std::to_string(label_count));
  }
  std::size_t n = limit > 0 ? std::min<std::size_t>(limit, count) : count;
  std::size_t dim = static_cast<std::size_t>(rows) * cols;
  if (dim == 0) throw DataError("IDX images have zero pixels");
  if (ir.remaining() / dim < count) throw TruncatedError("IDX image data truncated");
  if (lr.remaining() < count) throw TruncatedError("IDX label data truncated");

  ml::Dataset d;
  d.dim = dim;
  d.classes = 10;
  auto pixels = ir.Raw(n * dim);
  d.features.resize(n * dim);
  std::transform(pixels.begin(), pixels.end(), d.features.begin(),
                 [](std::uint8_t p) { return p / 255.0; });
  auto ls = lr.Raw(n);
  for (std::uint8_t l : ls) {
    if (l > 9) throw DataError("label " + std::to_string(l) + " outside [0, 9]");
    d.labels.push_back(l);
  }
  d.Validate();
  return d;
}

ml::Dataset SynthDataset(const SynthSpec& spec, std::uint64_t stream) {
  if (spec.classes < 2 || spec.dim < 1 || spec.per_class < 1) {
    throw DataError("synthetic task needs >= 2 classes, >= 1 dim and >= 1 row per class");
  }
  if (!(spec.separation > 0.0) || !(spec.condition >= 1.0)) {
    throw DataError("synthetic separation must be > 0 and condition >= 1");
  }
  const std::size_t d = spec.dim;
  std::mt19937_64 geo(MixSeed(spec.seed, 0));
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> rot = RandomRotation(d, geo);
  std::vector<double> scale(d);
  for (std::size_t k = 0; k < d; ++k) {
    double t = d == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(d - 1);
    scale[k] = std::pow(spec.condition, -t);
  }
  // Centers in the rotated basis.
  std::vector<double> centers(spec.classes * d);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < d; ++k) {
      centers[c * d + k] = spec.separation * n01(geo) * scale[k];
    }
  }

  std::mt19937_64 rng(MixSeed(spec.seed, 1 + stream));
  ml::Dataset out;
  out.dim = d;
  out.classes = spec.classes;
  const std::size_t total = spec.classes * spec.per_class;
  out.features.resize(total * d);
  out.labels.resize(total);
  std::vector<double> latent(d);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t c = i % spec.classes;
    out.labels[i] = static_cast<int>(c);
    for (std::size_t k = 0; k < d; ++k) latent[k] = centers[c * d + k] + scale[k] * n01(rng);
    for (std::size_t r = 0; r < d; ++r) {
      double x = 0.0;
      for (std::size_t k = 0; k < d; ++k) x += rot[r * d + k] * latent[k];
      out.features[i * d + r] = x;
    }
  }
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return out.Subset(order);
}

std::vector<ml::Dataset> Partition(const ml::Dataset& data, const PartitionSpec& spec) {
  if (spec.clients < 1) throw DataError("partition needs at least one client");
  if (data.size() < spec.clients) {
    throw DataError("cannot split " + std::to_string(data.size()) + " rows over " +
                    std::to_string(spec.clients) + " clients");
  }
  std::mt19937_64 rng(MixSeed(spec.seed, 0));
  std::normal_distribution<double> law(spec.size_mean, spec.size_std);
  std::vector<std::size_t> sizes(spec.clients);
  for (auto& s : sizes) {
    double draw = spec.size_std > 0.0 ? law(rng) : spec.size_mean;
    s = static_cast<std::size_t>(std::max(1.0, std::round(draw)));
  }
  std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total > data.size()) {
    double ratio = static_cast<double>(data.size()) / static_cast<double>(total);
    for (auto& s : sizes) {
      s = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(s * ratio)));
    }
    // Flooring at 1 can still overshoot when many shards are tiny.
    total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    for (std::size_t i = 0; total > data.size(); i = (i + 1) % sizes.size()) {
      if (sizes[i] > 1) {
        --sizes[i];
        --total;
      }
    }
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ml::Dataset> parts;
  std::size_t offset = 0;
  for (std::size_t s : sizes) {
    parts.push_back(data.Subset(std::span(order).subspan(offset, s)));
    offset += s;
  }
  return parts;
}

}  // namespace dapfl::harness
