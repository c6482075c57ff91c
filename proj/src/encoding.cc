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

#include "dapfl/encoding.h"

#include <cmath>
#include <string>

#include "dapfl/errors.h"

namespace dapfl::encoding {
namespace {

mpz_class HalfModulus(const mpz_class& modulus) {
  mpz_class h;
  mpz_fdiv_q_2exp(h.get_mpz_t(), modulus.get_mpz_t(), 1);
  return h;
}

}  // namespace

mpz_class Quantize(double x, unsigned scale_bits) {
  if (!std::isfinite(x)) throw DomainError("cannot encode a non-finite value");
  // Multiplying by a power of two is exact, so only std::round rounds.
  double scaled = std::round(std::ldexp(x, static_cast<int>(scale_bits)));
  if (!std::isfinite(scaled)) throw RangeError("value overflows double scale");
  return mpz_class(scaled);
}

mpz_class WrapSigned(const mpz_class& v, const mpz_class& modulus) {
  mpz_class half = HalfModulus(modulus);
  if (abs(v) >= half) {
    throw RangeError("fixed-point value exceeds plaintext headroom");
  }
  return v < 0 ? mpz_class(modulus + v) : v;
}

mpz_class UnwrapSigned(const mpz_class& v, const mpz_class& modulus) {
  if (v < 0 || v >= modulus) throw DomainError("residue outside [0, n)");
  return v >= HalfModulus(modulus) ? mpz_class(v - modulus) : v;
}

mpz_class EncodeReal(double x, const FixedPointConfig& cfg) {
  return WrapSigned(Quantize(x, cfg.scale_bits), cfg.modulus);
}

double DecodeReal(const mpz_class& v, const FixedPointConfig& cfg) {
  mpz_class s = UnwrapSigned(v, cfg.modulus);
  mpq_class q(s);
  mpz_class denom = mpz_class(1) << cfg.scale_bits;
  q /= denom;
  return q.get_d();
}

EncodedModel EncodeWeightedModel(std::span<const double> weights,
                                 std::uint64_t weight,
                                 const FixedPointConfig& cfg) {
  if (weight == 0) throw DomainError("model weight must be positive");
  EncodedModel out;
  out.config = cfg;
  out.coords.reserve(weights.size());
  mpz_class w(std::to_string(weight));
  for (double x : weights) {
    out.coords.push_back(WrapSigned(Quantize(x, cfg.scale_bits) * w, cfg.modulus));
  }
  return out;
}

std::vector<double> DecodeWeightedMean(std::span<const mpz_class> sums,
                                       const mpz_class& total_weight,
                                       const FixedPointConfig& cfg) {
  if (total_weight <= 0) throw DomainError("total weight must be positive");
  mpz_class denom = total_weight << cfg.scale_bits;
  std::vector<double> out;
  out.reserve(sums.size());
  for (const auto& v : sums) {
    mpq_class q(UnwrapSigned(v, cfg.modulus), denom);
    q.canonicalize();
    out.push_back(q.get_d());
  }
  return out;
}

void CheckHeadroom(const FixedPointConfig& cfg, double max_abs_value,
                   std::uint64_t total_weight) {
  if (!(max_abs_value >= 0) || !std::isfinite(max_abs_value)) {
    throw RangeError("max_abs_value must be finite and nonnegative");
  }
  mpz_class bound = Quantize(max_abs_value, cfg.scale_bits) + 1;
  bound *= mpz_class(std::to_string(total_weight));
  if (bound >= HalfModulus(cfg.modulus)) {
    throw RangeError("fixed-point headroom exceeded: 2^" +
                     std::to_string(cfg.scale_bits) + " * " +
                     std::to_string(max_abs_value) + " * " +
                     std::to_string(total_weight) + " >= n/2");
  }
}

std::size_t BlockPayloadBytes(const mpz_class& modulus) {
  std::size_t bits = mpz_sizeinbase(modulus.get_mpz_t(), 2);
  std::size_t record = (bits - 1) / 8;
  if (record < 2 || record - 1 > 255) {
    throw DomainError("modulus size " + std::to_string(bits) +
                      " unsupported for block encoding");
  }
  return record - 1;
}

std::vector<mpz_class> ToBlocks(std::span<const std::uint8_t> bytes,
                                const mpz_class& modulus) {
  const std::size_t payload = BlockPayloadBytes(modulus);
  std::vector<mpz_class> blocks;
  blocks.reserve((bytes.size() + payload - 1) / payload);
  Bytes record(payload + 1);
  for (std::size_t pos = 0; pos < bytes.size(); pos += payload) {
    std::size_t len = std::min(payload, bytes.size() - pos);
    std::fill(record.begin(), record.end(), 0);
    record[0] = static_cast<std::uint8_t>(len);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), len,
                record.begin() + 1);
    blocks.push_back(FromBigEndian(record));
  }
  return blocks;
}

Bytes FromBlocks(std::span<const mpz_class> blocks, const mpz_class& modulus) {
  const std::size_t payload = BlockPayloadBytes(modulus);
  Bytes out;
  out.reserve(blocks.size() * payload);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] < 0) throw FormatError("negative block");
    Bytes record;
    try {
      record = ToBigEndian(blocks[i], payload + 1);
    } catch (const RangeError&) {
      throw FormatError("block " + std::to_string(i) + " too large");
    }
    std::size_t len = record[0];
    bool last = i + 1 == blocks.size();
    if (len == 0 || len > payload || (!last && len != payload)) {
      throw FormatError("block " + std::to_string(i) + " has bad length byte");
    }
    for (std::size_t j = 1 + len; j < record.size(); ++j) {
      if (record[j] != 0) throw FormatError("nonzero padding in final block");
    }
    out.insert(out.end(), record.begin() + 1,
               record.begin() + 1 + static_cast<std::ptrdiff_t>(len));
  }
  return out;
}

}  // namespace dapfl::encoding
