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

// Fixed-point encoding of real values into the Paillier plaintext space Z_n.
//
// A real x maps to round(x * 2^f) reduced mod n. Negative values occupy the
// upper half of Z_n: with h = floor(n / 2), residues v < h decode as
// positive and residues v >= h decode as v - n. Encoders accept only
// integers whose magnitude is below h so every encoded value decodes back to
// itself.

#ifndef DAPFL_ENCODING_H_
#define DAPFL_ENCODING_H_

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

#include "dapfl/bigint.h"

namespace dapfl::encoding {

inline constexpr unsigned kDefaultScaleBits = 32;

struct FixedPointConfig {
  unsigned scale_bits = kDefaultScaleBits;
  mpz_class modulus;
};

// Integer image of a (weighted) model vector; coordinates lie in [0, n).
struct EncodedModel {
  std::vector<mpz_class> coords;
  FixedPointConfig config;

  std::size_t dim() const { return coords.size(); }
};

// round(x * 2^f) as a signed integer (half away from zero). Throws
// DomainError for non-finite x.
mpz_class Quantize(double x, unsigned scale_bits);

// Maps a signed integer into Z_n. Throws RangeError if |v| >= floor(n/2).
mpz_class WrapSigned(const mpz_class& v, const mpz_class& modulus);

// Inverse of WrapSigned for residues in [0, n).
mpz_class UnwrapSigned(const mpz_class& v, const mpz_class& modulus);

mpz_class EncodeReal(double x, const FixedPointConfig& cfg);
double DecodeReal(const mpz_class& v, const FixedPointConfig& cfg);

// Coordinate j becomes weight * round(w_j * 2^f) mod n: quantize first, then
// scale by the integer weight, so homomorphic sums are exact integer sums.
EncodedModel EncodeWeightedModel(std::span<const double> weights,
                                 std::uint64_t weight,
                                 const FixedPointConfig& cfg);

// Decodes an aggregate of weighted encodings: returns unwrap(v_j) / (2^f *
// total_weight) per coordinate, computed exactly before the final rounding
// to double.
std::vector<double> DecodeWeightedMean(std::span<const mpz_class> sums,
                                       const mpz_class& total_weight,
                                       const FixedPointConfig& cfg);

// Throws RangeError unless 2^f * max_abs_value * total_weight < n / 2.
void CheckHeadroom(const FixedPointConfig& cfg, double max_abs_value,
                   std::uint64_t total_weight);

// Blockwise packing of an octet string into integers below n.
//
// With P = floor((bits(n) - 1) / 8) - 1 payload bytes per block, each block is
// the big-endian integer of the (P + 1)-byte record [len][payload...] where
// len in [1, P] counts the meaningful payload bytes and the payload is
// zero-padded. Every block but the last has len = P. The record is at most
// floor((bits(n) - 1) / 8) bytes, so every block is < 2^(bits(n) - 1) < n.
// The empty string encodes as no blocks. Requires 1 <= P <= 255.
std::size_t BlockPayloadBytes(const mpz_class& modulus);
std::vector<mpz_class> ToBlocks(std::span<const std::uint8_t> bytes,
                                const mpz_class& modulus);
// Throws FormatError on a malformed block sequence.
Bytes FromBlocks(std::span<const mpz_class> blocks, const mpz_class& modulus);

}  // namespace dapfl::encoding

#endif  // DAPFL_ENCODING_H_
