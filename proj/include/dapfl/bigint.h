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

#ifndef DAPFL_BIGINT_H_
#define DAPFL_BIGINT_H_

#include <gmpxx.h>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dapfl {

using Bytes = std::vector<std::uint8_t>;

// Big-endian magnitude of a nonnegative integer; zero encodes as no bytes.
Bytes ToBigEndian(const mpz_class& value);

// Big-endian magnitude left-padded with zeros to exactly `width` bytes.
// Throws RangeError if the value needs more than `width` bytes.
Bytes ToBigEndian(const mpz_class& value, std::size_t width);

mpz_class FromBigEndian(std::span<const std::uint8_t> bytes);

// Number of bytes needed for the magnitude of `value` (0 for zero).
std::size_t ByteLength(const mpz_class& value);

// Appends big-endian fixed-width integers to a byte buffer.
class ByteWriter {
 public:
  void U8(std::uint8_t v);
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void Raw(std::span<const std::uint8_t> bytes);
  // 4-byte length prefix followed by the bytes.
  void Blob(std::span<const std::uint8_t> bytes);
  // 4-byte length prefix followed by the big-endian magnitude.
  void BigInt(const mpz_class& v);

  const Bytes& bytes() const { return out_; }
  Bytes Take() { return std::move(out_); }

 private:
  Bytes out_;
};

// Reads what ByteWriter writes. Every accessor throws TruncatedError when the
// buffer runs out.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : in_(bytes) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  std::span<const std::uint8_t> Raw(std::size_t n);
  std::span<const std::uint8_t> Blob();
  mpz_class BigInt();

  std::size_t remaining() const { return in_.size() - pos_; }
  bool done() const { return pos_ == in_.size(); }
  // Throws FormatError if unread bytes remain.
  void ExpectDone() const;

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace dapfl

#endif  // DAPFL_BIGINT_H_
