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

#include "dapfl/bigint.h"

#include <bit>
#include <cstring>
#include <string>

#include "dapfl/errors.h"

namespace dapfl {

std::size_t ByteLength(const mpz_class& value) {
  if (value == 0) return 0;
  return (mpz_sizeinbase(value.get_mpz_t(), 2) + 7) / 8;
}

Bytes ToBigEndian(const mpz_class& value) {
  if (value < 0) throw DomainError("cannot serialize a negative integer");
  Bytes out(ByteLength(value));
  if (!out.empty()) {
    std::size_t written = 0;
    mpz_export(out.data(), &written, 1, 1, 1, 0, value.get_mpz_t());
    out.resize(written);
  }
  return out;
}

Bytes ToBigEndian(const mpz_class& value, std::size_t width) {
  Bytes raw = ToBigEndian(value);
  if (raw.size() > width) {
    throw RangeError("integer needs " + std::to_string(raw.size()) +
                     " bytes, field holds " + std::to_string(width));
  }
  Bytes out(width - raw.size(), 0);
  out.insert(out.end(), raw.begin(), raw.end());
  return out;
}

mpz_class FromBigEndian(std::span<const std::uint8_t> bytes) {
  mpz_class v;
  if (!bytes.empty()) {
    mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  }
  return v;
}

void ByteWriter::U8(std::uint8_t v) { out_.push_back(v); }

void ByteWriter::U32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::U64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::Raw(std::span<const std::uint8_t> bytes) {
  out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::Blob(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > UINT32_MAX) throw RangeError("blob exceeds 4 GiB");
  U32(static_cast<std::uint32_t>(bytes.size()));
  Raw(bytes);
}

void ByteWriter::BigInt(const mpz_class& v) { Blob(ToBigEndian(v)); }

std::span<const std::uint8_t> ByteReader::Raw(std::size_t n) {
  if (n > remaining()) {
    throw TruncatedError("need " + std::to_string(n) + " bytes, have " +
                         std::to_string(remaining()));
  }
  auto view = in_.subspan(pos_, n);
  pos_ += n;
  return view;
}

std::uint8_t ByteReader::U8() { return Raw(1)[0]; }

std::uint32_t ByteReader::U32() {
  auto b = Raw(4);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

std::uint64_t ByteReader::U64() {
  auto b = Raw(8);
  std::uint64_t v = 0;
  for (auto byte : b) v = (v << 8) | byte;
  return v;
}

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

std::span<const std::uint8_t> ByteReader::Blob() {
  std::uint32_t n = U32();
  return Raw(n);
}

mpz_class ByteReader::BigInt() { return FromBigEndian(Blob()); }

void ByteReader::ExpectDone() const {
  if (!done()) {
    throw FormatError(std::to_string(remaining()) + " trailing bytes");
  }
}

}  // namespace dapfl
