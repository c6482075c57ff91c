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

#include "dapfl/random.h"

#include <openssl/rand.h>

#include <vector>

#include "dapfl/bigint.h"
#include "dapfl/errors.h"

namespace dapfl {

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DeterministicRandom::DeterministicRandom(std::uint64_t seed)
    : state_(gmp_randinit_mt) {
  state_.seed(mpz_class(std::to_string(seed)));
}

mpz_class DeterministicRandom::Below(const mpz_class& bound) {
  if (bound <= 0) throw DomainError("random bound must be positive");
  return state_.get_z_range(bound);
}

mpz_class DeterministicRandom::Bits(unsigned bits) {
  return state_.get_z_bits(bits);
}

mpz_class SystemRandom::Bits(unsigned bits) {
  std::vector<std::uint8_t> buf((bits + 7) / 8);
  if (!buf.empty() &&
      RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) {
    throw Error("RAND_bytes failed");
  }
  mpz_class v = FromBigEndian(buf);
  unsigned extra = static_cast<unsigned>(buf.size() * 8) - bits;
  return v >> extra;
}

mpz_class SystemRandom::Below(const mpz_class& bound) {
  if (bound <= 0) throw DomainError("random bound must be positive");
  // Rejection sampling keeps the result exactly uniform.
  unsigned bits = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
  for (;;) {
    mpz_class v = Bits(bits);
    if (v < bound) return v;
  }
}

}  // namespace dapfl
