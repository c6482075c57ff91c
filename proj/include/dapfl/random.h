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

#ifndef DAPFL_RANDOM_H_
#define DAPFL_RANDOM_H_

#include <gmpxx.h>

#include <cstdint>
#include <memory>

namespace dapfl {

// Source of uniformly random big integers. Cryptographic operations take one
// by reference so that tests and experiments can inject a seeded generator.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  // Uniform integer in [0, bound). bound must be positive.
  virtual mpz_class Below(const mpz_class& bound) = 0;

  // Uniform integer with exactly `bits` random bits (top bit not forced).
  virtual mpz_class Bits(unsigned bits) = 0;
};

// Reproducible generator backed by GMP's Mersenne Twister. Not suitable for
// production keys; used for test-mode keys and deterministic experiments.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(std::uint64_t seed);

  mpz_class Below(const mpz_class& bound) override;
  mpz_class Bits(unsigned bits) override;

 private:
  gmp_randclass state_;
};

// Operating-system entropy via OpenSSL's RAND_bytes.
class SystemRandom final : public RandomSource {
 public:
  mpz_class Below(const mpz_class& bound) override;
  mpz_class Bits(unsigned bits) override;
};

// splitmix64 finalizer; derives independent stream seeds from one master.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace dapfl

#endif  // DAPFL_RANDOM_H_
