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

// Paillier public-key encryption with additive homomorphism, and the Paillier
// digital signature scheme built on the same key structure.
//
// Keys use g = n + 1, so g^m mod n^2 = 1 + m*n and encryption needs a single
// modular exponentiation (the nonce term). Every key generated here satisfies
// gcd(n, lcm(p-1, q-1)) = 1, which is what makes both L(g^rho mod n^2) and
// 1/n mod rho invertible; the signing path depends on both.

#ifndef DAPFL_PAILLIER_H_
#define DAPFL_PAILLIER_H_

#include <gmpxx.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "dapfl/bigint.h"
#include "dapfl/random.h"

namespace dapfl::paillier {

// Keys below this size are refused outright.
inline constexpr unsigned kMinTestBits = 64;
// Smallest modulus accepted when a configuration asks for secure keys.
inline constexpr unsigned kMinSecureBits = 1024;
inline constexpr int kMillerRabinRounds = 64;

struct PublicKey {
  mpz_class n;
  mpz_class g;
  mpz_class n_squared;
  unsigned bit_length = 0;
  // Opaque identifier: first 8 bytes of SHA-256 over the serialized key.
  std::uint64_t key_id = 0;
};

struct PrivateKey {
  // lcm(p-1, q-1)
  mpz_class rho;
  // (L(g^rho mod n^2))^-1 mod n
  mpz_class delta;
  // 1/n mod rho; the n-th root exponent used by the signer.
  mpz_class inv_n_mod_rho;
  PublicKey pub;

  // Prime factors of n and the constants for working mod p^2 and q^2.
  // Decryption and signing run on the half-size moduli and recombine; the
  // results equal the direct formulas above.
  struct Crt {
    mpz_class p, q;
    mpz_class p_squared, q_squared;
    // L_p(g^(p-1) mod p^2)^-1 mod p, and likewise for q.
    mpz_class h_p, h_q;
    mpz_class q_inv_mod_p;
    // q^2 * (q^-2 mod p^2), the CRT basis element for p^2.
    mpz_class basis_p_squared;
  };
  Crt crt;
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  mpz_class value;
  std::uint64_t key_id = 0;

  friend bool operator==(const Ciphertext&, const Ciphertext&) = default;
};

struct Signature {
  mpz_class sigma;
  mpz_class sigma_tilde;

  friend bool operator==(const Signature&, const Signature&) = default;
};

// Builds a public key (n, g) and fills the derived fields.
PublicKey MakePublicKey(const mpz_class& n, const mpz_class& g);

// Generates primes p, q of half the requested size each so that n = p*q has
// exactly `bit_length` bits. Throws DomainError for bit_length < 64 and
// KeyError if no valid pair is found within the retry budget.
KeyPair GenerateKeyPair(unsigned bit_length, RandomSource& rng);

// Deterministic construction from known primes. g defaults to n + 1.
// Throws KeyError when p == q, either is not prime, gcd(pq, (p-1)(q-1)) != 1,
// or the derived inverses do not exist for the supplied g.
KeyPair KeyPairFromPrimes(const mpz_class& p, const mpz_class& q,
                          std::optional<mpz_class> g = std::nullopt);

// L(x) = (x - 1) / n.
mpz_class LFunction(const mpz_class& x, const mpz_class& n);

// Encrypts m in [0, n) with a fresh nonce from Z*_n.
Ciphertext Encrypt(const mpz_class& m, const PublicKey& pk, RandomSource& rng);

// Encrypts with a caller-supplied nonce. Used for known-answer tests.
Ciphertext EncryptWithNonce(const mpz_class& m, const PublicKey& pk,
                            const mpz_class& zeta);

// Same ciphertexts as the public-key versions for the same nonce, computed
// through the factors. For key holders that encrypt under their own key.
Ciphertext Encrypt(const mpz_class& m, const PrivateKey& sk, RandomSource& rng);
Ciphertext EncryptWithNonce(const mpz_class& m, const PrivateKey& sk,
                            const mpz_class& zeta);

mpz_class Decrypt(const Ciphertext& c, const PrivateKey& sk);

// Ciphertext product mod n^2; decrypts to (m1 + m2) mod n.
Ciphertext HomAdd(const Ciphertext& c1, const Ciphertext& c2,
                  const PublicKey& pk);

// Full-domain hash into Z*_{n^2}: SHA-256 in counter mode, reduced mod n^2,
// re-drawn with a bumped attempt counter if the result is not a unit.
mpz_class HashToGroup(std::span<const std::uint8_t> message, const mpz_class& n);

Signature Sign(std::span<const std::uint8_t> message, const PrivateKey& sk);

// Signs a group element directly, skipping the hash. h must lie in Z*_{n^2}.
Signature SignGroupElement(const mpz_class& h, const PrivateKey& sk);

bool Verify(std::span<const std::uint8_t> message, const Signature& sig,
            const PublicKey& pk);

bool VerifyGroupElement(const mpz_class& h, const Signature& sig,
                        const PublicKey& pk);

bool IsProbablePrime(const mpz_class& candidate, int rounds, RandomSource& rng);

// Random prime with exactly `bits` bits and the top two bits set.
mpz_class RandomPrime(unsigned bits, RandomSource& rng);

// Serialization: each big integer is a 4-byte big-endian length followed by
// its big-endian magnitude. Public key = (n, g); private key = (n, g, rho,
// delta, p, q). Readers validate the key invariants and throw KeyError on
// failure.
void WritePublicKey(ByteWriter& out, const PublicKey& pk);
PublicKey ReadPublicKey(ByteReader& in);
void WritePrivateKey(ByteWriter& out, const PrivateKey& sk);
PrivateKey ReadPrivateKey(ByteReader& in);
void WriteSignature(ByteWriter& out, const Signature& sig);
Signature ReadSignature(ByteReader& in);

void SaveKeyPair(const KeyPair& keys, const std::filesystem::path& path);
KeyPair LoadKeyPair(const std::filesystem::path& path);

}  // namespace dapfl::paillier

#endif  // DAPFL_PAILLIER_H_
