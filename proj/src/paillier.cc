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

#include "dapfl/paillier.h"

#include <fstream>
#include <iterator>
#include <string>

#include "dapfl/digest.h"
#include "dapfl/errors.h"

namespace dapfl::paillier {
namespace {

constexpr int kPrimeCandidateBudget = 100000;
constexpr int kKeyPairAttempts = 64;
constexpr char kHashDomain[] = "dapfl/hash-to-group/v1";

mpz_class Gcd(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

mpz_class Lcm(const mpz_class& a, const mpz_class& b) {
  mpz_class r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

mpz_class PowMod(const mpz_class& base, const mpz_class& exp,
                 const mpz_class& mod) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

// Returns false if no inverse exists.
bool InvMod(mpz_class& out, const mpz_class& a, const mpz_class& mod) {
  return mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) != 0;
}

std::uint64_t ComputeKeyId(const mpz_class& n, const mpz_class& g) {
  ByteWriter w;
  w.BigInt(n);
  w.BigInt(g);
  Sha256Digest d = Sha256({w.bytes()});
  std::uint64_t id = 0;
  for (int i = 0; i < 8; ++i) id = (id << 8) | d[i];
  return id;
}

// g^m mod n^2, with the closed form for g = n + 1.
mpz_class GeneratorPow(const PublicKey& pk, const mpz_class& m) {
  if (pk.g == pk.n + 1) {
    mpz_class r = 1 + m * pk.n;
    mpz_mod(r.get_mpz_t(), r.get_mpz_t(), pk.n_squared.get_mpz_t());
    return r;
  }
  return PowMod(pk.g, m, pk.n_squared);
}

// x mod m for a possibly larger or negative x.
mpz_class Mod(const mpz_class& x, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), x.get_mpz_t(), m.get_mpz_t());
  return r;
}

PrivateKey::Crt DeriveCrt(const PublicKey& pub, const mpz_class& p,
                          const mpz_class& q) {
  PrivateKey::Crt crt;
  crt.p = p;
  crt.q = q;
  crt.p_squared = p * p;
  crt.q_squared = q * q;
  mpz_class lp = LFunction(PowMod(pub.g, p - 1, crt.p_squared), p);
  mpz_class lq = LFunction(PowMod(pub.g, q - 1, crt.q_squared), q);
  if (!InvMod(crt.h_p, lp, p) || !InvMod(crt.h_q, lq, q)) {
    throw KeyError("g has no inverse L-value modulo a prime factor");
  }
  if (!InvMod(crt.q_inv_mod_p, q, p)) throw KeyError("q is not invertible mod p");
  mpz_class q2_inv;
  if (!InvMod(q2_inv, crt.q_squared, crt.p_squared)) {
    throw KeyError("q^2 is not invertible mod p^2");
  }
  crt.basis_p_squared = crt.q_squared * q2_inv;
  return crt;
}

// Combines residues mod p and mod q into the value mod n.
mpz_class CombineModN(const mpz_class& mp, const mpz_class& mq,
                      const PrivateKey::Crt& crt) {
  return mq + crt.q * Mod((mp - mq) * crt.q_inv_mod_p, crt.p);
}

// Combines residues mod p^2 and mod q^2 into the value mod n^2.
mpz_class CombineModNSquared(const mpz_class& xp, const mpz_class& xq,
                             const PrivateKey::Crt& crt, const mpz_class& n_squared) {
  return Mod(xq + (xp - xq) * crt.basis_p_squared, n_squared);
}

// L(c^rho mod n^2) * delta mod n, evaluated through the factors.
mpz_class DecryptValue(const mpz_class& c, const PrivateKey& sk) {
  const PrivateKey::Crt& crt = sk.crt;
  mpz_class mp = LFunction(PowMod(Mod(c, crt.p_squared), crt.p - 1, crt.p_squared), crt.p);
  mpz_class mq = LFunction(PowMod(Mod(c, crt.q_squared), crt.q - 1, crt.q_squared), crt.q);
  return CombineModN(Mod(mp * crt.h_p, crt.p), Mod(mq * crt.h_q, crt.q), crt);
}

PrivateKey DerivePrivateKey(const PublicKey& pub, const mpz_class& p,
                            const mpz_class& q) {
  if (p * q != pub.n) throw KeyError("factors do not multiply to n");
  const mpz_class rho = Lcm(p - 1, q - 1);
  PrivateKey sk;
  sk.pub = pub;
  sk.rho = rho;
  mpz_class u = PowMod(pub.g, rho, pub.n_squared);
  if ((u - 1) % pub.n != 0) {
    throw KeyError("g^rho mod n^2 is not congruent to 1 mod n");
  }
  mpz_class l = LFunction(u, pub.n);
  if (!InvMod(sk.delta, l, pub.n)) {
    throw KeyError("L(g^rho mod n^2) is not invertible mod n");
  }
  if (!InvMod(sk.inv_n_mod_rho, pub.n, rho)) {
    throw KeyError("n is not invertible mod rho");
  }
  sk.crt = DeriveCrt(pub, p, q);
  return sk;
}

}  // namespace

PublicKey MakePublicKey(const mpz_class& n, const mpz_class& g) {
  if (n <= 1) throw KeyError("modulus must exceed 1");
  PublicKey pk;
  pk.n = n;
  pk.g = g;
  pk.n_squared = n * n;
  pk.bit_length = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  if (g <= 0 || g >= pk.n_squared || Gcd(g, pk.n_squared) != 1) {
    throw KeyError("g is not a unit mod n^2");
  }
  pk.key_id = ComputeKeyId(n, g);
  return pk;
}

mpz_class LFunction(const mpz_class& x, const mpz_class& n) {
  mpz_class r = x - 1;
  mpz_fdiv_q(r.get_mpz_t(), r.get_mpz_t(), n.get_mpz_t());
  return r;
}

bool IsProbablePrime(const mpz_class& candidate, int rounds, RandomSource& rng) {
  if (candidate < 2) return false;
  static constexpr unsigned kSmallPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                                              23, 29, 31, 37, 41, 43, 47, 53};
  for (unsigned p : kSmallPrimes) {
    if (candidate == p) return true;
    if (mpz_divisible_ui_p(candidate.get_mpz_t(), p)) return false;
  }
  // candidate - 1 = d * 2^s with d odd.
  mpz_class n_minus_1 = candidate - 1;
  mpz_class d = n_minus_1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
  mpz_class witness_span = candidate - 3;
  for (int round = 0; round < rounds; ++round) {
    mpz_class a = rng.Below(witness_span) + 2;  // a in [2, n-2]
    mpz_class x = PowMod(a, d, candidate);
    if (x == 1 || x == n_minus_1) continue;
    bool composite = true;
    for (unsigned long r = 1; r < s; ++r) {
      x = PowMod(x, 2, candidate);
      if (x == n_minus_1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

mpz_class RandomPrime(unsigned bits, RandomSource& rng) {
  if (bits < 8) throw DomainError("prime size too small");
  for (int attempt = 0; attempt < kPrimeCandidateBudget; ++attempt) {
    mpz_class c = rng.Bits(bits);
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    if (IsProbablePrime(c, kMillerRabinRounds, rng)) return c;
  }
  throw KeyError("prime generation exhausted its candidate budget");
}

KeyPair KeyPairFromPrimes(const mpz_class& p, const mpz_class& q,
                          std::optional<mpz_class> g) {
  if (p == q) throw KeyError("p and q must be distinct");
  if (mpz_probab_prime_p(p.get_mpz_t(), 40) == 0 ||
      mpz_probab_prime_p(q.get_mpz_t(), 40) == 0) {
    throw KeyError("p and q must be prime");
  }
  mpz_class n = p * q;
  if (Gcd(n, (p - 1) * (q - 1)) != 1) {
    throw KeyError("gcd(pq, (p-1)(q-1)) != 1");
  }
  PublicKey pub = MakePublicKey(n, g.value_or(n + 1));
  PrivateKey priv = DerivePrivateKey(pub, p, q);
  return KeyPair{pub, priv};
}

KeyPair GenerateKeyPair(unsigned bit_length, RandomSource& rng) {
  if (bit_length < kMinTestBits) {
    throw DomainError("key size " + std::to_string(bit_length) +
                      " below minimum " + std::to_string(kMinTestBits));
  }
  unsigned p_bits = (bit_length + 1) / 2;
  unsigned q_bits = bit_length / 2;
  for (int attempt = 0; attempt < kKeyPairAttempts; ++attempt) {
    mpz_class p = RandomPrime(p_bits, rng);
    mpz_class q = RandomPrime(q_bits, rng);
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != bit_length) continue;
    if (Gcd(n, (p - 1) * (q - 1)) != 1) continue;
    return KeyPairFromPrimes(p, q);
  }
  throw KeyError("no valid prime pair found");
}

Ciphertext EncryptWithNonce(const mpz_class& m, const PublicKey& pk,
                            const mpz_class& zeta) {
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  if (zeta <= 0 || zeta >= pk.n || Gcd(zeta, pk.n) != 1) {
    throw DomainError("nonce outside Z*_n");
  }
  mpz_class c = GeneratorPow(pk, m) * PowMod(zeta, pk.n, pk.n_squared);
  mpz_mod(c.get_mpz_t(), c.get_mpz_t(), pk.n_squared.get_mpz_t());
  return Ciphertext{std::move(c), pk.key_id};
}

Ciphertext Encrypt(const mpz_class& m, const PublicKey& pk, RandomSource& rng) {
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  for (;;) {
    mpz_class zeta = rng.Below(pk.n);
    if (zeta != 0 && Gcd(zeta, pk.n) == 1) {
      return EncryptWithNonce(m, pk, zeta);
    }
  }
}

mpz_class Decrypt(const Ciphertext& c, const PrivateKey& sk) {
  const PublicKey& pk = sk.pub;
  if (c.key_id != pk.key_id) throw KeyError("ciphertext key does not match");
  if (c.value <= 0 || c.value >= pk.n_squared ||
      Gcd(c.value, pk.n_squared) != 1) {
    throw DomainError("ciphertext outside Z*_{n^2}");
  }
  return DecryptValue(c.value, sk);
}

Ciphertext EncryptWithNonce(const mpz_class& m, const PrivateKey& sk,
                            const mpz_class& zeta) {
  const PublicKey& pk = sk.pub;
  if (m < 0 || m >= pk.n) throw DomainError("plaintext outside [0, n)");
  if (zeta <= 0 || zeta >= pk.n || Gcd(zeta, pk.n) != 1) {
    throw DomainError("nonce outside Z*_n");
  }
  const PrivateKey::Crt& crt = sk.crt;
  // The unit group mod p^2 has order p(p-1).
  mpz_class xp = PowMod(zeta, Mod(pk.n, crt.p * (crt.p - 1)), crt.p_squared);
  mpz_class xq = PowMod(zeta, Mod(pk.n, crt.q * (crt.q - 1)), crt.q_squared);
  mpz_class c = GeneratorPow(pk, m) * CombineModNSquared(xp, xq, crt, pk.n_squared);
  mpz_mod(c.get_mpz_t(), c.get_mpz_t(), pk.n_squared.get_mpz_t());
  return Ciphertext{std::move(c), pk.key_id};
}

Ciphertext Encrypt(const mpz_class& m, const PrivateKey& sk, RandomSource& rng) {
  if (m < 0 || m >= sk.pub.n) throw DomainError("plaintext outside [0, n)");
  for (;;) {
    mpz_class zeta = rng.Below(sk.pub.n);
    if (zeta != 0 && Gcd(zeta, sk.pub.n) == 1) {
      return EncryptWithNonce(m, sk, zeta);
    }
  }
}

Ciphertext HomAdd(const Ciphertext& c1, const Ciphertext& c2,
                  const PublicKey& pk) {
  if (c1.key_id != pk.key_id || c2.key_id != pk.key_id) {
    throw KeyError("homomorphic addition across different keys");
  }
  mpz_class v = c1.value * c2.value;
  mpz_mod(v.get_mpz_t(), v.get_mpz_t(), pk.n_squared.get_mpz_t());
  return Ciphertext{std::move(v), pk.key_id};
}

mpz_class HashToGroup(std::span<const std::uint8_t> message, const mpz_class& n) {
  const mpz_class n_squared = n * n;
  // 16 extra bytes keep the bias of the final reduction below 2^-128.
  const std::size_t want = ByteLength(n_squared) + 16;
  const auto domain = std::span(reinterpret_cast<const std::uint8_t*>(kHashDomain),
                                sizeof(kHashDomain) - 1);
  for (std::uint32_t attempt = 0;; ++attempt) {
    Bytes stream;
    stream.reserve(want + 32);
    for (std::uint32_t counter = 0; stream.size() < want; ++counter) {
      ByteWriter prefix;
      prefix.U32(attempt);
      prefix.U32(counter);
      Sha256Digest block = Sha256({domain, prefix.bytes(), message});
      stream.insert(stream.end(), block.begin(), block.end());
    }
    stream.resize(want);
    mpz_class h = FromBigEndian(stream) % n_squared;
    if (h != 0 && Gcd(h, n_squared) == 1) return h;
  }
}

Signature SignGroupElement(const mpz_class& h, const PrivateKey& sk) {
  const PublicKey& pk = sk.pub;
  if (h <= 0 || h >= pk.n_squared || Gcd(h, pk.n_squared) != 1) {
    throw DomainError("signing input outside Z*_{n^2}");
  }
  // L(h^rho mod n^2) * delta mod n, the decryption map applied to h.
  mpz_class sigma = DecryptValue(h, sk);

  mpz_class g_sigma_inv;
  if (!InvMod(g_sigma_inv, GeneratorPow(pk, sigma), pk.n_squared)) {
    throw KeyError("g^sigma is not invertible mod n^2");
  }
  mpz_class residue = h * g_sigma_inv;
  mpz_mod(residue.get_mpz_t(), residue.get_mpz_t(), pk.n_squared.get_mpz_t());
  // residue^(1/n mod rho) mod n, one half-size exponentiation per factor.
  const PrivateKey::Crt& crt = sk.crt;
  mpz_class sp = PowMod(Mod(residue, crt.p), Mod(sk.inv_n_mod_rho, crt.p - 1), crt.p);
  mpz_class sq = PowMod(Mod(residue, crt.q), Mod(sk.inv_n_mod_rho, crt.q - 1), crt.q);
  mpz_class sigma_tilde = CombineModN(sp, sq, crt);
  return Signature{std::move(sigma), std::move(sigma_tilde)};
}

Signature Sign(std::span<const std::uint8_t> message, const PrivateKey& sk) {
  return SignGroupElement(HashToGroup(message, sk.pub.n), sk);
}

bool VerifyGroupElement(const mpz_class& h, const Signature& sig,
                        const PublicKey& pk) {
  if (sig.sigma < 0 || sig.sigma >= pk.n) return false;
  if (sig.sigma_tilde <= 0 || sig.sigma_tilde >= pk.n) return false;
  mpz_class rhs = GeneratorPow(pk, sig.sigma) *
                  PowMod(sig.sigma_tilde, pk.n, pk.n_squared);
  mpz_mod(rhs.get_mpz_t(), rhs.get_mpz_t(), pk.n_squared.get_mpz_t());
  return rhs == h;
}

bool Verify(std::span<const std::uint8_t> message, const Signature& sig,
            const PublicKey& pk) {
  return VerifyGroupElement(HashToGroup(message, pk.n), sig, pk);
}

void WritePublicKey(ByteWriter& out, const PublicKey& pk) {
  out.BigInt(pk.n);
  out.BigInt(pk.g);
}

PublicKey ReadPublicKey(ByteReader& in) {
  mpz_class n = in.BigInt();
  mpz_class g = in.BigInt();
  return MakePublicKey(n, g);
}

void WritePrivateKey(ByteWriter& out, const PrivateKey& sk) {
  WritePublicKey(out, sk.pub);
  out.BigInt(sk.rho);
  out.BigInt(sk.delta);
  out.BigInt(sk.crt.p);
  out.BigInt(sk.crt.q);
}

PrivateKey ReadPrivateKey(ByteReader& in) {
  PublicKey pub = ReadPublicKey(in);
  mpz_class rho = in.BigInt();
  mpz_class delta = in.BigInt();
  mpz_class p = in.BigInt();
  mpz_class q = in.BigInt();
  if (p <= 1 || q <= 1) throw KeyError("factors must exceed 1");
  PrivateKey sk = DerivePrivateKey(pub, p, q);
  if (sk.rho != rho) throw KeyError("stored rho does not match key");
  if (sk.delta != delta) throw KeyError("stored delta does not match key");
  return sk;
}

void WriteSignature(ByteWriter& out, const Signature& sig) {
  out.BigInt(sig.sigma);
  out.BigInt(sig.sigma_tilde);
}

Signature ReadSignature(ByteReader& in) {
  Signature sig;
  sig.sigma = in.BigInt();
  sig.sigma_tilde = in.BigInt();
  return sig;
}

namespace {
constexpr std::uint8_t kKeyFileMagic[4] = {'D', 'P', 'K', 'Y'};
constexpr std::uint8_t kKeyFileVersion = 2;
}  // namespace

void SaveKeyPair(const KeyPair& keys, const std::filesystem::path& path) {
  ByteWriter w;
  w.Raw(kKeyFileMagic);
  w.U8(kKeyFileVersion);
  WritePrivateKey(w, keys.priv);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(w.bytes().data()),
          static_cast<std::streamsize>(w.bytes().size()));
  if (!f) throw Error("write to " + path.string() + " failed");
}

KeyPair LoadKeyPair(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kKeyFileMagic))) {
    throw FormatError("not a key file: " + path.string());
  }
  if (r.U8() != kKeyFileVersion) throw FormatError("unsupported key file version");
  PrivateKey sk = ReadPrivateKey(r);
  r.ExpectDone();
  return KeyPair{sk.pub, sk};
}

}  // namespace dapfl::paillier
