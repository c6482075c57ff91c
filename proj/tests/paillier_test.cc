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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "dapfl/errors.h"

namespace dapfl::paillier {
namespace {

Bytes AsBytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

// Known-answer vectors for p=5, q=7 come from the integer-only oracle in
// tests/oracles/paillier_small_prime.py.
class SmallPrimeTest : public ::testing::Test {
 protected:
  KeyPair keys_ = KeyPairFromPrimes(5, 7);
};

TEST_F(SmallPrimeTest, KeyMaterial) {
  EXPECT_EQ(keys_.pub.n, 35);
  EXPECT_EQ(keys_.pub.g, 36);
  EXPECT_EQ(keys_.priv.rho, 12);
  EXPECT_EQ(keys_.priv.delta, 3);
  mpz_class l = LFunction(36, 35);
  EXPECT_EQ(l, 1);
}

TEST_F(SmallPrimeTest, EncryptKnownAnswer) {
  Ciphertext c = EncryptWithNonce(3, keys_.pub, 2);
  EXPECT_EQ(c.value, 683);
  EXPECT_EQ(Decrypt(c, keys_.priv), 3);
}

TEST_F(SmallPrimeTest, HomomorphicSumKnownAnswer) {
  Ciphertext c3 = EncryptWithNonce(3, keys_.pub, 2);
  Ciphertext c4 = EncryptWithNonce(4, keys_.pub, 3);
  EXPECT_EQ(c4.value, 1062);
  Ciphertext sum = HomAdd(c3, c4, keys_.pub);
  EXPECT_EQ(sum.value, 146);
  EXPECT_EQ(Decrypt(sum, keys_.priv), 7);
}

TEST_F(SmallPrimeTest, SumWrapsModN) {
  Ciphertext a = EncryptWithNonce(30, keys_.pub, 2);
  Ciphertext b = EncryptWithNonce(9, keys_.pub, 4);
  EXPECT_EQ(Decrypt(HomAdd(a, b, keys_.pub), keys_.priv), 4);
}

TEST_F(SmallPrimeTest, PlaintextBounds) {
  DeterministicRandom rng(1);
  EXPECT_EQ(Decrypt(Encrypt(0, keys_.pub, rng), keys_.priv), 0);
  EXPECT_EQ(Decrypt(Encrypt(34, keys_.pub, rng), keys_.priv), 34);
  EXPECT_THROW(Encrypt(35, keys_.pub, rng), DomainError);
  EXPECT_THROW(Encrypt(-1, keys_.pub, rng), DomainError);
}

TEST_F(SmallPrimeTest, DecryptRejectsNonUnit) {
  EXPECT_THROW(Decrypt(Ciphertext{35, keys_.pub.key_id}, keys_.priv),
               DomainError);
  EXPECT_THROW(Decrypt(Ciphertext{0, keys_.pub.key_id}, keys_.priv),
               DomainError);
  EXPECT_THROW(Decrypt(Ciphertext{1225, keys_.pub.key_id}, keys_.priv),
               DomainError);
}

TEST_F(SmallPrimeTest, HashedSignatureRegression) {
  Bytes msg = AsBytes("dapfl regression vector");
  EXPECT_EQ(HashToGroup(msg, 35), 472);
  Signature sig = Sign(msg, keys_.priv);
  EXPECT_EQ(sig.sigma, 7);
  EXPECT_EQ(sig.sigma_tilde, 33);
  EXPECT_TRUE(Verify(msg, sig, keys_.pub));
}

TEST_F(SmallPrimeTest, GroupElementSignatures) {
  EXPECT_EQ(SignGroupElement(2, keys_.priv), (Signature{1, 18}));
  EXPECT_EQ(SignGroupElement(101, keys_.priv), (Signature{10, 26}));
  EXPECT_THROW(SignGroupElement(1000, keys_.priv), DomainError);
}

TEST(KeyGen, RejectsEqualPrimes) {
  EXPECT_THROW(KeyPairFromPrimes(7, 7), KeyError);
}

TEST(KeyGen, RejectsComposite) { EXPECT_THROW(KeyPairFromPrimes(9, 7), KeyError); }

TEST(KeyGen, RejectsGcdViolation) {
  // p=3, q=7: q-1 = 6 is divisible by p.
  EXPECT_THROW(KeyPairFromPrimes(3, 7), KeyError);
}

TEST(KeyGen, RejectsTinyModulus) {
  DeterministicRandom rng(3);
  EXPECT_THROW(GenerateKeyPair(32, rng), DomainError);
}

TEST(KeyGen, ExactBitLengthAndInvariants) {
  DeterministicRandom rng(11);
  for (unsigned bits : {64u, 127u, 128u, 256u}) {
    KeyPair k = GenerateKeyPair(bits, rng);
    EXPECT_EQ(k.pub.bit_length, bits);
    EXPECT_EQ(mpz_sizeinbase(k.pub.n.get_mpz_t(), 2), bits);
    EXPECT_EQ(k.pub.g, k.pub.n + 1);
    mpz_class u;
    mpz_powm(u.get_mpz_t(), k.pub.g.get_mpz_t(), k.priv.rho.get_mpz_t(),
             k.pub.n_squared.get_mpz_t());
    mpz_class check = LFunction(u, k.pub.n) * k.priv.delta % k.pub.n;
    EXPECT_EQ(check, 1);
    mpz_class n_inv_check = k.pub.n * k.priv.inv_n_mod_rho % k.priv.rho;
    EXPECT_EQ(n_inv_check, 1);
  }
}

TEST(KeyGen, DeterministicUnderSeed) {
  DeterministicRandom a(99), b(99);
  EXPECT_EQ(GenerateKeyPair(128, a).pub.n, GenerateKeyPair(128, b).pub.n);
}

TEST(Primality, KnownValues) {
  DeterministicRandom rng(5);
  EXPECT_TRUE(IsProbablePrime(2, 64, rng));
  EXPECT_TRUE(IsProbablePrime(97, 64, rng));
  EXPECT_TRUE(IsProbablePrime(mpz_class("170141183460469231731687303715884105727"),
                              64, rng));  // 2^127 - 1
  EXPECT_FALSE(IsProbablePrime(1, 64, rng));
  EXPECT_FALSE(IsProbablePrime(561, 64, rng));     // Carmichael
  EXPECT_FALSE(IsProbablePrime(294409, 64, rng));  // Carmichael
  EXPECT_FALSE(IsProbablePrime(mpz_class("170141183460469231731687303715884105729"),
                               64, rng));
}

class TestKeyTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    DeterministicRandom rng(2024);
    keys_ = new KeyPair(GenerateKeyPair(128, rng));
    other_ = new KeyPair(GenerateKeyPair(128, rng));
  }
  static void TearDownTestSuite() {
    delete keys_;
    delete other_;
  }
  static KeyPair* keys_;
  static KeyPair* other_;
};
KeyPair* TestKeyTest::keys_ = nullptr;
KeyPair* TestKeyTest::other_ = nullptr;

TEST_F(TestKeyTest, RoundTripProperty) {
  DeterministicRandom rng(7);
  for (int i = 0; i < 1000; ++i) {
    mpz_class m = rng.Below(keys_->pub.n);
    ASSERT_EQ(Decrypt(Encrypt(m, keys_->pub, rng), keys_->priv), m);
  }
}

TEST_F(TestKeyTest, HomomorphismProperty) {
  DeterministicRandom rng(8);
  for (int i = 0; i < 1000; ++i) {
    mpz_class a = rng.Below(keys_->pub.n);
    mpz_class b = rng.Below(keys_->pub.n);
    Ciphertext sum = HomAdd(Encrypt(a, keys_->pub, rng),
                            Encrypt(b, keys_->pub, rng), keys_->pub);
    ASSERT_EQ(Decrypt(sum, keys_->priv), (a + b) % keys_->pub.n);
  }
}

TEST_F(TestKeyTest, AdditiveIdentity) {
  DeterministicRandom rng(9);
  mpz_class m = rng.Below(keys_->pub.n);
  Ciphertext c = HomAdd(Encrypt(m, keys_->pub, rng), Encrypt(0, keys_->pub, rng),
                        keys_->pub);
  EXPECT_EQ(Decrypt(c, keys_->priv), m);
}

TEST_F(TestKeyTest, EncryptionIsProbabilistic) {
  DeterministicRandom rng(10);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NE(Encrypt(42, keys_->pub, rng).value, Encrypt(42, keys_->pub, rng).value);
  }
}

TEST_F(TestKeyTest, KeyMismatch) {
  DeterministicRandom rng(12);
  Ciphertext c = Encrypt(5, keys_->pub, rng);
  EXPECT_THROW(Decrypt(c, other_->priv), KeyError);
  Ciphertext d = Encrypt(5, other_->pub, rng);
  EXPECT_THROW(HomAdd(c, d, keys_->pub), KeyError);
}

TEST_F(TestKeyTest, HashIsDeterministicUnit) {
  Bytes msg = AsBytes("global model, round 0");
  mpz_class h1 = HashToGroup(msg, keys_->pub.n);
  mpz_class h2 = HashToGroup(msg, keys_->pub.n);
  EXPECT_EQ(h1, h2);
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), h1.get_mpz_t(), keys_->pub.n_squared.get_mpz_t());
  EXPECT_EQ(g, 1);
  EXPECT_LT(h1, keys_->pub.n_squared);
}

TEST_F(TestKeyTest, HashSingleBitFlipsCollideNever) {
  std::mt19937_64 gen(13);
  std::set<std::string> seen;
  for (int i = 0; i < 5000; ++i) {
    Bytes msg(24);
    for (auto& b : msg) b = static_cast<std::uint8_t>(gen());
    Bytes flipped = msg;
    flipped[gen() % flipped.size()] ^= static_cast<std::uint8_t>(1u << (gen() % 8));
    mpz_class a = HashToGroup(msg, keys_->pub.n);
    mpz_class b = HashToGroup(flipped, keys_->pub.n);
    ASSERT_NE(a, b);
    seen.insert(a.get_str(16));
    seen.insert(b.get_str(16));
  }
  EXPECT_EQ(seen.size(), 10000u);
}

TEST_F(TestKeyTest, SignVerifyRoundTrips) {
  std::mt19937_64 gen(14);
  for (int i = 0; i < 100; ++i) {
    Bytes msg(1 + gen() % 200);
    for (auto& b : msg) b = static_cast<std::uint8_t>(gen());
    Signature sig = Sign(msg, keys_->priv);
    ASSERT_TRUE(Verify(msg, sig, keys_->pub));

    Bytes tampered = msg;
    tampered[gen() % tampered.size()] ^= static_cast<std::uint8_t>(1u << (gen() % 8));
    EXPECT_FALSE(Verify(tampered, sig, keys_->pub));
  }
}

TEST_F(TestKeyTest, VerifyRejectsAlteredSignature) {
  Bytes msg = AsBytes("aggregate bundle");
  Signature sig = Sign(msg, keys_->priv);
  Signature bumped = sig;
  bumped.sigma += 1;
  EXPECT_FALSE(Verify(msg, bumped, keys_->pub));
  Signature tilde = sig;
  tilde.sigma_tilde += 1;
  EXPECT_FALSE(Verify(msg, tilde, keys_->pub));
  Signature out_of_range = sig;
  out_of_range.sigma += keys_->pub.n;
  EXPECT_FALSE(Verify(msg, out_of_range, keys_->pub));
}

TEST_F(TestKeyTest, VerifyRejectsForeignKey) {
  Bytes msg = AsBytes("upload");
  Signature sig = Sign(msg, other_->priv);
  EXPECT_FALSE(Verify(msg, sig, keys_->pub));
  EXPECT_TRUE(Verify(msg, sig, other_->pub));
}

TEST_F(TestKeyTest, KeySerializationRoundTrip) {
  ByteWriter w;
  WritePrivateKey(w, keys_->priv);
  WritePublicKey(w, keys_->pub);
  ByteReader r(w.bytes());
  PrivateKey sk = ReadPrivateKey(r);
  PublicKey pk = ReadPublicKey(r);
  r.ExpectDone();
  EXPECT_EQ(sk.rho, keys_->priv.rho);
  EXPECT_EQ(sk.delta, keys_->priv.delta);
  EXPECT_EQ(pk.key_id, keys_->pub.key_id);
}

TEST_F(TestKeyTest, CorruptedPrivateKeyRejected) {
  ByteWriter w;
  WritePublicKey(w, keys_->pub);
  w.BigInt(keys_->priv.rho);
  w.BigInt(keys_->priv.delta + 1);
  w.BigInt(keys_->priv.crt.p);
  w.BigInt(keys_->priv.crt.q);
  ByteReader r(w.bytes());
  EXPECT_THROW(ReadPrivateKey(r), KeyError);
}

TEST_F(TestKeyTest, WrongFactorsRejected) {
  ByteWriter w;
  WritePublicKey(w, keys_->pub);
  w.BigInt(keys_->priv.rho);
  w.BigInt(keys_->priv.delta);
  w.BigInt(keys_->priv.crt.p);
  w.BigInt(keys_->priv.crt.q + 2);
  ByteReader r(w.bytes());
  EXPECT_THROW(ReadPrivateKey(r), KeyError);
}

TEST_F(TestKeyTest, FactorPathsMatchDirectFormulas) {
  const PublicKey& pk = keys_->pub;
  const PrivateKey& sk = keys_->priv;
  DeterministicRandom rng(77);
  for (int i = 0; i < 50; ++i) {
    mpz_class m = rng.Below(pk.n);
    mpz_class zeta = rng.Below(pk.n - 1) + 1;
    Ciphertext c = EncryptWithNonce(m, pk, zeta);
    EXPECT_EQ(EncryptWithNonce(m, sk, zeta), c);

    mpz_class u;
    mpz_powm(u.get_mpz_t(), c.value.get_mpz_t(), sk.rho.get_mpz_t(),
             pk.n_squared.get_mpz_t());
    EXPECT_EQ(Decrypt(c, sk), LFunction(u, pk.n) * sk.delta % pk.n);

    mpz_class h = HashToGroup(ToBigEndian(mpz_class(i + 1)), pk.n);
    Signature sig = SignGroupElement(h, sk);
    mpz_class g_sigma;
    mpz_powm(g_sigma.get_mpz_t(), pk.g.get_mpz_t(), sig.sigma.get_mpz_t(),
             pk.n_squared.get_mpz_t());
    mpz_invert(g_sigma.get_mpz_t(), g_sigma.get_mpz_t(), pk.n_squared.get_mpz_t());
    mpz_class residue = h * g_sigma % pk.n_squared, root;
    mpz_powm(root.get_mpz_t(), residue.get_mpz_t(), sk.inv_n_mod_rho.get_mpz_t(),
             pk.n.get_mpz_t());
    EXPECT_EQ(sig.sigma_tilde, root);
  }
  DeterministicRandom a(5), b(5);
  EXPECT_EQ(Encrypt(12345, sk, a), Encrypt(12345, pk, b));
}

TEST_F(TestKeyTest, KeyFileRoundTrip) {
  auto path = std::filesystem::temp_directory_path() / "dapfl_paillier_test.key";
  SaveKeyPair(*keys_, path);
  KeyPair loaded = LoadKeyPair(path);
  EXPECT_EQ(loaded.pub.n, keys_->pub.n);
  EXPECT_EQ(loaded.priv.rho, keys_->priv.rho);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace dapfl::paillier
