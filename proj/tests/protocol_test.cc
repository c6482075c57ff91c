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

#include "dapfl/protocol.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "dapfl/errors.h"

namespace dapfl::protocol {
namespace {

constexpr unsigned kBits = 128;
constexpr unsigned kScale = 32;

const KeyDirectory& Keys(std::size_t n) {
  static std::map<std::size_t, KeyDirectory> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    DeterministicRandom rng(1000 + n);
    it = cache.emplace(n, KdcProvision(n, kBits, rng)).first;
  }
  return it->second;
}

std::vector<double> RandomWeights(std::mt19937_64& rng, std::size_t dim) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> w(dim);
  for (double& x : w) x = u(rng);
  return w;
}

Bytes FlipBit(Bytes b, std::size_t bit) {
  b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
  return b;
}

double Decode(const mpz_class& v, const mpz_class& n) {
  return encoding::UnwrapSigned(v, n).get_d();
}

TEST(Kdc, SingleClientHoldings) {
  const KeyDirectory& dir = Keys(1);
  EXPECT_EQ(dir.encryption_keypairs(), 2u);
  EXPECT_EQ(dir.signing_keypairs(), 2u);
  ASSERT_EQ(dir.clients.size(), 1u);
  const ClientKeys& c = dir.clients[0];
  EXPECT_EQ(c.outer_pub.key_id, dir.server.client_outer[0].pub.key_id);
  EXPECT_EQ(c.cs_enc.pub.key_id, dir.server.cs_enc_pub.key_id);
  EXPECT_EQ(c.cs_sign_pub.key_id, dir.server.signing.pub.key_id);
  EXPECT_EQ(dir.server.client_sign_pub[0].key_id, c.signing.pub.key_id);
  EXPECT_EQ(c.outer_pub.bit_length, kBits);
}

TEST(Kdc, RejectsZeroClients) {
  DeterministicRandom rng(1);
  EXPECT_THROW(KdcProvision(0, kBits, rng), DomainError);
}

TEST(Kdc, EveryClientVerifiesServerSignatures) {
  const KeyDirectory& dir = Keys(3);
  wire::Envelope msg = SignGlobalModel(std::vector<double>{1.5, -2.0}, 0, dir.server);
  for (const ClientKeys& c : dir.clients) {
    EXPECT_EQ(VerifyGlobalModel(msg, 0, c), (std::vector<double>{1.5, -2.0}));
  }
}

TEST(Kdc, ClientsCannotOpenEachOthersOuterLayer) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(2);
  paillier::Ciphertext c = paillier::Encrypt(42, dir.clients[0].outer_pub, rng);
  // The only private encryption key a client holds is the CS key.
  for (const ClientKeys& other : dir.clients) {
    EXPECT_THROW(paillier::Decrypt(c, other.cs_enc.priv), KeyError);
  }
  EXPECT_EQ(paillier::Decrypt(c, dir.server.client_outer[0].priv), 42);
}

TEST(GlobalModel, TamperAndWrongKeyRejected) {
  const KeyDirectory& dir = Keys(3);
  wire::Envelope msg = SignGlobalModel(std::vector<double>{0.25, 0.5, 0.75}, 0, dir.server);
  for (std::size_t byte = 0; byte < msg.payload.size(); ++byte) {
    wire::Envelope bad = msg;
    bad.payload[byte] ^= 0x01;
    for (const ClientKeys& c : dir.clients) {
      EXPECT_THROW(VerifyGlobalModel(bad, 0, c), Error) << byte;
    }
  }
  ServerKeys impostor = dir.server;
  impostor.signing = Keys(1).server.signing;
  wire::Envelope forged = SignGlobalModel(std::vector<double>{0.25}, 0, impostor);
  EXPECT_THROW(VerifyGlobalModel(forged, 0, dir.clients[0]), VerificationError);
  EXPECT_THROW(VerifyGlobalModel(msg, 1, dir.clients[0]), ProtocolError);
}

TEST(Upload, GenuineUploadOpensAndSplits) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(3);
  std::vector<double> w{0.5, -1.25, 3.0};
  wire::Envelope up = BuildUpload(w, 7, kScale, 4, dir.clients[1], rng);
  EXPECT_EQ(up.sender, 1u);
  UploadBody body = OpenUpload(up, 4, w.size(), dir.server);
  ASSERT_EQ(body.weighted.size(), 3u);
  const paillier::KeyPair& cs = dir.clients[0].cs_enc;
  for (std::size_t j = 0; j < w.size(); ++j) {
    EXPECT_EQ(Decode(paillier::Decrypt(body.weighted[j], cs.priv), cs.pub.n),
              7 * std::ldexp(w[j], kScale));
  }
  EXPECT_EQ(paillier::Decrypt(body.weight, cs.priv), 7);
  EXPECT_THROW(OpenUpload(up, 5, w.size(), dir.server), ProtocolError);
  EXPECT_THROW(OpenUpload(up, 4, w.size() + 1, dir.server), FormatError);
}

TEST(Upload, CorruptedOuterBlockIsRejected) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(4);
  std::vector<double> w{0.5, -1.25, 3.0};
  wire::Envelope good = BuildUpload(w, 7, kScale, 0, dir.clients[0], rng);
  wire::Envelope bad = good;
  // Last byte of the first outer ciphertext.
  std::uint32_t first_len = (bad.payload[4] << 24) | (bad.payload[5] << 16) |
                            (bad.payload[6] << 8) | bad.payload[7];
  bad.payload[8 + first_len - 1] ^= 0x40;
  EXPECT_THROW(OpenUpload(bad, 0, w.size(), dir.server), Error);
  std::vector<wire::Envelope> uploads{bad, BuildUpload(w, 2, kScale, 0, dir.clients[1], rng)};
  AggregateResult r = ServerAggregate(uploads, 0, w.size(), dir.server);
  EXPECT_EQ(r.legitimate, (std::vector<std::uint32_t>{1}));
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].client, 0u);
}

TEST(Upload, NoPlaintextInUploadBytes) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(5);
  std::mt19937_64 wrng(5);
  std::vector<double> w = RandomWeights(wrng, 24);
  const std::uint64_t size = 37;
  Bytes frame = wire::Frame(BuildUpload(w, size, kScale, 0, dir.clients[2], rng));
  auto contains = [&](const Bytes& needle) {
    return std::search(frame.begin(), frame.end(), needle.begin(), needle.end()) !=
           frame.end();
  };
  encoding::EncodedModel enc =
      encoding::EncodeWeightedModel(w, size, {kScale, dir.server.cs_enc_pub.n});
  for (std::size_t j = 0; j < w.size(); ++j) {
    Bytes f64(8);
    std::uint64_t bits;
    std::memcpy(&bits, &w[j], 8);
    for (int k = 0; k < 8; ++k) f64[k] = static_cast<std::uint8_t>(bits >> (56 - 8 * k));
    EXPECT_FALSE(contains(f64));
    Bytes be = ToBigEndian(enc.coords[j]);
    EXPECT_FALSE(contains(be));
    mpz_class scaled = encoding::Quantize(w[j], kScale) * static_cast<unsigned long>(size);
    EXPECT_FALSE(contains(ToBigEndian(abs(scaled))));
  }
}

TEST(Aggregate, SingleClientBundleDecryptsToItsUpload) {
  const KeyDirectory& dir = Keys(1);
  DeterministicRandom rng(6);
  std::vector<double> w{0.125, -7.5};
  std::vector<wire::Envelope> ups{BuildUpload(w, 9, kScale, 2, dir.clients[0], rng)};
  AggregateResult r = ServerAggregate(ups, 2, w.size(), dir.server);
  EXPECT_EQ(r.legitimate, (std::vector<std::uint32_t>{0}));
  GlobalUpdate g = OpenBundle(r.bundle, 2, kScale, dir.clients[0]);
  EXPECT_EQ(g.total_weight, 9);
  EXPECT_EQ(g.weights, w);
}

TEST(Aggregate, TwoClientWeightedMean) {
  const KeyDirectory& dir = Keys(2);
  DeterministicRandom rng(7);
  std::vector<wire::Envelope> ups{
      BuildUpload(std::vector<double>{1.0}, 2, kScale, 0, dir.clients[0], rng),
      BuildUpload(std::vector<double>{2.0}, 3, kScale, 0, dir.clients[1], rng)};
  AggregateResult r = ServerAggregate(ups, 0, 1, dir.server);
  const paillier::KeyPair& cs = dir.clients[0].cs_enc;
  ByteReader br(ByteReader(r.bundle.payload).Blob());
  std::uint32_t dim = br.U32();
  ASSERT_EQ(dim, 1u);
  mpz_class sum = paillier::Decrypt({br.BigInt(), cs.pub.key_id}, cs.priv);
  mpz_class total = paillier::Decrypt({br.BigInt(), cs.pub.key_id}, cs.priv);
  EXPECT_EQ(sum, mpz_class(8) << kScale);
  EXPECT_EQ(total, 5);
  for (const ClientKeys& c : dir.clients) {
    GlobalUpdate g = OpenBundle(r.bundle, 0, kScale, c);
    ASSERT_EQ(g.weights.size(), 1u);
    EXPECT_NEAR(g.weights[0], 1.6, std::ldexp(1.0, -kScale - 1));
  }
}

TEST(Aggregate, TamperedUploadExcluded) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(8);
  std::vector<wire::Envelope> ups{
      BuildUpload(std::vector<double>{1.0, 1.0}, 1, kScale, 3, dir.clients[0], rng),
      BuildUpload(std::vector<double>{4.0, 0.0}, 1, kScale, 3, dir.clients[1], rng),
      BuildUpload(std::vector<double>{2.0, 2.0}, 1, kScale, 3, dir.clients[2], rng)};
  ups[1].payload = FlipBit(ups[1].payload, 8 * ups[1].payload.size() / 2);
  AggregateResult r = ServerAggregate(ups, 3, 2, dir.server);
  EXPECT_EQ(r.legitimate, (std::vector<std::uint32_t>{0, 2}));
  GlobalUpdate g = OpenBundle(r.bundle, 3, kScale, dir.clients[1]);
  EXPECT_EQ(g.weights, (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(g.legitimate, r.legitimate);
}

TEST(Aggregate, DuplicateAndForeignUploadsRejected) {
  const KeyDirectory& dir = Keys(2);
  DeterministicRandom rng(9);
  wire::Envelope a = BuildUpload(std::vector<double>{1.0}, 1, kScale, 0, dir.clients[0], rng);
  wire::Envelope stranger = a;
  stranger.sender = 7;
  std::vector<wire::Envelope> ups{a, a, stranger};
  AggregateResult r = ServerAggregate(ups, 0, 1, dir.server);
  EXPECT_EQ(r.legitimate, (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(r.rejected.size(), 2u);
}

TEST(Aggregate, EmptyLegitimateSetIsRoundError) {
  const KeyDirectory& dir = Keys(2);
  EXPECT_THROW(ServerAggregate({}, 0, 1, dir.server), RoundError);
  DeterministicRandom rng(10);
  std::vector<wire::Envelope> ups{
      BuildUpload(std::vector<double>{1.0}, 1, kScale, 1, dir.clients[0], rng)};
  EXPECT_THROW(ServerAggregate(ups, 0, 1, dir.server), RoundError);
}

TEST(Aggregate, IdenticalModelsAreAFixedPoint) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(11);
  std::vector<double> w{0.5, -0.25, 1.0 / 1024, 12.0};
  std::vector<wire::Envelope> ups;
  for (std::uint32_t i = 0; i < 3; ++i) {
    ups.push_back(BuildUpload(w, 10 + 7 * i, kScale, 0, dir.clients[i], rng));
  }
  AggregateResult r = ServerAggregate(ups, 0, w.size(), dir.server);
  EXPECT_EQ(OpenBundle(r.bundle, 0, kScale, dir.clients[0]).weights, w);
}

// Integer-exact and 2^-(f+1)-close equivalence with the plaintext weighted
// mean, for random client subsets.
TEST(Aggregate, MatchesPlaintextWeightedMeanOverSurvivors) {
  const KeyDirectory& dir = Keys(5);
  const mpz_class& n = dir.server.cs_enc_pub.n;
  const paillier::KeyPair& cs = dir.clients[0].cs_enc;
  DeterministicRandom rng(12);
  std::mt19937_64 prng(12);
  const std::size_t dim = 6;
  for (std::uint32_t round = 0; round < 10; ++round) {
    std::vector<std::vector<double>> w(5);
    std::vector<std::uint64_t> sizes(5);
    std::vector<wire::Envelope> ups;
    std::uniform_int_distribution<int> keep(0, 1);
    std::vector<std::uint32_t> survivors;
    for (std::uint32_t i = 0; i < 5; ++i) {
      w[i] = RandomWeights(prng, dim);
      sizes[i] = 1 + prng() % 1000;
      if (keep(prng) || (i == 4 && survivors.empty())) {
        survivors.push_back(i);
        ups.push_back(BuildUpload(w[i], sizes[i], kScale, round, dir.clients[i], rng));
      }
    }
    AggregateResult r = ServerAggregate(ups, round, dim, dir.server);
    ASSERT_EQ(r.legitimate, survivors);

    ByteReader br(ByteReader(r.bundle.payload).Blob());
    ASSERT_EQ(br.U32(), dim);
    std::vector<mpz_class> sums;
    for (std::size_t j = 0; j < dim; ++j) {
      sums.push_back(paillier::Decrypt({br.BigInt(), cs.pub.key_id}, cs.priv));
    }
    GlobalUpdate g = OpenBundle(r.bundle, round, kScale, dir.clients[0]);
    for (std::size_t j = 0; j < dim; ++j) {
      mpz_class exact = 0;
      double mean = 0.0, total = 0.0;
      for (std::uint32_t i : survivors) {
        exact += encoding::Quantize(w[i][j], kScale) * mpz_class(std::to_string(sizes[i]));
        mean += static_cast<double>(sizes[i]) * w[i][j];
        total += static_cast<double>(sizes[i]);
      }
      EXPECT_EQ(encoding::UnwrapSigned(sums[j], n), exact);
      EXPECT_LE(std::abs(g.weights[j] - mean / total), std::ldexp(1.0, -kScale - 1));
    }
  }
}

TEST(Tamper, EverySingleBitFlipOfUploadIsDetected) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(13);
  std::mt19937_64 prng(13);
  std::vector<double> w{0.5, -0.75, 2.0};
  Bytes frame = wire::Frame(BuildUpload(w, 5, kScale, 1, dir.clients[1], rng));
  for (int trial = 0; trial < 100; ++trial) {
    Bytes bad = FlipBit(frame, prng() % (8 * frame.size()));
    EXPECT_THROW(OpenUpload(wire::Unframe(bad), 1, w.size(), dir.server), Error) << trial;
  }
}

TEST(Tamper, EverySingleBitFlipOfBundleIsDetected) {
  const KeyDirectory& dir = Keys(3);
  DeterministicRandom rng(14);
  std::mt19937_64 prng(14);
  std::vector<wire::Envelope> ups{
      BuildUpload(std::vector<double>{1.0, 2.0}, 3, kScale, 2, dir.clients[0], rng),
      BuildUpload(std::vector<double>{3.0, 4.0}, 4, kScale, 2, dir.clients[2], rng)};
  Bytes frame = wire::Frame(ServerAggregate(ups, 2, 2, dir.server).bundle);
  for (int trial = 0; trial < 100; ++trial) {
    Bytes bad = FlipBit(frame, prng() % (8 * frame.size()));
    EXPECT_THROW(OpenBundle(wire::Unframe(bad), 2, kScale, dir.clients[1]), Error) << trial;
  }
}

TEST(Report, SignedReportVerifies) {
  const KeyDirectory& dir = Keys(2);
  std::vector<double> w{1.0, -1.0};
  wire::Envelope rep = BuildReport(w, 5, dir.clients[1]);
  EXPECT_EQ(VerifyReport(rep, 5, dir.server), w);
  wire::Envelope forged = rep;
  forged.sender = 0;
  EXPECT_THROW(VerifyReport(forged, 5, dir.server), VerificationError);
}

ml::Dataset TinyData(std::mt19937_64& rng, std::size_t rows) {
  ml::Dataset d;
  d.dim = 4;
  d.classes = 3;
  std::normal_distribution<double> noise(0.0, 0.3);
  for (std::size_t r = 0; r < rows; ++r) {
    int label = static_cast<int>(r % 3);
    d.labels.push_back(label);
    for (std::size_t k = 0; k < d.dim; ++k) {
      d.features.push_back((static_cast<int>(k) == label ? 1.0 : 0.0) + noise(rng));
    }
  }
  return d;
}

TEST(Client, FullRoundWithOneTamperedBundle) {
  const KeyDirectory& dir = Keys(3);
  ml::ModelShape shape{ml::ModelKind::kLogistic, 4, 3, 0};
  std::mt19937_64 rng(15);
  std::vector<Client> clients;
  ClientOptions opts;
  opts.ddpg.hidden = 8;
  opts.ddpg.batch_size = 1;
  for (std::uint32_t i = 0; i < 3; ++i) {
    resource::ResourceProfile p;
    p.seed = i;
    clients.emplace_back(dir.clients[i], TinyData(rng, 30 + 10 * i), shape, p, opts, 100 + i);
  }
  std::vector<double> w0(shape.ParameterCount(), 0.0);
  wire::Envelope init = SignGlobalModel(w0, 0, dir.server);
  for (Client& c : clients) c.AcceptInitial(init);

  for (std::uint32_t t = 0; t < 3; ++t) {
    std::vector<wire::Envelope> ups;
    for (Client& c : clients) {
      ClientRoundRecord rec;
      ups.push_back(c.Round(t, &rec));
      EXPECT_EQ(rec.has_reward, t > 0);
      EXPECT_EQ(rec.ddpg_trained, t > 0);
      EXPECT_GE(rec.alpha, 1);
      EXPECT_GE(rec.lambda, 0.0);
    }
    AggregateResult r = ServerAggregate(ups, t, shape.ParameterCount(), dir.server);
    EXPECT_EQ(r.legitimate.size(), 3u);
    wire::Envelope tampered = r.bundle;
    tampered.payload.back() ^= 1;
    std::vector<double> before = clients[0].global_weights();
    EXPECT_FALSE(clients[0].ApplyBundle(tampered, t));
    EXPECT_EQ(clients[0].global_weights(), before);
    for (Client& c : clients) EXPECT_TRUE(c.ApplyBundle(r.bundle, t));
    EXPECT_EQ(clients[0].global_weights(), clients[2].global_weights());
  }
  EXPECT_EQ(VerifyReport(clients[1].Report(3), 3, dir.server), clients[1].global_weights());
}

TEST(Client, FixedModeUsesConstantsAndSkipsAgent) {
  const KeyDirectory& dir = Keys(1);
  ml::ModelShape shape{ml::ModelKind::kLogistic, 4, 3, 0};
  std::mt19937_64 rng(16);
  ClientOptions opts;
  opts.mode = TuningMode::kFixed;
  opts.fixed_eta = 1e-2;
  opts.fixed_alpha = 3;
  Client c(dir.clients[0], TinyData(rng, 20), shape, {}, opts, 1);
  EXPECT_FALSE(c.agent().has_value());
  c.AcceptInitial(SignGlobalModel(std::vector<double>(shape.ParameterCount(), 0.0), 0,
                                  dir.server));
  ClientRoundRecord rec;
  c.Round(0, &rec);
  EXPECT_EQ(rec.eta, 1e-2);
  EXPECT_EQ(rec.alpha, 3);
  EXPECT_FALSE(rec.has_reward);
}

TEST(Client, RoundWithoutInitialModelFails) {
  const KeyDirectory& dir = Keys(1);
  ml::ModelShape shape{ml::ModelKind::kLogistic, 4, 3, 0};
  std::mt19937_64 rng(17);
  Client c(dir.clients[0], TinyData(rng, 20), shape, {}, {}, 1);
  EXPECT_THROW(c.Round(0, nullptr), ProtocolError);
}

}  // namespace
}  // namespace dapfl::protocol
