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

#include <algorithm>
#include <string_view>

#include "dapfl/errors.h"

namespace dapfl::protocol {
namespace {

constexpr std::string_view kGlobalTag = "dapfl/global/v1";
constexpr std::string_view kUploadTag = "dapfl/upload/v1";
constexpr std::string_view kAggregateTag = "dapfl/aggregate/v1";
constexpr std::string_view kReportTag = "dapfl/report/v1";

Bytes SignedMessage(std::string_view tag, std::uint32_t round,
                    std::optional<std::uint32_t> sender,
                    std::span<const std::uint8_t> body) {
  ByteWriter w;
  w.Blob(std::span(reinterpret_cast<const std::uint8_t*>(tag.data()), tag.size()));
  w.U32(round);
  if (sender) w.U32(*sender);
  w.Raw(body);
  return w.Take();
}

void WriteWeights(ByteWriter& w, std::span<const double> weights) {
  w.U32(static_cast<std::uint32_t>(weights.size()));
  for (double x : weights) w.F64(x);
}

std::vector<double> ReadWeights(ByteReader& r) {
  std::uint32_t dim = r.U32();
  if (dim > r.remaining() / 8) throw TruncatedError("model vector truncated");
  std::vector<double> out(dim);
  for (double& x : out) x = r.F64();
  return out;
}

// Length-prefixed list of ciphertext values.
void WriteCiphertexts(ByteWriter& w, std::span<const paillier::Ciphertext> cs) {
  w.U32(static_cast<std::uint32_t>(cs.size()));
  for (const auto& c : cs) w.BigInt(c.value);
}

std::vector<mpz_class> ReadIntegers(ByteReader& r) {
  std::uint32_t count = r.U32();
  if (count > r.remaining() / 4) throw TruncatedError("integer list truncated");
  std::vector<mpz_class> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) out.push_back(r.BigInt());
  return out;
}

paillier::Ciphertext CheckedCiphertext(const mpz_class& v, const paillier::PublicKey& pk) {
  if (v <= 0 || v >= pk.n_squared) throw DomainError("ciphertext outside (0, n^2)");
  return paillier::Ciphertext{v, pk.key_id};
}

void ExpectEnvelope(const wire::Envelope& e, wire::MessageType type,
                    std::uint32_t round) {
  if (e.type != type) {
    throw ProtocolError(std::string("expected ") + wire::ToString(type) + ", got " +
                        wire::ToString(e.type));
  }
  if (e.round != round) {
    throw ProtocolError("round " + std::to_string(e.round) + " where " +
                        std::to_string(round) + " was expected");
  }
}

}  // namespace

KeyDirectory KdcProvision(std::size_t n_clients, unsigned key_bits, RandomSource& rng) {
  if (n_clients < 1) throw DomainError("at least one client is required");
  KeyDirectory dir;
  paillier::KeyPair cs_enc = paillier::GenerateKeyPair(key_bits, rng);
  dir.server.signing = paillier::GenerateKeyPair(key_bits, rng);
  dir.server.cs_enc_pub = cs_enc.pub;
  for (std::size_t i = 0; i < n_clients; ++i) {
    paillier::KeyPair outer = paillier::GenerateKeyPair(key_bits, rng);
    paillier::KeyPair signing = paillier::GenerateKeyPair(key_bits, rng);
    ClientKeys ck;
    ck.id = static_cast<std::uint32_t>(i);
    ck.outer_pub = outer.pub;
    ck.cs_enc = cs_enc;
    ck.signing = signing;
    ck.cs_sign_pub = dir.server.signing.pub;
    dir.server.client_outer.push_back(std::move(outer));
    dir.server.client_sign_pub.push_back(signing.pub);
    dir.clients.push_back(std::move(ck));
  }
  return dir;
}

wire::Envelope SignGlobalModel(std::span<const double> weights, std::uint32_t round,
                               const ServerKeys& keys) {
  ByteWriter body;
  WriteWeights(body, weights);
  paillier::Signature sig = paillier::Sign(
      SignedMessage(kGlobalTag, round, std::nullopt, body.bytes()), keys.signing.priv);
  ByteWriter w;
  w.Blob(body.bytes());
  paillier::WriteSignature(w, sig);
  return {wire::MessageType::kGlobalModel, round, transport::kServerEndpoint, w.Take()};
}

std::vector<double> VerifyGlobalModel(const wire::Envelope& message,
                                      std::uint32_t expected_round,
                                      const ClientKeys& keys) {
  ExpectEnvelope(message, wire::MessageType::kGlobalModel, expected_round);
  if (message.sender != transport::kServerEndpoint) {
    throw VerificationError("global model not sent by the server");
  }
  ByteReader r(message.payload);
  auto body = r.Blob();
  paillier::Signature sig = paillier::ReadSignature(r);
  r.ExpectDone();
  if (!paillier::Verify(SignedMessage(kGlobalTag, message.round, std::nullopt, body), sig,
                        keys.cs_sign_pub)) {
    throw VerificationError("global model signature does not verify");
  }
  ByteReader br(body);
  std::vector<double> weights = ReadWeights(br);
  br.ExpectDone();
  return weights;
}

wire::Envelope BuildUpload(std::span<const double> local_weights,
                           std::uint64_t data_size, unsigned scale_bits,
                           std::uint32_t round, const ClientKeys& keys,
                           RandomSource& rng) {
  const paillier::PublicKey& cs = keys.cs_enc.pub;
  encoding::FixedPointConfig cfg{scale_bits, cs.n};
  encoding::EncodedModel encoded =
      encoding::EncodeWeightedModel(local_weights, data_size, cfg);

  std::vector<paillier::Ciphertext> weighted;
  weighted.reserve(encoded.dim());
  // Clients hold the shared CS key pair, so they encrypt through its factors.
  const paillier::PrivateKey& cs_priv = keys.cs_enc.priv;
  for (const mpz_class& m : encoded.coords) {
    weighted.push_back(paillier::Encrypt(m, cs_priv, rng));
  }
  paillier::Ciphertext weight =
      paillier::Encrypt(mpz_class(std::to_string(data_size)), cs_priv, rng);

  ByteWriter omega;
  WriteCiphertexts(omega, weighted);
  omega.BigInt(weight.value);
  paillier::Signature sig = paillier::Sign(
      SignedMessage(kUploadTag, round, keys.id, omega.bytes()), keys.signing.priv);

  ByteWriter inner;
  inner.Blob(omega.bytes());
  paillier::WriteSignature(inner, sig);

  std::vector<mpz_class> blocks = encoding::ToBlocks(inner.bytes(), keys.outer_pub.n);
  std::vector<paillier::Ciphertext> outer;
  outer.reserve(blocks.size());
  for (const mpz_class& b : blocks) outer.push_back(paillier::Encrypt(b, keys.outer_pub, rng));

  ByteWriter payload;
  WriteCiphertexts(payload, outer);
  return {wire::MessageType::kClientUpload, round, keys.id, payload.Take()};
}

UploadBody OpenUpload(const wire::Envelope& upload, std::uint32_t expected_round,
                      std::size_t expected_dim, const ServerKeys& keys) {
  ExpectEnvelope(upload, wire::MessageType::kClientUpload, expected_round);
  if (upload.sender >= keys.client_outer.size()) {
    throw ProtocolError("upload from unknown client " + std::to_string(upload.sender));
  }
  const paillier::KeyPair& outer = keys.client_outer[upload.sender];

  ByteReader r(upload.payload);
  std::vector<mpz_class> outer_values = ReadIntegers(r);
  r.ExpectDone();
  std::vector<mpz_class> blocks;
  blocks.reserve(outer_values.size());
  for (const mpz_class& v : outer_values) {
    blocks.push_back(paillier::Decrypt(CheckedCiphertext(v, outer.pub), outer.priv));
  }
  Bytes inner = encoding::FromBlocks(blocks, outer.pub.n);

  ByteReader ir(inner);
  auto omega = ir.Blob();
  paillier::Signature sig = paillier::ReadSignature(ir);
  ir.ExpectDone();
  if (!paillier::Verify(SignedMessage(kUploadTag, upload.round, upload.sender, omega), sig,
                        keys.client_sign_pub[upload.sender])) {
    throw VerificationError("upload signature does not verify");
  }

  ByteReader orr(omega);
  std::vector<mpz_class> coords = ReadIntegers(orr);
  mpz_class weight = orr.BigInt();
  orr.ExpectDone();
  if (coords.size() != expected_dim) {
    throw FormatError("upload has " + std::to_string(coords.size()) +
                      " coordinates, expected " + std::to_string(expected_dim));
  }
  UploadBody body;
  body.weighted.reserve(coords.size());
  for (const mpz_class& c : coords) body.weighted.push_back(CheckedCiphertext(c, keys.cs_enc_pub));
  body.weight = CheckedCiphertext(weight, keys.cs_enc_pub);
  return body;
}

AggregateResult ServerAggregate(std::span<const wire::Envelope> uploads,
                                std::uint32_t round, std::size_t dim,
                                const ServerKeys& keys) {
  AggregateResult result;
  std::optional<UploadBody> product;
  std::vector<bool> seen(keys.client_outer.size(), false);
  for (const wire::Envelope& up : uploads) {
    try {
      if (up.sender < seen.size() && seen[up.sender]) {
        throw ProtocolError("duplicate upload");
      }
      UploadBody body = OpenUpload(up, round, dim, keys);
      seen[up.sender] = true;
      result.legitimate.push_back(up.sender);
      if (!product) {
        product = std::move(body);
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        product->weighted[j] =
            paillier::HomAdd(product->weighted[j], body.weighted[j], keys.cs_enc_pub);
      }
      product->weight = paillier::HomAdd(product->weight, body.weight, keys.cs_enc_pub);
    } catch (const Error& e) {
      result.rejected.push_back({up.sender, e.what()});
    }
  }
  if (!product) throw RoundError("no upload verified in round " + std::to_string(round));
  std::sort(result.legitimate.begin(), result.legitimate.end());

  ByteWriter body;
  WriteCiphertexts(body, product->weighted);
  body.BigInt(product->weight.value);
  body.U32(static_cast<std::uint32_t>(result.legitimate.size()));
  for (std::uint32_t id : result.legitimate) body.U32(id);
  paillier::Signature sig = paillier::Sign(
      SignedMessage(kAggregateTag, round, std::nullopt, body.bytes()), keys.signing.priv);
  ByteWriter w;
  w.Blob(body.bytes());
  paillier::WriteSignature(w, sig);
  result.bundle = {wire::MessageType::kAggregateBundle, round, transport::kServerEndpoint,
                   w.Take()};
  return result;
}

GlobalUpdate OpenBundle(const wire::Envelope& bundle, std::uint32_t expected_round,
                        unsigned scale_bits, const ClientKeys& keys) {
  ExpectEnvelope(bundle, wire::MessageType::kAggregateBundle, expected_round);
  if (bundle.sender != transport::kServerEndpoint) {
    throw VerificationError("bundle not sent by the server");
  }
  ByteReader r(bundle.payload);
  auto body = r.Blob();
  paillier::Signature sig = paillier::ReadSignature(r);
  r.ExpectDone();
  if (!paillier::Verify(SignedMessage(kAggregateTag, bundle.round, std::nullopt, body), sig,
                        keys.cs_sign_pub)) {
    throw VerificationError("bundle signature does not verify");
  }

  const paillier::KeyPair& cs = keys.cs_enc;
  ByteReader br(body);
  std::vector<mpz_class> coords = ReadIntegers(br);
  mpz_class weight = br.BigInt();
  std::uint32_t members = br.U32();
  if (members > br.remaining() / 4) throw TruncatedError("client set truncated");
  GlobalUpdate update;
  for (std::uint32_t i = 0; i < members; ++i) update.legitimate.push_back(br.U32());
  br.ExpectDone();

  std::vector<mpz_class> sums;
  sums.reserve(coords.size());
  for (const mpz_class& c : coords) {
    sums.push_back(paillier::Decrypt(CheckedCiphertext(c, cs.pub), cs.priv));
  }
  update.total_weight = paillier::Decrypt(CheckedCiphertext(weight, cs.pub), cs.priv);
  if (update.total_weight == 0) throw FormatError("aggregate weight is zero");
  update.weights = encoding::DecodeWeightedMean(sums, update.total_weight,
                                                {scale_bits, cs.pub.n});
  return update;
}

wire::Envelope BuildReport(std::span<const double> weights, std::uint32_t round,
                           const ClientKeys& keys) {
  ByteWriter body;
  WriteWeights(body, weights);
  paillier::Signature sig = paillier::Sign(
      SignedMessage(kReportTag, round, keys.id, body.bytes()), keys.signing.priv);
  ByteWriter w;
  w.Blob(body.bytes());
  paillier::WriteSignature(w, sig);
  return {wire::MessageType::kReport, round, keys.id, w.Take()};
}

std::vector<double> VerifyReport(const wire::Envelope& report,
                                 std::uint32_t expected_round, const ServerKeys& keys) {
  ExpectEnvelope(report, wire::MessageType::kReport, expected_round);
  if (report.sender >= keys.client_sign_pub.size()) {
    throw ProtocolError("report from unknown client " + std::to_string(report.sender));
  }
  ByteReader r(report.payload);
  auto body = r.Blob();
  paillier::Signature sig = paillier::ReadSignature(r);
  r.ExpectDone();
  if (!paillier::Verify(SignedMessage(kReportTag, report.round, report.sender, body), sig,
                        keys.client_sign_pub[report.sender])) {
    throw VerificationError("report signature does not verify");
  }
  ByteReader br(body);
  std::vector<double> weights = ReadWeights(br);
  br.ExpectDone();
  return weights;
}

Client::Client(ClientKeys keys, ml::Dataset data, ml::ModelShape shape,
               resource::ResourceProfile profile, ClientOptions options,
               std::uint64_t seed)
    : keys_(std::move(keys)),
      data_(std::move(data)),
      shape_(shape),
      profile_(profile),
      options_(std::move(options)),
      train_rng_(MixSeed(seed, 1)) {
  data_.Validate();
  resource::Validate(profile_);
  if (options_.system_entropy) {
    crypto_rng_ = std::make_unique<SystemRandom>();
  } else {
    crypto_rng_ = std::make_unique<DeterministicRandom>(MixSeed(seed, 2));
  }
  const TuningMode mode = options_.mode;
  if ((mode == TuningMode::kFixed || mode == TuningMode::kAdaptiveEta) &&
      options_.fixed_alpha < 1) {
    throw ConfigError("fixed alpha must be at least 1");
  }
  if ((mode == TuningMode::kFixed || mode == TuningMode::kAdaptiveAlpha) &&
      !(options_.fixed_eta > 0.0)) {
    throw ConfigError("fixed eta must be positive");
  }
  if (options_.mode != TuningMode::kFixed) agent_.emplace(options_.ddpg, MixSeed(seed, 3));
}

void Client::AcceptInitial(const wire::Envelope& message) {
  std::vector<double> w = VerifyGlobalModel(message, 0, keys_);
  if (w.size() != shape_.ParameterCount()) throw FormatError("initial model has wrong size");
  global_ = std::move(w);
}

ddpg::AgentAction Client::ChooseAction(std::uint32_t t, const ddpg::AgentState& s) {
  const ddpg::ActionBounds& b = options_.ddpg.bounds;
  if (options_.mode == TuningMode::kFixed) {
    return {options_.fixed_eta, options_.fixed_alpha,
            {ddpg::NormalizeEta(options_.fixed_eta, b),
             ddpg::NormalizeAlpha(options_.fixed_alpha, b)}};
  }
  ddpg::AgentAction a = t == 0 ? agent_->RandomAction() : agent_->SelectAction(s, true);
  if (options_.mode == TuningMode::kAdaptiveEta) {
    a.alpha = options_.fixed_alpha;
    a.normalized[1] = ddpg::NormalizeAlpha(options_.fixed_alpha, b);
  } else if (options_.mode == TuningMode::kAdaptiveAlpha) {
    a.eta = options_.fixed_eta;
    a.normalized[0] = ddpg::NormalizeEta(options_.fixed_eta, b);
  }
  return a;
}

wire::Envelope Client::Round(std::uint32_t t, ClientRoundRecord* record) {
  if (global_.empty()) throw ProtocolError("no verified global model installed");
  ClientRoundRecord rec;
  rec.round = t;
  ml::Model model = ml::Unflatten(global_, shape_);
  rec.state = ml::Evaluate(model, data_);
  ddpg::AgentState s = ddpg::AgentState::From(rec.state);

  if (agent_ && prev_report_) {
    rec.has_reward = true;
    rec.reward = ddpg::ComputeReward(*prev_report_, rec.state, options_.ddpg.xi);
    agent_->Observe({ddpg::AgentState::From(*prev_report_), prev_action_, rec.reward, s,
                     prev_slack_});
    rec.ddpg_trained = agent_->Train().trained;
  }

  ddpg::AgentAction a = ChooseAction(t, s);
  rec.eta = a.eta;
  rec.alpha = a.alpha;
  rec.slack = resource::ConstraintSlack(a.alpha, resource::SampleRound(profile_, t));
  rec.violation = rec.slack > 0.0;
  if (agent_) {
    agent_->UpdateMultiplier(rec.slack);
    agent_->AdvanceSchedule();
    rec.lambda = agent_->lambda();
  }
  prev_report_ = rec.state;
  prev_action_ = a.normalized;
  prev_slack_ = rec.slack;

  ml::Model local = ml::TrainLocal(model, data_, a.eta, a.alpha, train_rng_,
                                   options_.batch_size);
  wire::Envelope upload = BuildUpload(local.weights, data_.size(), options_.scale_bits, t,
                                      keys_, *crypto_rng_);
  if (record) *record = rec;
  return upload;
}

bool Client::ApplyBundle(const wire::Envelope& bundle, std::uint32_t t) {
  try {
    GlobalUpdate update = OpenBundle(bundle, t, options_.scale_bits, keys_);
    if (update.weights.size() != global_.size()) return false;
    global_ = std::move(update.weights);
    return true;
  } catch (const Error&) {
    return false;
  }
}

wire::Envelope Client::Report(std::uint32_t t) const {
  return BuildReport(global_, t, keys_);
}

}  // namespace dapfl::protocol
