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

// Round protocol between the central server (CS) and the clients.
//
// Key holdings after provisioning:
//   CS      : SK_i^Enc for every client i, PK_CS^Enc, its signing pair,
//             PK_i^Sign for every client.
//   client i: PK_i^Enc, the CS encryption pair (SK_CS^Enc decrypts the
//             aggregate), its own signing pair, PK_CS^Sign.
//
// Per round t, client i uploads
//   eps2( Omega_i || sig_i(Omega_i) ),  Omega_i = eps1(|D_i| w_i) || eps1(|D_i|)
// where eps1 is encryption under PK_CS^Enc (one ciphertext per coordinate) and
// eps2 is blockwise encryption under PK_i^Enc. The CS strips eps2, verifies,
// multiplies the eps1 ciphertexts over the verified set C(t), signs the
// products together with C(t), and broadcasts. Clients verify, decrypt with
// SK_CS^Enc and divide.
//
// Every signature covers a context tag, the round index and, for client
// messages, the sender id, so a message cannot be replayed under another
// role, round or identity. Byte layouts are in docs/protocol.md.

#ifndef DAPFL_PROTOCOL_H_
#define DAPFL_PROTOCOL_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dapfl/ddpg.h"
#include "dapfl/encoding.h"
#include "dapfl/ml.h"
#include "dapfl/paillier.h"
#include "dapfl/random.h"
#include "dapfl/resource.h"
#include "dapfl/transport.h"
#include "dapfl/wire.h"

namespace dapfl::protocol {

struct ClientKeys {
  std::uint32_t id = 0;
  paillier::PublicKey outer_pub;  // PK_i^Enc
  paillier::KeyPair cs_enc;       // PK_CS^Enc and SK_CS^Enc
  paillier::KeyPair signing;      // SK_i^Sign / PK_i^Sign
  paillier::PublicKey cs_sign_pub;
};

struct ServerKeys {
  std::vector<paillier::KeyPair> client_outer;  // SK_i^Enc, indexed by id
  paillier::PublicKey cs_enc_pub;
  paillier::KeyPair signing;
  std::vector<paillier::PublicKey> client_sign_pub;
};

struct KeyDirectory {
  ServerKeys server;
  std::vector<ClientKeys> clients;

  std::size_t encryption_keypairs() const { return server.client_outer.size() + 1; }
  std::size_t signing_keypairs() const { return server.client_sign_pub.size() + 1; }
};

// Trusted in-process key distribution. Throws DomainError for n_clients < 1;
// key generation errors propagate.
KeyDirectory KdcProvision(std::size_t n_clients, unsigned key_bits, RandomSource& rng);

// --- Global model distribution -------------------------------------------

// W || sig_CS(W), sent from kServerEndpoint.
wire::Envelope SignGlobalModel(std::span<const double> weights, std::uint32_t round,
                               const ServerKeys& keys);
// Returns W; throws VerificationError on a bad signature or wrong sender, and
// FormatError on malformed bytes.
std::vector<double> VerifyGlobalModel(const wire::Envelope& message,
                                      std::uint32_t expected_round,
                                      const ClientKeys& keys);

// --- Client upload --------------------------------------------------------

// Omega_i in clear form: the CS-encrypted weighted coordinates and weight.
struct UploadBody {
  std::vector<paillier::Ciphertext> weighted;
  paillier::Ciphertext weight;
};

// Encodes |D_i| * w with `scale_bits` fractional bits, encrypts, signs and
// outer-encrypts.
wire::Envelope BuildUpload(std::span<const double> local_weights,
                           std::uint64_t data_size, unsigned scale_bits,
                           std::uint32_t round, const ClientKeys& keys,
                           RandomSource& rng);

// CS side: strips the outer layer, verifies the client signature and parses
// Omega_i. Throws FormatError, VerificationError, KeyError or DomainError on
// any defect.
UploadBody OpenUpload(const wire::Envelope& upload, std::uint32_t expected_round,
                      std::size_t expected_dim, const ServerKeys& keys);

// --- Aggregation ----------------------------------------------------------

struct Rejection {
  std::uint32_t client = 0;
  std::string reason;
};

struct AggregateResult {
  wire::Envelope bundle;
  std::vector<std::uint32_t> legitimate;  // C(t), ascending
  std::vector<Rejection> rejected;
};

// Verifies every upload, multiplies the ciphertexts of the verified set and
// signs the products with C(t). Duplicate uploads from one client after the
// first are rejected. Throws RoundError if no upload verifies.
AggregateResult ServerAggregate(std::span<const wire::Envelope> uploads,
                                std::uint32_t round, std::size_t dim,
                                const ServerKeys& keys);

struct GlobalUpdate {
  std::vector<double> weights;
  std::vector<std::uint32_t> legitimate;
  mpz_class total_weight;
};

// Verifies the CS signature, decrypts with SK_CS^Enc and returns
// sum |D_i| w_i / sum |D_i|. Throws VerificationError on a bad signature,
// FormatError on malformed bytes.
GlobalUpdate OpenBundle(const wire::Envelope& bundle, std::uint32_t expected_round,
                        unsigned scale_bits, const ClientKeys& keys);

// --- Optional client report ----------------------------------------------

// Signed copy of a client's current global model, for the CS on request.
wire::Envelope BuildReport(std::span<const double> weights, std::uint32_t round,
                           const ClientKeys& keys);
std::vector<double> VerifyReport(const wire::Envelope& report,
                                 std::uint32_t expected_round, const ServerKeys& keys);

// --- Client role ----------------------------------------------------------

// How a client picks (eta, alpha) each round.
enum class TuningMode {
  kAdaptive,       // DDPG chooses both
  kFixed,          // constants
  kAdaptiveEta,    // DDPG chooses eta, alpha fixed
  kAdaptiveAlpha,  // DDPG chooses alpha, eta fixed
};

struct ClientOptions {
  TuningMode mode = TuningMode::kAdaptive;
  double fixed_eta = 1e-3;
  int fixed_alpha = 16;
  ddpg::DdpgConfig ddpg;
  std::size_t batch_size = ml::kDefaultBatchSize;
  unsigned scale_bits = encoding::kDefaultScaleBits;
  // Draw encryption nonces from OS entropy instead of the seeded stream.
  // Seeded nonces keep experiments reproducible and are not for deployment.
  bool system_entropy = false;
};

struct ClientRoundRecord {
  std::uint32_t round = 0;
  ml::EvalReport state;      // W(t) on the local data
  double eta = 0.0;
  int alpha = 0;
  bool has_reward = false;   // false in round 0
  double reward = 0.0;       // r_i(t - 1)
  double slack = 0.0;        // b_i(t) for the chosen alpha
  bool violation = false;    // b_i(t) > 0
  double lambda = 0.0;       // multiplier after this round's update
  bool ddpg_trained = false;
};

class Client {
 public:
  Client(ClientKeys keys, ml::Dataset data, ml::ModelShape shape,
         resource::ResourceProfile profile, ClientOptions options, std::uint64_t seed);

  std::uint32_t id() const { return keys_.id; }

  // Verifies W(0) and installs it. Throws VerificationError.
  void AcceptInitial(const wire::Envelope& message);

  // One client round on the installed W(t): evaluate, learn from the
  // previous transition, choose (eta, alpha), train locally, upload.
  wire::Envelope Round(std::uint32_t t, ClientRoundRecord* record);

  // Installs W(t+1) from a verified bundle. Returns false and keeps the
  // current model if the bundle fails verification or parsing.
  bool ApplyBundle(const wire::Envelope& bundle, std::uint32_t t);

  wire::Envelope Report(std::uint32_t t) const;

  const std::vector<double>& global_weights() const { return global_; }
  const ml::Dataset& data() const { return data_; }
  const std::optional<ddpg::Agent>& agent() const { return agent_; }

 private:
  ddpg::AgentAction ChooseAction(std::uint32_t t, const ddpg::AgentState& s);

  ClientKeys keys_;
  ml::Dataset data_;
  ml::ModelShape shape_;
  resource::ResourceProfile profile_;
  ClientOptions options_;
  std::mt19937_64 train_rng_;
  std::unique_ptr<RandomSource> crypto_rng_;
  std::optional<ddpg::Agent> agent_;
  std::vector<double> global_;
  std::optional<ml::EvalReport> prev_report_;
  std::array<double, ddpg::kActionDim> prev_action_{};
  double prev_slack_ = 0.0;
};

}  // namespace dapfl::protocol

#endif  // DAPFL_PROTOCOL_H_
