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

// dapfl: key generation, experiment runs and a quick self-test.
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 round failure (a round ended with no verified upload).
// DAPFL_LOG_LEVEL selects the log level (trace, debug, info, warn, err, off).

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>

#include "dapfl/config.h"
#include "dapfl/ddpg.h"
#include "dapfl/errors.h"
#include "dapfl/experiment.h"
#include "dapfl/ml.h"
#include "dapfl/paillier.h"
#include "dapfl/random.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRound = 3;

void ConfigureLogging() {
  const char* level = std::getenv("DAPFL_LOG_LEVEL");
  spdlog::set_level(level ? spdlog::level::from_str(level) : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
}

int Keygen(unsigned bits, const std::string& out, std::optional<std::uint64_t> seed) {
  std::unique_ptr<dapfl::RandomSource> rng;
  if (seed) {
    spdlog::warn("seeded key generation is for tests only");
    rng = std::make_unique<dapfl::DeterministicRandom>(*seed);
  } else {
    if (bits < dapfl::paillier::kMinSecureBits) {
      spdlog::warn("{}-bit keys are below the {}-bit minimum for real use", bits,
                   dapfl::paillier::kMinSecureBits);
    }
    rng = std::make_unique<dapfl::SystemRandom>();
  }
  dapfl::paillier::KeyPair kp = dapfl::paillier::GenerateKeyPair(bits, *rng);
  dapfl::paillier::SaveKeyPair(kp, out);
  std::cout << "wrote " << bits << "-bit key pair to " << out << " (key id "
            << std::hex << kp.pub.key_id << std::dec << ")\n";
  return 0;
}

int Run(const std::string& config_path, const std::string& metrics_path,
        const std::string& mode_override) {
  dapfl::harness::ExperimentConfig cfg = dapfl::harness::LoadConfig(config_path);
  if (!mode_override.empty()) {
    cfg.mode = dapfl::harness::ParseMode(mode_override);
    cfg.Validate();
  }
  auto format = dapfl::harness::FormatForPath(metrics_path);
  bool failed_round = false;
  auto records = dapfl::harness::RunExperiment(cfg, [&](const auto& r) {
    failed_round |= r.skipped;
    spdlog::info("round {:>3}  acc {:.4f}  loss {:.4f}  f1 {:.4f}  |C| {}", r.round,
                 r.global.accuracy, r.global.loss, r.global.f1, r.legitimate);
  });
  dapfl::harness::ExportMetrics(records, metrics_path, format, cfg.wall_time);
  std::cout << "final accuracy " << records.back().global.accuracy << ", metrics in "
            << metrics_path << "\n";
  return failed_round ? kExitRound : 0;
}

// Crypto round trips, signature checks and finite-difference gradient checks.
int Selftest(unsigned bits) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    failures += ok ? 0 : 1;
  };
  namespace pl = dapfl::paillier;
  dapfl::SystemRandom rng;
  pl::KeyPair kp = pl::GenerateKeyPair(bits, rng);
  bool ok = true;
  for (int i = 0; i < 50 && ok; ++i) {
    mpz_class a = rng.Below(kp.pub.n), b = rng.Below(kp.pub.n);
    pl::Ciphertext ca = pl::Encrypt(a, kp.pub, rng), cb = pl::Encrypt(b, kp.pub, rng);
    ok = pl::Decrypt(ca, kp.priv) == a &&
         pl::Decrypt(pl::HomAdd(ca, cb, kp.pub), kp.priv) == (a + b) % kp.pub.n;
  }
  report("paillier round trip and homomorphic sum", ok);

  ok = true;
  for (int i = 0; i < 20 && ok; ++i) {
    dapfl::Bytes msg(32);
    for (auto& x : msg) x = static_cast<std::uint8_t>(rng.Below(256).get_ui());
    pl::Signature sig = pl::Sign(msg, kp.priv);
    ok = pl::Verify(msg, sig, kp.pub);
    msg[i % msg.size()] ^= 1;
    ok = ok && !pl::Verify(msg, sig, kp.pub);
  }
  report("paillier signature and tamper rejection", ok);

  std::mt19937_64 g(7);
  dapfl::ml::ModelShape shape{dapfl::ml::ModelKind::kMlp, 5, 3, 4};
  dapfl::ml::Model model = dapfl::ml::MakeModel(shape, 0.5, g);
  dapfl::ml::Dataset d;
  d.dim = 5;
  d.classes = 3;
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int r = 0; r < 6; ++r) {
    d.labels.push_back(r % 3);
    for (int k = 0; k < 5; ++k) d.features.push_back(n01(g));
  }
  std::vector<std::size_t> rows = {0, 1, 2, 3, 4, 5};
  std::vector<double> grad, scratch;
  dapfl::ml::LossAndGradient(model, d, rows, grad);
  double worst = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    auto up = model, down = model;
    up.weights[i] += 1e-6;
    down.weights[i] -= 1e-6;
    double fd = (dapfl::ml::LossAndGradient(up, d, rows, scratch) -
                 dapfl::ml::LossAndGradient(down, d, rows, scratch)) / 2e-6;
    worst = std::max(worst, std::abs(fd - grad[i]) /
                                std::max(std::abs(fd) + std::abs(grad[i]), 1e-6));
  }
  report("model gradient matches finite differences", worst < 1e-4);

  dapfl::ddpg::DenseNet net({3, 8, 8, 2});
  net.InitRandom(g, 0.5);
  std::vector<double> x = {0.3, -0.2, 0.9}, w = {1.0, -0.5};
  dapfl::ddpg::DenseNet::Tape tape;
  net.Forward(x, tape);
  std::vector<double> pg(net.ParameterCount(), 0.0);
  net.Backward(tape, w, pg);
  worst = 0.0;
  for (std::size_t i = 0; i < pg.size(); ++i) {
    auto up = net, down = net;
    up.params()[i] += 1e-6;
    down.params()[i] -= 1e-6;
    auto yu = up.Forward(x), yd = down.Forward(x);
    double fd = (w[0] * (yu[0] - yd[0]) + w[1] * (yu[1] - yd[1])) / 2e-6;
    worst = std::max(worst, std::abs(fd - pg[i]) /
                                std::max(std::abs(fd) + std::abs(pg[i]), 1e-6));
  }
  report("agent network gradient matches finite differences", worst < 1e-4);
  return failures == 0 ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  ConfigureLogging();
  CLI::App app{"Adaptive federated learning with Paillier secure aggregation"};
  app.require_subcommand(1);

  unsigned bits = 1024;
  std::string key_out;
  std::optional<std::uint64_t> key_seed;
  auto* keygen = app.add_subcommand("keygen", "Generate a Paillier key pair file");
  keygen->add_option("--bits", bits, "Modulus size in bits")->check(CLI::Range(64u, 8192u));
  keygen->add_option("--out", key_out, "Output path")->required();
  keygen->add_option("--seed", key_seed, "Deterministic seed (test keys only)");

  std::string config_path, metrics_path, mode_override;
  auto* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_path, "INI experiment config")->required();
  run->add_option("--out-metrics", metrics_path, "Metrics file (.csv or .jsonl)")->required();
  run->add_option("--mode-override", mode_override,
                  "dapfl, large, small, ddpg-eta or ddpg-alpha");

  unsigned self_bits = 512;
  auto* selftest = app.add_subcommand("selftest", "Crypto and gradient self-checks");
  selftest->add_option("--bits", self_bits, "Key size for the crypto checks")
      ->check(CLI::Range(64u, 4096u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (*keygen) return Keygen(bits, key_out, key_seed);
    if (*run) return Run(config_path, metrics_path, mode_override);
    if (*selftest) return Selftest(self_bits);
  } catch (const dapfl::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kExitConfig;
  } catch (const dapfl::RoundError& e) {
    spdlog::error("round: {}", e.what());
    return kExitRound;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
