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

#include "dapfl/experiment.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <random>

#include "dapfl/errors.h"
#include "dapfl/protocol.h"
#include "dapfl/transport.h"

namespace dapfl::harness {
namespace {

using Clock = std::chrono::steady_clock;
using transport::EndpointId;
using transport::kServerEndpoint;

std::string Real(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string JsonReal(double x) { return std::isfinite(x) ? Real(x) : "null"; }

const char* Bool(bool b) { return b ? "true" : "false"; }

struct Endpoints {
  std::unique_ptr<transport::Transport> bus;

  static Endpoints Create(const ExperimentConfig& cfg) {
    Endpoints e;
    if (cfg.transport == TransportKind::kInProcess) {
      auto bus = std::make_unique<transport::InProcessBus>();
      bus->Register(kServerEndpoint);
      for (std::size_t i = 0; i < cfg.clients; ++i) bus->Register(static_cast<EndpointId>(i));
      e.bus = std::move(bus);
    } else {
      auto tcp = std::make_unique<transport::TcpTransport>();
      tcp->Listen(kServerEndpoint, cfg.host, cfg.port);
      for (std::size_t i = 0; i < cfg.clients; ++i) {
        std::uint16_t port =
            cfg.port == 0 ? 0 : static_cast<std::uint16_t>(cfg.port + 1 + i);
        tcp->Listen(static_cast<EndpointId>(i), cfg.host, port);
      }
      e.bus = std::move(tcp);
    }
    return e;
  }
};

}  // namespace

ExperimentData PrepareData(const ExperimentConfig& cfg) {
  ml::Dataset train;
  ExperimentData out;
  if (cfg.source == DataSource::kIdx) {
    train = LoadIdx(cfg.train_images, cfg.train_labels, cfg.train_limit);
    out.test = LoadIdx(cfg.test_images, cfg.test_labels, cfg.test_limit);
  } else {
    SynthSpec spec = cfg.synth;
    spec.seed = MixSeed(cfg.seed, 7);
    train = SynthDataset(spec, 0);
    spec.per_class = cfg.synth_test_per_class;
    out.test = SynthDataset(spec, 1);
    if (cfg.train_limit > 0 && train.size() > cfg.train_limit) {
      std::vector<std::size_t> rows(cfg.train_limit);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      train = train.Subset(rows);
    }
  }
  if (out.test.dim != train.dim || out.test.classes != train.classes) {
    throw DataError("training and test data disagree on shape");
  }
  out.shards = Partition(train, {cfg.clients, cfg.partition_mean, cfg.partition_std,
                                 MixSeed(cfg.seed, 8)});
  return out;
}

std::vector<RoundMetrics> RunExperiment(const ExperimentConfig& cfg,
                                        const RoundCallback& on_round) {
  cfg.Validate();
  ExperimentData data = PrepareData(cfg);
  const ml::ModelShape shape = cfg.Shape(data.test.dim, data.test.classes);
  const std::size_t dim = shape.ParameterCount();

  std::unique_ptr<RandomSource> key_rng;
  if (cfg.system_entropy) {
    key_rng = std::make_unique<SystemRandom>();
  } else {
    key_rng = std::make_unique<DeterministicRandom>(MixSeed(cfg.seed, 9));
  }
  protocol::KeyDirectory keys = protocol::KdcProvision(cfg.clients, cfg.key_bits, *key_rng);

  std::uint64_t total_rows = 0;
  for (const auto& s : data.shards) total_rows += s.size();
  encoding::CheckHeadroom({cfg.scale_bits, keys.server.cs_enc_pub.n}, cfg.weight_bound,
                          total_rows);

  std::mt19937_64 init_rng(MixSeed(cfg.seed, 11));
  std::vector<double> w0 = ml::MakeModel(shape, cfg.init_scale, init_rng).weights;

  protocol::ClientOptions options = cfg.ClientOptionsFor();
  std::vector<protocol::Client> clients;
  clients.reserve(cfg.clients);
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    clients.emplace_back(keys.clients[i], data.shards[i], shape, cfg.ProfileFor(i), options,
                         MixSeed(cfg.seed, 100 + i));
  }

  Endpoints net = Endpoints::Create(cfg);
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);

  wire::Envelope init = protocol::SignGlobalModel(w0, 0, keys.server);
  for (std::size_t i = 0; i < cfg.clients; ++i) net.bus->Send(static_cast<EndpointId>(i), init);
  for (std::size_t i = 0; i < cfg.clients; ++i) {
    auto msg = net.bus->ReceiveFrom(static_cast<EndpointId>(i), kServerEndpoint, timeout);
    if (!msg) throw TransportError("client " + std::to_string(i) + " got no initial model");
    clients[i].AcceptInitial(*msg);
  }
  spdlog::info("experiment mode={} clients={} rounds={} params={} key_bits={}",
               ToString(cfg.mode), cfg.clients, cfg.rounds, dim, cfg.key_bits);

  std::vector<RoundMetrics> records;
  for (std::uint32_t t = 0; t < cfg.rounds; ++t) {
    auto start = Clock::now();
    RoundMetrics rec;
    rec.round = t;
    rec.clients.resize(cfg.clients);

    std::size_t sent = 0;
    for (std::size_t i = 0; i < cfg.clients; ++i) {
      ClientMetrics& cm = rec.clients[i];
      cm.client = static_cast<std::uint32_t>(i);
      try {
        protocol::ClientRoundRecord r;
        wire::Envelope upload = clients[i].Round(t, &r);
        net.bus->Send(kServerEndpoint, upload);
        ++sent;
        cm.completed = true;
        cm.eta = r.eta;
        cm.alpha = r.alpha;
        cm.has_reward = r.has_reward;
        cm.reward = r.reward;
        cm.slack = r.slack;
        cm.lambda = r.lambda;
        cm.violation = r.violation;
      } catch (const Error& e) {
        spdlog::warn("round {} client {} aborted: {}", t, i, e.what());
      }
    }

    std::vector<wire::Envelope> uploads;
    auto deadline = Clock::now() + timeout;
    while (uploads.size() < sent) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      auto msg = net.bus->Receive(kServerEndpoint, std::max(left, std::chrono::milliseconds(0)));
      if (!msg) {
        spdlog::warn("round {}: {} of {} uploads before the timeout", t, uploads.size(), sent);
        break;
      }
      uploads.push_back(std::move(*msg));
    }

    try {
      protocol::AggregateResult agg = protocol::ServerAggregate(uploads, t, dim, keys.server);
      for (const auto& rj : agg.rejected) {
        spdlog::warn("round {}: rejected upload from {}: {}", t, rj.client, rj.reason);
      }
      for (std::uint32_t id : agg.legitimate) rec.clients[id].included = true;
      rec.legitimate = agg.legitimate.size();
      for (std::size_t i = 0; i < cfg.clients; ++i) {
        net.bus->Send(static_cast<EndpointId>(i), agg.bundle);
      }
      for (std::size_t i = 0; i < cfg.clients; ++i) {
        auto msg = net.bus->ReceiveFrom(static_cast<EndpointId>(i), kServerEndpoint, timeout);
        if (!msg || !clients[i].ApplyBundle(*msg, t)) {
          spdlog::warn("round {}: client {} kept its previous model", t, i);
        }
      }
    } catch (const RoundError& e) {
      rec.skipped = true;
      spdlog::warn("round {} skipped: {}", t, e.what());
    }

    rec.global = ml::Evaluate(ml::Unflatten(clients[0].global_weights(), shape), data.test);
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    spdlog::debug("round {} acc={:.4f} loss={:.4f} |C|={}", t, rec.global.accuracy,
                  rec.global.loss, rec.legitimate);
    if (on_round) on_round(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

MetricsFormat FormatForPath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (ext == ".csv") return MetricsFormat::kCsv;
  if (ext == ".jsonl" || ext == ".json") return MetricsFormat::kJsonl;
  throw ConfigError("metrics path must end in .csv or .jsonl: " + path.string());
}

std::string MetricsCsvHeader(bool wall_time) {
  std::string h =
      "round,client,global_loss,global_accuracy,global_f1,legitimate,skipped,"
      "completed,included,eta,alpha,reward,slack,lambda,violation";
  if (wall_time) h += ",wall_seconds";
  return h;
}

void ExportMetrics(const std::vector<RoundMetrics>& records, std::ostream& out,
                   MetricsFormat format, bool wall_time) {
  if (format == MetricsFormat::kCsv) {
    out << MetricsCsvHeader(wall_time) << '\n';
    for (const RoundMetrics& r : records) {
      for (const ClientMetrics& c : r.clients) {
        out << r.round << ',' << c.client << ',' << Real(r.global.loss) << ','
            << Real(r.global.accuracy) << ',' << Real(r.global.f1) << ',' << r.legitimate
            << ',' << (r.skipped ? 1 : 0) << ',' << (c.completed ? 1 : 0) << ','
            << (c.included ? 1 : 0) << ',';
        if (c.completed) {
          out << Real(c.eta) << ',' << c.alpha << ','
              << (c.has_reward ? Real(c.reward) : "") << ',' << Real(c.slack) << ','
              << Real(c.lambda) << ',' << (c.violation ? 1 : 0);
        } else {
          out << ",,,,,";
        }
        if (wall_time) out << ',' << Real(r.wall_seconds);
        out << '\n';
      }
    }
    return;
  }
  for (const RoundMetrics& r : records) {
    out << "{\"round\":" << r.round << ",\"global_loss\":" << JsonReal(r.global.loss)
        << ",\"global_accuracy\":" << JsonReal(r.global.accuracy)
        << ",\"global_f1\":" << JsonReal(r.global.f1) << ",\"legitimate\":" << r.legitimate
        << ",\"skipped\":" << Bool(r.skipped) << ",\"clients\":[";
    for (std::size_t i = 0; i < r.clients.size(); ++i) {
      const ClientMetrics& c = r.clients[i];
      if (i > 0) out << ',';
      out << "{\"client\":" << c.client << ",\"completed\":" << Bool(c.completed)
          << ",\"included\":" << Bool(c.included);
      if (c.completed) {
        out << ",\"eta\":" << JsonReal(c.eta) << ",\"alpha\":" << c.alpha
            << ",\"reward\":" << (c.has_reward ? JsonReal(c.reward) : "null")
            << ",\"slack\":" << JsonReal(c.slack) << ",\"lambda\":" << JsonReal(c.lambda)
            << ",\"violation\":" << Bool(c.violation);
      }
      out << '}';
    }
    out << ']';
    if (wall_time) out << ",\"wall_seconds\":" << JsonReal(r.wall_seconds);
    out << "}\n";
  }
}

void ExportMetrics(const std::vector<RoundMetrics>& records,
                   const std::filesystem::path& path, MetricsFormat format,
                   bool wall_time) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  ExportMetrics(records, f, format, wall_time);
  if (!f) throw Error("write to " + path.string() + " failed");
}

}  // namespace dapfl::harness
