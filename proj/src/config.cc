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

#include "dapfl/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "dapfl/errors.h"

namespace dapfl::harness {
namespace {

template <typename T>
T ParseNumber(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (in.fail() || !(in >> std::ws).eof()) {
    throw ConfigError("cannot parse '" + text + "' for " + key);
  }
  return v;
}

bool ParseBool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw ConfigError("cannot parse '" + text + "' as a boolean for " + key);
}

std::vector<double> ParseList(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(ParseNumber<double>(item, key));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename T, typename Field>
Setter Number(Field field) {
  return [field](ExperimentConfig& c, const std::string& v, const std::string& k) {
    field(c) = ParseNumber<T>(v, k);
  };
}

const std::map<std::string, Setter>& Setters() {
  using C = ExperimentConfig;
  static const std::map<std::string, Setter> table = {
      {"experiment.mode", [](C& c, const std::string& v, const std::string&) { c.mode = ParseMode(v); }},
      {"experiment.rounds", Number<std::uint32_t>([](C& c) -> auto& { return c.rounds; })},
      {"experiment.clients", Number<std::size_t>([](C& c) -> auto& { return c.clients; })},
      {"experiment.seed", Number<std::uint64_t>([](C& c) -> auto& { return c.seed; })},

      {"data.source",
       [](C& c, const std::string& v, const std::string& k) {
         if (v == "synthetic") {
           c.source = DataSource::kSynthetic;
         } else if (v == "idx") {
           c.source = DataSource::kIdx;
         } else {
           throw ConfigError("unknown " + k + " '" + v + "' (synthetic, idx)");
         }
       }},
      {"data.train_images", [](C& c, const std::string& v, const std::string&) { c.train_images = v; }},
      {"data.train_labels", [](C& c, const std::string& v, const std::string&) { c.train_labels = v; }},
      {"data.test_images", [](C& c, const std::string& v, const std::string&) { c.test_images = v; }},
      {"data.test_labels", [](C& c, const std::string& v, const std::string&) { c.test_labels = v; }},
      {"data.train_limit", Number<std::size_t>([](C& c) -> auto& { return c.train_limit; })},
      {"data.test_limit", Number<std::size_t>([](C& c) -> auto& { return c.test_limit; })},
      {"data.synth_classes", Number<std::size_t>([](C& c) -> auto& { return c.synth.classes; })},
      {"data.synth_dim", Number<std::size_t>([](C& c) -> auto& { return c.synth.dim; })},
      {"data.synth_train_per_class", Number<std::size_t>([](C& c) -> auto& { return c.synth.per_class; })},
      {"data.synth_test_per_class", Number<std::size_t>([](C& c) -> auto& { return c.synth_test_per_class; })},
      {"data.synth_separation", Number<double>([](C& c) -> auto& { return c.synth.separation; })},
      {"data.synth_condition", Number<double>([](C& c) -> auto& { return c.synth.condition; })},
      {"data.partition_mean", Number<double>([](C& c) -> auto& { return c.partition_mean; })},
      {"data.partition_std", Number<double>([](C& c) -> auto& { return c.partition_std; })},

      {"model.kind", [](C& c, const std::string& v, const std::string&) { c.model = ml::ParseModelKind(v); }},
      {"model.hidden", Number<std::size_t>([](C& c) -> auto& { return c.hidden; })},
      {"model.init_scale", Number<double>([](C& c) -> auto& { return c.init_scale; })},
      {"model.batch_size", Number<std::size_t>([](C& c) -> auto& { return c.batch_size; })},

      {"modes.large_eta", Number<double>([](C& c) -> auto& { return c.large_eta; })},
      {"modes.large_alpha", Number<int>([](C& c) -> auto& { return c.large_alpha; })},
      {"modes.small_eta", Number<double>([](C& c) -> auto& { return c.small_eta; })},
      {"modes.small_alpha", Number<int>([](C& c) -> auto& { return c.small_alpha; })},
      {"modes.ddpg_eta_alpha", Number<int>([](C& c) -> auto& { return c.ddpg_eta_alpha; })},
      {"modes.ddpg_alpha_eta", Number<double>([](C& c) -> auto& { return c.ddpg_alpha_eta; })},

      {"ddpg.hidden", Number<std::size_t>([](C& c) -> auto& { return c.ddpg.hidden; })},
      {"ddpg.gamma", Number<double>([](C& c) -> auto& { return c.ddpg.gamma; })},
      {"ddpg.beta", Number<double>([](C& c) -> auto& { return c.ddpg.beta; })},
      {"ddpg.actor_lr", Number<double>([](C& c) -> auto& { return c.ddpg.actor_lr; })},
      {"ddpg.critic_lr", Number<double>([](C& c) -> auto& { return c.ddpg.critic_lr; })},
      {"ddpg.lagrangian_lr", Number<double>([](C& c) -> auto& { return c.ddpg.lagrangian_lr; })},
      {"ddpg.batch_size", Number<std::size_t>([](C& c) -> auto& { return c.ddpg.batch_size; })},
      {"ddpg.buffer_capacity", Number<std::size_t>([](C& c) -> auto& { return c.ddpg.buffer_capacity; })},
      {"ddpg.noise_start", Number<double>([](C& c) -> auto& { return c.ddpg.noise_start; })},
      {"ddpg.noise_end", Number<double>([](C& c) -> auto& { return c.ddpg.noise_end; })},
      {"ddpg.noise_decay_rounds", Number<std::size_t>([](C& c) -> auto& { return c.ddpg.noise_decay_rounds; })},
      {"ddpg.updates_per_round", Number<std::size_t>([](C& c) -> auto& { return c.ddpg.updates_per_round; })},
      {"ddpg.final_layer_init", Number<double>([](C& c) -> auto& { return c.ddpg.final_layer_init; })},
      {"ddpg.eta_min", Number<double>([](C& c) -> auto& { return c.ddpg.bounds.eta_min; })},
      {"ddpg.eta_max", Number<double>([](C& c) -> auto& { return c.ddpg.bounds.eta_max; })},
      {"ddpg.alpha_max", Number<int>([](C& c) -> auto& { return c.ddpg.bounds.alpha_max; })},
      {"ddpg.xi1", Number<double>([](C& c) -> auto& { return c.ddpg.xi.xi1; })},
      {"ddpg.xi2", Number<double>([](C& c) -> auto& { return c.ddpg.xi.xi2; })},
      {"ddpg.xi3", Number<double>([](C& c) -> auto& { return c.ddpg.xi.xi3; })},

      {"resource.gpu_tiers",
       [](C& c, const std::string& v, const std::string& k) { c.gpu_tiers = ParseList(v, k); }},
      {"resource.budget_law",
       [](C& c, const std::string& v, const std::string&) { c.budget_law = resource::ParseBudgetLaw(v); }},
      {"resource.budget_mean", Number<double>([](C& c) -> auto& { return c.budget_mean; })},
      {"resource.budget_spread", Number<double>([](C& c) -> auto& { return c.budget_spread; })},
      {"resource.epoch_cost", Number<double>([](C& c) -> auto& { return c.epoch_cost; })},
      {"resource.comm_cost", Number<double>([](C& c) -> auto& { return c.comm_cost; })},
      {"resource.cost_jitter", Number<double>([](C& c) -> auto& { return c.cost_jitter; })},

      {"crypto.key_bits", Number<unsigned>([](C& c) -> auto& { return c.key_bits; })},
      {"crypto.scale_bits", Number<unsigned>([](C& c) -> auto& { return c.scale_bits; })},
      {"crypto.weight_bound", Number<double>([](C& c) -> auto& { return c.weight_bound; })},
      {"crypto.system_entropy",
       [](C& c, const std::string& v, const std::string& k) { c.system_entropy = ParseBool(v, k); }},

      {"transport.kind",
       [](C& c, const std::string& v, const std::string& k) {
         if (v == "inproc") {
           c.transport = TransportKind::kInProcess;
         } else if (v == "tcp") {
           c.transport = TransportKind::kTcp;
         } else {
           throw ConfigError("unknown " + k + " '" + v + "' (inproc, tcp)");
         }
       }},
      {"transport.host", [](C& c, const std::string& v, const std::string&) { c.host = v; }},
      {"transport.port", Number<std::uint16_t>([](C& c) -> auto& { return c.port; })},
      {"transport.timeout_ms", Number<std::uint32_t>([](C& c) -> auto& { return c.timeout_ms; })},

      {"output.wall_time",
       [](C& c, const std::string& v, const std::string& k) { c.wall_time = ParseBool(v, k); }},
  };
  return table;
}

}  // namespace

std::string ToString(Mode mode) {
  switch (mode) {
    case Mode::kDapfl:
      return "dapfl";
    case Mode::kLarge:
      return "large";
    case Mode::kSmall:
      return "small";
    case Mode::kDdpgEta:
      return "ddpg-eta";
    case Mode::kDdpgAlpha:
      return "ddpg-alpha";
  }
  return "unknown";
}

Mode ParseMode(const std::string& name) {
  for (Mode m : {Mode::kDapfl, Mode::kLarge, Mode::kSmall, Mode::kDdpgEta, Mode::kDdpgAlpha}) {
    if (ToString(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + name +
                    "' (dapfl, large, small, ddpg-eta, ddpg-alpha)");
}

void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(rounds >= 1, "experiment.rounds must be at least 1");
  require(clients >= 1, "experiment.clients must be at least 1");
  if (source == DataSource::kIdx) {
    require(!train_images.empty() && !train_labels.empty() && !test_images.empty() &&
                !test_labels.empty(),
            "data.source = idx needs train/test image and label paths");
  } else {
    require(synth.classes >= 2 && synth.dim >= 1 && synth.per_class >= 1 &&
                synth_test_per_class >= 1,
            "synthetic data needs >= 2 classes, dim >= 1 and rows per class >= 1");
    require(synth.separation > 0.0 && synth.condition >= 1.0,
            "data.synth_separation must be > 0 and data.synth_condition >= 1");
  }
  require(partition_mean >= 1.0 && partition_std >= 0.0,
          "data.partition_mean must be >= 1 and data.partition_std >= 0");
  require(model != ml::ModelKind::kMlp || hidden >= 1, "model.hidden must be >= 1");
  require(init_scale >= 0.0, "model.init_scale must be >= 0");
  require(batch_size >= 1, "model.batch_size must be >= 1");
  require(large_eta > 0.0 && small_eta > 0.0 && ddpg_alpha_eta > 0.0,
          "fixed learning rates must be positive");
  require(large_alpha >= 1 && small_alpha >= 1 && ddpg_eta_alpha >= 1,
          "fixed epoch counts must be at least 1");
  ddpg.Validate();
  require(!gpu_tiers.empty(), "resource.gpu_tiers must list at least one tier");
  for (std::size_t i = 0; i < clients; ++i) resource::Validate(ProfileFor(i));
  require(key_bits >= paillier::kMinTestBits,
          "crypto.key_bits must be at least " + std::to_string(paillier::kMinTestBits));
  require(key_bits <= 2056, "crypto.key_bits above 2056 breaks the block framing");
  require(scale_bits >= 1 && scale_bits <= 62, "crypto.scale_bits must lie in [1, 62]");
  require(weight_bound > 0.0, "crypto.weight_bound must be positive");
  require(timeout_ms >= 1, "transport.timeout_ms must be positive");
}

ml::ModelShape ExperimentConfig::Shape(std::size_t inputs, std::size_t classes) const {
  return {model, inputs, classes, model == ml::ModelKind::kMlp ? hidden : 0};
}

protocol::ClientOptions ExperimentConfig::ClientOptionsFor() const {
  protocol::ClientOptions o;
  o.ddpg = ddpg;
  o.batch_size = batch_size;
  o.scale_bits = scale_bits;
  o.system_entropy = system_entropy;
  switch (mode) {
    case Mode::kDapfl:
      o.mode = protocol::TuningMode::kAdaptive;
      break;
    case Mode::kLarge:
      o.mode = protocol::TuningMode::kFixed;
      o.fixed_eta = large_eta;
      o.fixed_alpha = large_alpha;
      break;
    case Mode::kSmall:
      o.mode = protocol::TuningMode::kFixed;
      o.fixed_eta = small_eta;
      o.fixed_alpha = small_alpha;
      break;
    case Mode::kDdpgEta:
      o.mode = protocol::TuningMode::kAdaptiveEta;
      o.fixed_alpha = ddpg_eta_alpha;
      break;
    case Mode::kDdpgAlpha:
      o.mode = protocol::TuningMode::kAdaptiveAlpha;
      o.fixed_eta = ddpg_alpha_eta;
      break;
  }
  return o;
}

resource::ResourceProfile ExperimentConfig::ProfileFor(std::size_t client) const {
  resource::ResourceProfile p;
  p.gpu_tier = gpu_tiers[client % gpu_tiers.size()];
  p.law = budget_law;
  p.budget_mean = budget_mean;
  p.budget_spread = budget_spread;
  p.epoch_cost = epoch_cost;
  p.comm_cost = comm_cost;
  p.cost_jitter = cost_jitter;
  p.seed = MixSeed(seed, 1000 + client);
  return p;
}

ExperimentConfig ParseConfig(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig cfg;
  const auto& setters = Setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("key '" + section + "' outside any section");
    }
    for (const auto& [key, value] : body) {
      std::string full = section + "." + key;
      auto it = setters.find(full);
      if (it == setters.end()) throw ConfigError("unknown config key '" + full + "'");
      std::string text = value.get_value<std::string>();
      try {
        it->second(cfg, text, full);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(full + ": " + e.what());
      }
    }
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  return ParseConfig(f);
}

}  // namespace dapfl::harness
