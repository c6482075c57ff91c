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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dapfl/config.h"
#include "dapfl/datasets.h"
#include "dapfl/errors.h"
#include "dapfl/experiment.h"

namespace dapfl::harness {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dapfl_harness_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void WriteBytes(const fs::path& p, const Bytes& b) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

Bytes IdxImages(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                std::uint32_t magic = kIdxImageMagic) {
  ByteWriter w;
  w.U32(magic);
  w.U32(count);
  w.U32(rows);
  w.U32(cols);
  for (std::uint32_t i = 0; i < count * rows * cols; ++i) w.U8(static_cast<std::uint8_t>(i % 256));
  return w.Take();
}

Bytes IdxLabels(const std::vector<std::uint8_t>& labels) {
  ByteWriter w;
  w.U32(kIdxLabelMagic);
  w.U32(static_cast<std::uint32_t>(labels.size()));
  w.Raw(labels);
  return w.Take();
}

TEST(LoadIdx, TwoImageFixture) {
  TempDir dir;
  WriteBytes(dir / "img", IdxImages(2, 28, 28));
  WriteBytes(dir / "lab", IdxLabels({7, 2}));
  ml::Dataset d = LoadIdx(dir / "img", dir / "lab");
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.dim, 784u);
  EXPECT_EQ(d.classes, 10u);
  EXPECT_EQ(d.labels, (std::vector<int>{7, 2}));
  EXPECT_DOUBLE_EQ(d.features[0], 0.0);
  EXPECT_DOUBLE_EQ(d.features[255], 1.0);
  EXPECT_DOUBLE_EQ(d.features[784], (784 % 256) / 255.0);
  EXPECT_EQ(LoadIdx(dir / "img", dir / "lab", 1).size(), 1u);
}

TEST(LoadIdx, RejectsMalformedFiles) {
  TempDir dir;
  WriteBytes(dir / "img", IdxImages(2, 4, 4));
  WriteBytes(dir / "bad_magic", IdxImages(2, 4, 4, 0x00000801));
  WriteBytes(dir / "lab", IdxLabels({1, 2}));
  WriteBytes(dir / "lab3", IdxLabels({1, 2, 3}));
  WriteBytes(dir / "lab_range", IdxLabels({1, 10}));
  Bytes cut = IdxImages(2, 4, 4);
  cut.resize(cut.size() - 1);
  WriteBytes(dir / "img_cut", cut);
  EXPECT_THROW(LoadIdx(dir / "bad_magic", dir / "lab"), FormatError);
  EXPECT_THROW(LoadIdx(dir / "img", dir / "img"), FormatError);
  EXPECT_THROW(LoadIdx(dir / "img", dir / "lab3"), DataError);
  EXPECT_THROW(LoadIdx(dir / "img", dir / "lab_range"), DataError);
  EXPECT_THROW(LoadIdx(dir / "img_cut", dir / "lab"), TruncatedError);
  EXPECT_THROW(LoadIdx(dir / "missing", dir / "lab"), DataError);
}

TEST(SynthDataset, DeterministicWithExactClassCounts) {
  SynthSpec spec{4, 6, 25, 1.0, 3.0, 42};
  ml::Dataset a = SynthDataset(spec), b = SynthDataset(spec);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(SynthDataset(spec, 1).features, a.features);
  std::vector<int> counts(4, 0);
  for (int l : a.labels) ++counts[l];
  EXPECT_EQ(counts, (std::vector<int>{25, 25, 25, 25}));
}

TEST(SynthDataset, LogisticModelSeparatesWellSeparatedBlobs) {
  SynthSpec spec{10, 20, 100, 3.0, 1.0, 5};
  ml::Dataset train = SynthDataset(spec, 0), test = SynthDataset(spec, 1);
  std::mt19937_64 rng(5);
  ml::ModelShape shape{ml::ModelKind::kLogistic, 20, 10, 0};
  ml::Model m = ml::TrainLocal(ml::MakeModel(shape, 0.01, rng), train, 0.05, 20, rng);
  EXPECT_GE(ml::Evaluate(m, test).accuracy, 0.95);
}

TEST(Partition, EqualPartsWhenStdIsZero) {
  ml::Dataset d = SynthDataset({3, 2, 40, 1.0, 1.0, 1});
  auto parts = Partition(d, {4, 25.0, 0.0, 9});
  ASSERT_EQ(parts.size(), 4u);
  for (const auto& p : parts) EXPECT_EQ(p.size(), 25u);
}

TEST(Partition, DisjointBoundedAndSeeded) {
  ml::Dataset d = SynthDataset({3, 2, 100, 1.0, 1.0, 2});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto parts = Partition(d, {5, 80.0, 50.0, seed});
    std::size_t total = 0;
    std::set<std::pair<double, double>> rows;
    for (const auto& p : parts) {
      ASSERT_GE(p.size(), 1u);
      total += p.size();
      for (std::size_t i = 0; i < p.size(); ++i) rows.insert({p.Row(i)[0], p.Row(i)[1]});
    }
    EXPECT_LE(total, d.size());
    EXPECT_EQ(rows.size(), total);
    auto again = Partition(d, {5, 80.0, 50.0, seed});
    for (std::size_t k = 0; k < parts.size(); ++k) {
      EXPECT_EQ(parts[k].features, again[k].features);
    }
  }
  EXPECT_THROW(Partition(d, {400, 1.0, 0.0, 0}), DataError);
}

TEST(Config, ParsesSectionsAndRejectsUnknownKeys) {
  std::istringstream ok(
      "[experiment]\nmode = ddpg-eta\nrounds = 7\nseed = 99\n"
      "[ddpg]\nhidden = 16\nalpha_max = 12\n"
      "[resource]\ngpu_tiers = 1, 0.5\n"
      "[crypto]\nkey_bits = 128\nsystem_entropy = false\n");
  ExperimentConfig cfg = ParseConfig(ok);
  EXPECT_EQ(cfg.mode, Mode::kDdpgEta);
  EXPECT_EQ(cfg.rounds, 7u);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.ddpg.hidden, 16u);
  EXPECT_EQ(cfg.ddpg.bounds.alpha_max, 12);
  EXPECT_EQ(cfg.gpu_tiers, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(cfg.key_bits, 128u);
  EXPECT_EQ(cfg.ProfileFor(3).gpu_tier, 0.5);

  std::istringstream unknown("[experiment]\nrounds = 3\ncolour = blue\n");
  EXPECT_THROW(ParseConfig(unknown), ConfigError);
  std::istringstream bad_value("[experiment]\nrounds = three\n");
  EXPECT_THROW(ParseConfig(bad_value), ConfigError);
  std::istringstream bad_mode("[experiment]\nmode = medium\n");
  EXPECT_THROW(ParseConfig(bad_mode), ConfigError);
  std::istringstream bad_law("[resource]\nbudget_law = cauchy\n");
  EXPECT_THROW(ParseConfig(bad_law), ConfigError);
  std::istringstream invalid("[ddpg]\ngamma = 1.5\n");
  EXPECT_THROW(ParseConfig(invalid), ConfigError);
  std::istringstream small_key("[crypto]\nkey_bits = 32\n");
  EXPECT_THROW(ParseConfig(small_key), ConfigError);
  EXPECT_NO_THROW(ExperimentConfig{}.Validate());
}

TEST(Config, ShippedConfigsParse) {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(DAPFL_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW(LoadConfig(entry.path()));
    ++seen;
  }
  EXPECT_GE(seen, 3u);
  ExperimentConfig desk = LoadConfig(fs::path(DAPFL_CONFIG_DIR) / "desk_synthetic.ini");
  EXPECT_EQ(desk.model, ml::ModelKind::kLogistic);
  EXPECT_EQ(desk.clients, 5u);
  EXPECT_EQ(desk.rounds, 60u);
  EXPECT_EQ(desk.key_bits, 1024u);
}

ExperimentConfig TinyConfig(Mode mode) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.rounds = 3;
  cfg.clients = 2;
  cfg.seed = 4;
  cfg.synth = {4, 5, 30, 1.5, 2.0, 0};
  cfg.synth_test_per_class = 20;
  cfg.partition_mean = 40;
  cfg.partition_std = 10;
  cfg.key_bits = 128;
  cfg.ddpg.hidden = 8;
  cfg.ddpg.batch_size = 2;
  return cfg;
}

std::string Export(const std::vector<RoundMetrics>& r, MetricsFormat f) {
  std::ostringstream out;
  ExportMetrics(r, out, f);
  return out.str();
}

TEST(RunExperiment, SmallModeStructure) {
  ExperimentConfig cfg = TinyConfig(Mode::kSmall);
  auto records = RunExperiment(cfg);
  ASSERT_EQ(records.size(), 3u);
  for (std::uint32_t t = 0; t < 3; ++t) {
    EXPECT_EQ(records[t].round, t);
    EXPECT_EQ(records[t].legitimate, 2u);
    EXPECT_FALSE(records[t].skipped);
    for (const auto& c : records[t].clients) {
      EXPECT_TRUE(c.completed);
      EXPECT_TRUE(c.included);
      EXPECT_EQ(c.eta, cfg.small_eta);
      EXPECT_EQ(c.alpha, cfg.small_alpha);
      EXPECT_EQ(c.lambda, 0.0);
    }
  }
}

TEST(RunExperiment, FixedComponentHeldInSingleParameterModes) {
  ExperimentConfig cfg = TinyConfig(Mode::kDdpgEta);
  for (const auto& r : RunExperiment(cfg)) {
    for (const auto& c : r.clients) EXPECT_EQ(c.alpha, cfg.ddpg_eta_alpha);
  }
  cfg = TinyConfig(Mode::kDdpgAlpha);
  for (const auto& r : RunExperiment(cfg)) {
    for (const auto& c : r.clients) EXPECT_EQ(c.eta, cfg.ddpg_alpha_eta);
  }
  cfg = TinyConfig(Mode::kLarge);
  for (const auto& r : RunExperiment(cfg)) {
    for (const auto& c : r.clients) {
      EXPECT_EQ(c.eta, cfg.large_eta);
      EXPECT_EQ(c.alpha, cfg.large_alpha);
    }
  }
}

TEST(RunExperiment, IdenticalSeedsGiveIdenticalMetrics) {
  ExperimentConfig cfg = TinyConfig(Mode::kDapfl);
  auto a = RunExperiment(cfg), b = RunExperiment(cfg);
  EXPECT_EQ(Export(a, MetricsFormat::kCsv), Export(b, MetricsFormat::kCsv));
  EXPECT_EQ(Export(a, MetricsFormat::kJsonl), Export(b, MetricsFormat::kJsonl));
  cfg.seed = 5;
  EXPECT_NE(Export(RunExperiment(cfg), MetricsFormat::kCsv), Export(a, MetricsFormat::kCsv));
}

TEST(RunExperiment, TcpTransportMatchesInProcess) {
  ExperimentConfig cfg = TinyConfig(Mode::kDapfl);
  std::string inproc = Export(RunExperiment(cfg), MetricsFormat::kCsv);
  cfg.transport = TransportKind::kTcp;
  EXPECT_EQ(Export(RunExperiment(cfg), MetricsFormat::kCsv), inproc);
}

TEST(ExportMetrics, SchemaLineCountsAndStableReexport) {
  auto records = RunExperiment(TinyConfig(Mode::kDapfl));
  std::string csv = Export(records, MetricsFormat::kCsv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), MetricsCsvHeader());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
  std::string jsonl = Export(records, MetricsFormat::kJsonl);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 3);
  EXPECT_EQ(jsonl.rfind("{\"round\":0,\"global_loss\":", 0), 0u);

  TempDir dir;
  ExportMetrics(records, dir / "m.csv", FormatForPath(dir / "m.csv"));
  ExportMetrics(records, dir / "m2.csv", FormatForPath(dir / "m2.csv"));
  std::ifstream f1(dir / "m.csv"), f2(dir / "m2.csv");
  std::string s1((std::istreambuf_iterator<char>(f1)), {}), s2((std::istreambuf_iterator<char>(f2)), {});
  EXPECT_EQ(s1, csv);
  EXPECT_EQ(s1, s2);
  EXPECT_THROW(FormatForPath("metrics.txt"), ConfigError);
}

TEST(ExportMetrics, NineSignificantDigits) {
  RoundMetrics r;
  r.global = {1.0 / 3.0, 0.5, 2.0 / 3.0};
  r.clients.push_back({0, true, true, 1e-3, 4, false, 0.0, -0.125, 0.0, false});
  std::string csv = Export({r}, MetricsFormat::kCsv);
  EXPECT_NE(csv.find("0,0,0.333333333,0.5,0.666666667,0,0,1,1,0.001,4,,-0.125,0,0"),
            std::string::npos)
      << csv;
}

}  // namespace
}  // namespace dapfl::harness
