// Copyright 2026 The fsbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#if defined(FSBENCH_HAVE_CLI)

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fsbench/cli/cli.hpp"
#include "support.hpp"

namespace fsbench {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(config()) << "synthetic:\n"
                               "  n_fields: 4\n"
                               "  n_informative: 2\n"
                               "  n_samples: 2000\n"
                               "  vocab_sizes: [6]\n"
                               "backbone:\n"
                               "  embedding_dim: 4\n"
                               "  mlp: [8]\n"
                               "train:\n"
                               "  epochs: 1\n"
                               "  batch_size: 256\n"
                               "protocol:\n"
                               "  seeds: [0]\n"
                               "  k_grid: [1, 2]\n"
                               "selector:\n"
                               "  gbdt:\n"
                               "    n_trees: 5\n";
  }

  fs::path config() const { return dir.path() / "exp.yaml"; }
  fs::path results() const { return dir.path() / "results"; }

  int call(std::vector<std::string> args) {
    out.str({});
    err.str({});
    return cli::run(args, out, err);
  }
  int call_with_config(std::vector<std::string> args) {
    args.insert(args.end(), {"--config", config().string(), "--out", results().string()});
    return call(std::move(args));
  }

  TempDir dir{"cli"};
  std::ostringstream out, err;
};

TEST_F(CliTest, UnknownConfigKeyIsAConfigError) {
  EXPECT_EQ(call_with_config({"run", "--stage", "baseline", "--set", "train.epoch=3"}), 2);
  EXPECT_NE(err.str().find("train.epoch"), std::string::npos) << err.str();
}

TEST_F(CliTest, InvalidSyntheticSpecIsAConfigError) {
  EXPECT_EQ(call_with_config({"synth", "--set", "synthetic.n_informative=9"}), 2);
}

TEST_F(CliTest, ProhibitedCombinationExitsThree) {
  EXPECT_EQ(call_with_config({"run", "--stage", "retrain", "--selector", "adafs", "--k", "1"}), 3);
  EXPECT_EQ(call_with_config({"sweep", "--selector", "gbdt", "--selection", "soft"}), 3);
}

TEST_F(CliTest, RetrainWithoutSearchIsMissingInput) {
  EXPECT_EQ(call_with_config({"run", "--stage", "retrain", "--selector", "gbdt", "--k", "1"}), 4);
  EXPECT_EQ(call_with_config({"run", "--stage", "search", "--selector", "gbdt"}), 0) << err.str();
  EXPECT_EQ(call_with_config({"run", "--stage", "retrain", "--selector", "gbdt", "--k", "1"}), 0) << err.str();
}

TEST_F(CliTest, EmptyResultsReportExitsFour) {
  fs::create_directories(results());
  EXPECT_EQ(call({"report", results().string()}), 4);
}

TEST_F(CliTest, SynthRerunIsByteIdentical) {
  ASSERT_EQ(call_with_config({"synth"}), 0) << err.str();
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(results())) files.push_back(e.path());
  ASSERT_EQ(files.size(), 2u);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(f));
  ASSERT_EQ(call_with_config({"synth"}), 0);
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(slurp(files[i]), first[i]) << files[i];
}

TEST_F(CliTest, SweepThenReportIsIdempotent) {
  ASSERT_EQ(call_with_config({"sweep", "--selector", "gbdt"}), 0) << err.str();
  EXPECT_NE(out.str().find("aukc gbdt"), std::string::npos) << out.str();
  ASSERT_EQ(call({"report", results().string()}), 0) << err.str();
  const auto aukc = slurp(results() / "report" / "aukc.csv");
  const auto summary = slurp(results() / "report" / "runs_summary.csv");
  ASSERT_EQ(call({"report", results().string()}), 0);
  EXPECT_EQ(slurp(results() / "report" / "aukc.csv"), aukc);
  EXPECT_EQ(slurp(results() / "report" / "runs_summary.csv"), summary);
  EXPECT_NE(aukc.find("gbdt"), std::string::npos);
}

TEST_F(CliTest, BadArgumentsExitTwo) {
  EXPECT_EQ(call({"run"}), 2);
  EXPECT_EQ(call({"frobnicate"}), 2);
  EXPECT_EQ(call({"--help"}), 0);
}

}  // namespace
}  // namespace fsbench

#endif  // FSBENCH_HAVE_CLI
