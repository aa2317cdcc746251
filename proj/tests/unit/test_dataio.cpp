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

#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "fsbench/dataio.hpp"
#include "fsbench/error.hpp"
#include "fsbench/io.hpp"
#include "fsbench/ranking.hpp"
#include "support.hpp"

namespace fsbench {
namespace {

TEST(Splits, RatioArithmetic) {
  const auto c = split_counts(10, SplitRatio{7, 2, 1});
  EXPECT_EQ(c.train, 7u);
  EXPECT_EQ(c.val, 2u);
  EXPECT_EQ(c.test, 1u);
  const auto a = split_counts(8, SplitRatio::parse("50:25:25"));
  EXPECT_EQ(a.train, 4u);
  EXPECT_EQ(a.val, 2u);
  EXPECT_EQ(a.test, 2u);
  EXPECT_EQ(assign_splits(100, SplitRatio{}, 3), assign_splits(100, SplitRatio{}, 3));
}

TEST(Vocab, FrequencyOrderThresholdAndCap) {
  const std::vector<std::string> col{"a", "a", "b"};
  const Vocabulary v = build_vocab(col, 1, 100);
  EXPECT_EQ(v.lookup("a"), 1u);
  EXPECT_EQ(v.lookup("b"), 2u);
  EXPECT_EQ(v.lookup("zzz"), 0u);
  const Vocabulary v2 = build_vocab(col, 2, 100);
  EXPECT_EQ(v2.lookup("a"), 1u);
  EXPECT_EQ(v2.lookup("b"), 0u);
  const std::vector<std::string> five{"e", "d", "c", "b", "a"};
  const Vocabulary v3 = build_vocab(five, 1, 3);
  EXPECT_EQ(v3.vocab_size(), 4u);
  EXPECT_EQ(v3.lookup("a"), 1u);  // ties broken lexicographically
  EXPECT_EQ(v3.lookup("e"), 0u);
  EXPECT_EQ(build_vocab(std::vector<std::string>{}, 1, 3).vocab_size(), 1u);
}

class CsvFixture : public ::testing::Test {
 protected:
  testing::TempDir dir{"csv"};
};

TEST_F(CsvFixture, LoadsTenRowsWithSplitsAndTrainOnlyVocab) {
  std::string text = "label,site,app\n";
  for (int r = 0; r < 10; ++r) text += fmt::format("{},s{},a{}\n", r % 2, r % 3, r);
  write_file_atomic(dir.path() / "d.csv", text);
  IngestConfig cfg;
  cfg.seed = 1;
  const Dataset d = load_csv(dir.path() / "d.csv", cfg);
  EXPECT_EQ(d.rows(), 10u);
  EXPECT_EQ(d.rows_of(Split::kTrain).size(), 7u);
  EXPECT_EQ(d.rows_of(Split::kVal).size(), 2u);
  EXPECT_EQ(d.rows_of(Split::kTest).size(), 1u);
  // Every app value is unique, so non-train rows can only hit OOV.
  for (auto r : d.rows_of(Split::kTest)) EXPECT_EQ(d.column(1)[r], 0u);
  EXPECT_EQ(d.schema()[1].vocab_size, 8u);
}

TEST_F(CsvFixture, MissingColumnIsNamed) {
  write_file_atomic(dir.path() / "d.csv", "label,a\n1,x\n");
  IngestConfig cfg;
  cfg.field_columns = {"a", "nope"};
  try {
    load_csv(dir.path() / "d.csv", cfg);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST_F(CsvFixture, BadLabelReportsRow) {
  write_file_atomic(dir.path() / "d.csv", "label,a\n1,x\n7,y\n");
  try {
    load_csv(dir.path() / "d.csv", IngestConfig{});
    FAIL();
  } catch (const LabelError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}

TEST(LabelRule, RatingsAboveThreeArePositive) {
  EXPECT_EQ(apply_label_rule("4", LabelRule::kGreaterThan3), 1);
  EXPECT_EQ(apply_label_rule("3", LabelRule::kGreaterThan3), 0);
  EXPECT_EQ(dataset_preset("movielens").label_rule, LabelRule::kGreaterThan3);
}

TEST(Synthetic, DeterministicAndValidated) {
  SyntheticSpec spec;
  spec.n_samples = 2000;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.truth_order, b.truth_order);
  for (std::size_t f = 0; f < a.dataset.num_fields(); ++f) {
    EXPECT_TRUE(std::equal(a.dataset.column(f).begin(), a.dataset.column(f).end(), b.dataset.column(f).begin()));
  }
  spec.n_informative = 13;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(Synthetic, CsvRoundTripIsByteStable) {
  testing::TempDir dir("synth");
  SyntheticSpec spec;
  spec.n_samples = 500;
  const auto s = generate_synthetic(spec);
  write_csv(s.dataset, dir.path() / "a.csv");
  write_csv(generate_synthetic(spec).dataset, dir.path() / "b.csv");
  EXPECT_EQ(read_file(dir.path() / "a.csv"), read_file(dir.path() / "b.csv"));
  write_truth_sidecar(s.truth_order, dir.path() / "t.truth");
  EXPECT_EQ(read_truth_sidecar(dir.path() / "t.truth"), s.truth_order);
}

TEST(ValueCounts, TrainOnly) {
  Schema schema{{"f", 3}};
  std::vector<std::vector<std::uint32_t>> cols{{1, 1, 2, 2}};
  std::vector<std::uint8_t> y{0, 1, 0, 1};
  std::vector<Split> splits{Split::kTrain, Split::kTrain, Split::kTrain, Split::kTest};
  const Dataset d(schema, cols, y, splits);
  const auto counts = field_value_counts(d, "f");
  EXPECT_EQ(counts.at(1), 2u);
  EXPECT_EQ(counts.at(2), 1u);
  EXPECT_THROW(field_value_counts(d, "g"), Error);

  SyntheticSpec spec;
  spec.n_samples = 1000;
  const auto s = generate_synthetic(spec);
  std::size_t total = 0;
  for (const auto& [v, n] : field_value_counts(s.dataset, "f00")) total += n;
  EXPECT_EQ(total, 700u);
}

TEST(Ranking, SerializationRoundTripAndTieOrder) {
  const Schema s{{"a", 2}, {"b", 2}, {"c", 2}};
  const std::vector<double> scores{1.0, 3.0, 1.0};
  const auto r = ImportanceRanking::from_scores(s, scores, "demo", 4);
  EXPECT_EQ(r.top(3), (std::vector<std::string>{"b", "a", "c"}));
  const auto back = ImportanceRanking::parse(r.to_text());
  EXPECT_EQ(back.to_text(), r.to_text());
  EXPECT_EQ(back.method(), "demo");
  EXPECT_EQ(back.seed(), 4u);
  EXPECT_THROW(r.top(4), BoundsError);
  EXPECT_THROW(ImportanceRanking::parse("a\t1\nb\t2\n"), ConfigError);
  const std::vector<double> bad{1.0, std::nan(""), 0.0};
  EXPECT_THROW(ImportanceRanking::from_scores(s, bad, "x", 0), NumericError);
}

}  // namespace
}  // namespace fsbench
