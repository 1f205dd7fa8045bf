#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cmpm/oner.hpp"
#include "fixtures.hpp"

using namespace cmpm;
using cmpm::testing::numeric_schema;
using cmpm::testing::protocol_dataset;
using cmpm::testing::random_dataset;

namespace {

// Error count of the best single-bucket-per-value rule, computed directly.
std::size_t brute_force_errors(std::span<const int> buckets, std::span<const Label> labels) {
  std::size_t errors = 0;
  const int hi = *std::max_element(buckets.begin(), buckets.end());
  for (int b = 0; b <= hi; ++b) {
    std::size_t normal = 0, attack = 0;
    for (std::size_t i = 0; i < buckets.size(); ++i)
      if (buckets[i] == b) (labels[i] == Label::attack ? attack : normal) += 1;
    errors += std::min(normal, attack);
  }
  return errors;
}

}  // namespace

TEST(Discretize, MidpointSplit) {
  EXPECT_EQ(discretize(std::vector<double>{0.0, 0.49, 0.51, 1.0}, 2), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Discretize, SingleBin) {
  EXPECT_EQ(discretize(std::vector<double>{0.0, 0.3, 1.0}, 1), (std::vector<int>{0, 0, 0}));
}

TEST(Discretize, ZeroBinsRejected) { EXPECT_THROW(discretize(std::vector<double>{0.5}, 0), UsageError); }

TEST(Discretize, UniformCountsWithinThreeSigma) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = u(rng);
  std::vector<int> counts(10, 0);
  for (int b : discretize(v, 10)) counts[b] += 1;
  const double sigma = std::sqrt(1000 * 0.1 * 0.9);
  for (int c : counts) EXPECT_LE(std::abs(c - 100.0), 3 * sigma);
}

TEST(BuildRule, ProtocolIllustration) {
  const auto d = protocol_dataset();
  const auto rule = rule_for_attribute(d, 0, kDefaultOneRBins);
  // encoded categories: TCP=0, UDP=1, ICMP=2
  EXPECT_EQ(rule.category_values, (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(rule.predictions.at(0), Label::normal);
  EXPECT_EQ(rule.predictions.at(1), Label::attack);
  EXPECT_EQ(rule.predictions.at(2), Label::normal);
  EXPECT_EQ(rule.errors, 2u);
  EXPECT_EQ(rule.total, 8u);
  EXPECT_EQ(rule.total_error(), 0.25);
}

TEST(BuildRule, PerfectPredictorHasZeroError) {
  const std::vector<Label> labels{Label::normal, Label::attack, Label::attack, Label::normal};
  const std::vector<int> buckets{0, 1, 1, 0};
  EXPECT_EQ(build_rule(buckets, labels).errors, 0u);
}

TEST(BuildRule, TiePredictsNormal) {
  const std::vector<int> buckets(6, 3);
  const std::vector<Label> labels{Label::attack, Label::normal, Label::attack, Label::normal, Label::attack, Label::normal};
  const auto rule = build_rule(buckets, labels);
  EXPECT_EQ(rule.predictions.at(3), Label::normal);
  EXPECT_EQ(rule.errors, 3u);
}

TEST(BuildRule, LengthMismatchRejected) {
  EXPECT_THROW(build_rule(std::vector<int>{0, 1}, std::vector<Label>{Label::normal}), UsageError);
}

TEST(BuildRule, MatchesBruteForceOnRandomColumns) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> buckets(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      buckets[i] = static_cast<int>(rng() % 5);
      labels[i] = (rng() % 3 == 0) ? Label::attack : Label::normal;
    }
    const auto rule = build_rule(buckets, labels);
    EXPECT_EQ(rule.errors, brute_force_errors(buckets, labels));
    // counts partition the rows, and every observed bucket predicts something
    std::size_t sum = 0;
    for (const auto& [b, c] : rule.counts) {
      sum += c.normal + c.attack;
      EXPECT_TRUE(rule.predictions.contains(b));
    }
    EXPECT_EQ(sum, n);
    EXPECT_GE(rule.total_error(), 0.0);
    EXPECT_LE(rule.total_error(), 0.5);
  }
}

TEST(RanksBefore, ExactFractionThenIndex) {
  AttributeRule a, b;
  a.errors = 1, a.total = 3, a.attribute_index = 4;
  b.errors = 2, b.total = 6, b.attribute_index = 1;  // equal error, smaller index
  EXPECT_TRUE(b.ranks_before(a));
  EXPECT_FALSE(a.ranks_before(b));
  b.errors = 3;
  EXPECT_TRUE(a.ranks_before(b));
}

TEST(SelectAttributes, LabelCopyRanksFirst) {
  auto d = random_dataset(200, 6, 3);
  for (std::size_t i = 0; i < d.size(); ++i) d.values(i, 4) = d.labels[i] == Label::attack ? 1.0 : 0.0;
  const auto model = select_attributes(d, 3);
  ASSERT_EQ(model.selected.size(), 3u);
  EXPECT_EQ(model.selected.front(), 4u);
  EXPECT_EQ(model.rules[4].errors, 0u);
}

TEST(SelectAttributes, MatchesExhaustiveErrorOracle) {
  const auto d = random_dataset(300, 9, 21);
  const auto model = select_attributes(d, 9);
  std::vector<std::pair<std::size_t, std::size_t>> oracle;  // (errors, index)
  for (std::size_t j = 0; j < d.dims(); ++j) {
    std::vector<double> col(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) col[i] = d.values(i, j);
    oracle.emplace_back(brute_force_errors(discretize(col, kDefaultOneRBins), d.labels), j);
  }
  std::sort(oracle.begin(), oracle.end());
  for (std::size_t r = 0; r < oracle.size(); ++r) EXPECT_EQ(model.selected[r], oracle[r].second);
}

TEST(SelectAttributes, TwelveOfThirtyFour) {
  const auto d = random_dataset(120, 34, 8);
  const auto model = select_attributes(d, 12);
  EXPECT_EQ(model.selected.size(), 12u);
  EXPECT_EQ(model.rules.size(), 34u);
  EXPECT_EQ(default_attribute_count(34), 12u);
  EXPECT_EQ(default_attribute_count(14), 5u);
  EXPECT_EQ(default_attribute_count(1), 1u);
}

TEST(SelectAttributes, KOutOfRangeRejected) {
  const auto d = random_dataset(10, 3, 1);
  EXPECT_THROW(select_attributes(d, 0), UsageError);
  EXPECT_THROW(select_attributes(d, 4), UsageError);
}

TEST(SelectAttributesProperty, InvariantUnderRowPermutation) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_dataset(80, 7, 1000 + trial);
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<double>> rows;
    std::vector<Label> labels;
    for (auto i : perm) {
      rows.emplace_back(d.row(i).begin(), d.row(i).end());
      labels.push_back(d.labels[i]);
    }
    const auto shuffled = make_dataset(d.schema, rows, labels);
    EXPECT_EQ(select_attributes(d, 4).selected, select_attributes(shuffled, 4).selected);
  }
}

TEST(SelectAttributesProperty, SelectionIsPrefixMonotone) {
  const auto d = random_dataset(150, 8, 12);
  std::vector<std::size_t> previous;
  for (std::size_t k = 1; k <= d.dims(); ++k) {
    const auto sel = select_attributes(d, k).selected;
    EXPECT_TRUE(std::equal(previous.begin(), previous.end(), sel.begin()));
    previous = sel;
  }
}

TEST(Project, PicksColumnsInModelOrder) {
  const auto d = make_dataset(numeric_schema(3), {{1, 2, 3}}, {Label::attack});
  const std::vector<std::size_t> sel{2, 0};
  const auto p = project(d, sel);
  EXPECT_EQ(p.values(0, 0), 3.0);
  EXPECT_EQ(p.values(0, 1), 1.0);
  EXPECT_EQ(p.labels, d.labels);
  EXPECT_EQ(p.schema.attributes[0].name, "a2");
  EXPECT_EQ(p.schema.label_column, 2u);
}

TEST(Project, IdentityIsIdempotent) {
  const auto d = random_dataset(30, 4, 2);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const auto once = project(d, all);
  EXPECT_EQ(project(once, all).values, d.values);
}

TEST(Project, MatchesRowWiseOracle) {
  const auto d = random_dataset(500, 10, 44);
  const auto model = select_attributes(d, 5);
  const auto p = project(d, model);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t c = 0; c < 5; ++c) ASSERT_EQ(p.values(i, c), d.values(i, model.selected[c]));
}

TEST(Project, InvalidIndexRejected) {
  const auto d = random_dataset(3, 2, 1);
  const std::vector<std::size_t> bad{0, 2};
  EXPECT_THROW(project(d, bad), UsageError);
}
