#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "cmpm/common.hpp"
#include "cmpm/dataset.hpp"

namespace cmpm {

inline constexpr std::size_t kDefaultOneRBins = 10;

// Equal-width bins over [0,1]; 1.0 lands in the last bin.
std::vector<int> discretize(std::span<const double> column, std::size_t bins);

struct BucketCounts {
  std::size_t normal = 0;
  std::size_t attack = 0;

  bool operator==(const BucketCounts&) const = default;
};

// One-attribute rule: each bucket predicts its majority class.
struct AttributeRule {
  std::size_t attribute_index = 0;
  std::vector<double> bin_edges;        // interior edges for numeric attributes, empty for categorical
  std::vector<double> category_values;  // distinct encoded values for categorical attributes
  std::map<int, Label> predictions;     // observed bucket -> predicted class
  std::map<int, BucketCounts> counts;
  std::size_t errors = 0;
  std::size_t total = 0;

  double total_error() const { return total ? static_cast<double>(errors) / static_cast<double>(total) : 0.0; }

  // Strict ranking order: lower error first, then lower attribute index.
  // Compares errors/total exactly via cross multiplication.
  bool ranks_before(const AttributeRule& other) const;

  bool operator==(const AttributeRule&) const = default;
};

AttributeRule build_rule(std::span<const int> buckets, std::span<const Label> labels, std::size_t attribute_index = 0);

// Rule for column `attribute` of `data`: categorical attributes bucket by
// distinct value, numeric ones by discretize().
AttributeRule rule_for_attribute(const Dataset& data, std::size_t attribute, std::size_t bins);
AttributeRule rule_for_column(std::span<const double> column, std::span<const Label> labels, const AttributeSpec& spec,
                              std::size_t attribute, std::size_t bins);

struct HorizontalModel {
  std::vector<std::size_t> selected;  // ascending by total error, ties by index
  std::vector<AttributeRule> rules;   // every attribute's rule, indexed by attribute

  bool operator==(const HorizontalModel&) const = default;
};

// Picks the k lowest-ranked rules out of `rules` (indexed by attribute).
HorizontalModel rank_rules(std::vector<AttributeRule> rules, std::size_t k);

HorizontalModel select_attributes(const Dataset& data, std::size_t k, std::size_t bins = kDefaultOneRBins);

// Keeps the selected columns in model order; the resulting schema holds the
// chosen attributes with the label column last.
Dataset project(const Dataset& data, std::span<const std::size_t> selected);
inline Dataset project(const Dataset& data, const HorizontalModel& model) { return project(data, model.selected); }

// ceil(0.35 * m), at least 1.
std::size_t default_attribute_count(std::size_t m);

}  // namespace cmpm
