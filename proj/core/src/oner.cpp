#include "cmpm/oner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace cmpm {

std::vector<int> discretize(std::span<const double> column, std::size_t bins) {
  if (bins == 0) throw UsageError("discretize: bins must be >= 1");
  std::vector<int> out(column.size());
  const double width = static_cast<double>(bins);
  const int last = static_cast<int>(bins) - 1;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double v = std::clamp(column[i], 0.0, 1.0);
    out[i] = std::min(last, static_cast<int>(std::floor(v * width)));
  }
  return out;
}

bool AttributeRule::ranks_before(const AttributeRule& other) const {
  // errors/total < other.errors/other.total; exact while n < 2^32
  const std::uint64_t lhs = std::uint64_t{errors} * other.total;
  const std::uint64_t rhs = std::uint64_t{other.errors} * total;
  if (lhs != rhs) return lhs < rhs;
  return attribute_index < other.attribute_index;
}

AttributeRule build_rule(std::span<const int> buckets, std::span<const Label> labels, std::size_t attribute_index) {
  if (buckets.size() != labels.size())
    throw UsageError("build_rule: " + std::to_string(buckets.size()) + " values but " + std::to_string(labels.size()) +
                     " labels");
  if (buckets.empty()) throw UsageError("build_rule: empty column");
  AttributeRule rule;
  rule.attribute_index = attribute_index;
  rule.total = buckets.size();
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    auto& c = rule.counts[buckets[i]];
    (labels[i] == Label::attack ? c.attack : c.normal) += 1;
  }
  for (const auto& [bucket, c] : rule.counts) {
    // majority ties go to normal
    const bool attack = c.attack > c.normal;
    rule.predictions[bucket] = attack ? Label::attack : Label::normal;
    rule.errors += attack ? c.normal : c.attack;
  }
  return rule;
}

AttributeRule rule_for_column(std::span<const double> column, std::span<const Label> labels, const AttributeSpec& spec,
                              std::size_t attribute, std::size_t bins) {
  if (spec.kind == AttributeKind::categorical) {
    std::vector<double> distinct(column.begin(), column.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> buckets(column.size());
    for (std::size_t i = 0; i < column.size(); ++i)
      buckets[i] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), column[i]) - distinct.begin());
    auto rule = build_rule(buckets, labels, attribute);
    rule.category_values = std::move(distinct);
    return rule;
  }
  if (bins == 0) throw UsageError("select_attributes: bins must be >= 1");
  auto rule = build_rule(discretize(column, bins), labels, attribute);
  for (std::size_t b = 1; b < bins; ++b) rule.bin_edges.push_back(static_cast<double>(b) / static_cast<double>(bins));
  return rule;
}

AttributeRule rule_for_attribute(const Dataset& data, std::size_t attribute, std::size_t bins) {
  if (attribute >= data.dims()) throw UsageError("attribute index out of range");
  std::vector<double> column(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) column[i] = data.values(i, attribute);
  return rule_for_column(column, data.labels, data.schema.attributes.at(attribute), attribute, bins);
}

HorizontalModel rank_rules(std::vector<AttributeRule> rules, std::size_t k) {
  if (k < 1 || k > rules.size())
    throw UsageError("select_attributes: k=" + std::to_string(k) + " outside [1, " + std::to_string(rules.size()) + "]");
  std::vector<std::size_t> order(rules.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return rules[a].ranks_before(rules[b]); });
  HorizontalModel model;
  for (std::size_t i = 0; i < k; ++i) model.selected.push_back(rules[order[i]].attribute_index);
  model.rules = std::move(rules);
  return model;
}

HorizontalModel select_attributes(const Dataset& data, std::size_t k, std::size_t bins) {
  const auto m = data.dims();
  if (k < 1 || k > m) throw UsageError("select_attributes: k=" + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  std::vector<AttributeRule> rules;
  rules.reserve(m);
  for (std::size_t j = 0; j < m; ++j) rules.push_back(rule_for_attribute(data, j, bins));
  return rank_rules(std::move(rules), k);
}

Dataset project(const Dataset& data, std::span<const std::size_t> selected) {
  Schema schema;
  for (auto j : selected) {
    if (j >= data.dims()) throw UsageError("project: attribute index " + std::to_string(j) + " out of range");
    schema.attributes.push_back(data.schema.attributes.at(j));
  }
  schema.label_column = selected.size();
  schema.normal_name = data.schema.normal_name;
  schema.attack_name = data.schema.attack_name;

  Dataset out{std::move(schema), Matrix(data.size(), selected.size()), data.labels};
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto src = data.row(i);
    auto dst = out.values.row(i);
    for (std::size_t c = 0; c < selected.size(); ++c) dst[c] = src[selected[c]];
  }
  return out;
}

std::size_t default_attribute_count(std::size_t m) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.35 * static_cast<double>(m))));
}

}  // namespace cmpm
