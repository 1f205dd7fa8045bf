#pragma once

// Small shared builders for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/dataset.hpp"

namespace cmpm::testing {

inline Schema numeric_schema(std::size_t m) {
  Schema s;
  for (std::size_t j = 0; j < m; ++j) s.attributes.push_back({"a" + std::to_string(j), AttributeKind::numeric, {}});
  s.label_column = m;
  return s;
}

// Uniform [0,1) values, random labels with both classes present when n >= 2.
inline Dataset random_dataset(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(m));
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : rows[i]) v = u(rng);
    labels[i] = (rng() & 1) ? Label::attack : Label::normal;
  }
  if (n >= 2) {
    labels[0] = Label::normal;
    labels[1] = Label::attack;
  }
  return make_dataset(numeric_schema(m), rows, labels);
}

// Protocol column and labels of the eight-instance OneR illustration.
inline Schema protocol_schema() {
  Schema s;
  s.attributes.push_back({"protocol_type", AttributeKind::categorical, {"TCP", "UDP", "ICMP"}});
  s.label_column = 1;
  return s;
}

inline Dataset protocol_dataset() {
  const std::vector<std::vector<double>> rows{{0}, {1}, {1}, {0}, {2}, {1}, {0}, {2}};
  const auto N = Label::normal;
  const auto A = Label::attack;
  return make_dataset(protocol_schema(), rows, {N, A, A, N, N, N, A, N});
}

inline MessageState random_state(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto st = MessageState::zeros(n);
  for (auto& v : st.r.values()) v = u(rng);
  for (auto& v : st.a.values()) v = u(rng);
  return st;
}

inline SimilarityMatrix random_similarity(std::size_t n, std::uint64_t seed, double preference) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-4.0, 0.0);
  SimilarityMatrix s{Matrix(n, n), preference};
  for (std::size_t i = 0; i < n; ++i) {
    s.s(i, i) = preference;
    for (std::size_t j = i + 1; j < n; ++j) s.s(i, j) = s.s(j, i) = u(rng);
  }
  return s;
}

inline double relative_gap(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

// Rows [begin, end) of `data` with the same schema.
inline Dataset slice(const Dataset& data, std::size_t begin, std::size_t end) {
  std::vector<std::vector<double>> rows;
  std::vector<Label> labels;
  for (std::size_t i = begin; i < end; ++i) {
    rows.emplace_back(data.row(i).begin(), data.row(i).end());
    labels.push_back(data.labels[i]);
  }
  return make_dataset(data.schema, rows, labels);
}

}  // namespace cmpm::testing
