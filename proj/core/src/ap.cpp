#include "cmpm/ap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>

namespace cmpm {

void APConfig::validate() const {
  if (!(damping > 0.0 && damping < 1.0)) throw UsageError("ap: damping must lie in (0,1)");
  if (max_iter < 1) throw UsageError("ap: max_iter must be >= 1");
  if (conv_window < 1) throw UsageError("ap: conv_window must be >= 1");
  if (!std::isfinite(preference)) throw UsageError("ap: preference must be finite");
  if (!(tie_noise >= 0.0 && tie_noise < 1e-3)) throw UsageError("ap: tie_noise must lie in [0, 1e-3)");
}

double jitter_cell(double value, std::size_t i, std::size_t k, std::size_t n, double scale) {
  if (scale == 0.0) return value;
  // splitmix64 finalizer
  std::uint64_t x = static_cast<std::uint64_t>(i) * n + k + 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  const double u = static_cast<double>(x >> 11) * 0x1.0p-53;
  return value + (scale * std::abs(value) + 100 * std::numeric_limits<double>::min()) * u;
}

SimilarityMatrix jitter_similarity(const SimilarityMatrix& s, double scale) {
  SimilarityMatrix out = s;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) out.s(i, k) = jitter_cell(s.s(i, k), i, k, n, scale);
  return out;
}

SimilarityMatrix build_similarity(const Dataset& data, double preference) {
  const std::size_t n = data.size();
  if (n == 0) throw UsageError("build_similarity: empty dataset");
  const std::size_t m = data.dims();
  SimilarityMatrix out{Matrix(n, n), preference};
  for (std::size_t i = 0; i < n; ++i) {
    auto x = data.row(i);
    out.s(i, i) = preference;
    for (std::size_t j = i + 1; j < n; ++j) {
      auto y = data.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k) acc += kernels::squared_term(x[k], y[k]);
      const double v = kernels::similarity_from_distance(acc);
      out.s(i, j) = v;
      out.s(j, i) = v;
    }
  }
  return out;
}

std::pair<double, double> suggest_preference_range(const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  if (n < 2) throw UsageError("suggest_preference_range: need at least 2 points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      lo = std::min(lo, s.s(i, j));
      hi = std::max(hi, s.s(i, j));
    }
  }
  return {lo, hi};
}

double median_similarity(const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  if (n < 2) throw UsageError("median_similarity: need at least 2 points");
  std::vector<double> v;
  v.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) v.push_back(s.s(i, j));
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

void update_responsibility(const SimilarityMatrix& s, MessageState& state, double lambda, DampingConvention convention) {
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i)
    kernels::responsibility_row(s.s.row(i), state.a.row(i), state.r.row(i), lambda, convention);
}

void update_availability(MessageState& state, double lambda, DampingConvention convention) {
  const std::size_t n = state.r.rows();
  // Row-major accumulation visits each column's entries in ascending i, the
  // same order as kernels::positive_column_sum.
  std::vector<double> column_sum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = state.r.row(i);
    for (std::size_t k = 0; k < n; ++k)
      if (i != k) column_sum[k] += std::max(0.0, r[k]);
  }
  std::vector<double> diagonal(n);
  for (std::size_t k = 0; k < n; ++k) diagonal[k] = state.r(k, k);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = state.r.row(i);
    auto a = state.a.row(i);
    for (std::size_t k = 0; k < n; ++k)
      a[k] = kernels::availability_value(i, k, a[k], r[k], diagonal[k], column_sum[k], lambda, convention);
  }
}

std::vector<std::size_t> exemplar_candidates(const MessageState& state) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < state.r.rows(); ++k)
    if (state.r(k, k) + state.a(k, k) > 0.0) out.push_back(k);
  return out;
}

double fitness(const SimilarityMatrix& s, std::span<const std::size_t> assignment) {
  double e = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) e += s.s(i, assignment[i]);
  return e;
}

ExemplarSet finish_exemplars(std::vector<std::size_t> candidates, std::span<const double> diagonal_criterion,
                             const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  std::sort(candidates.begin(), candidates.end());
  if (candidates.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (diagonal_criterion[k] > diagonal_criterion[best]) best = k;
    candidates.push_back(best);
  }
  ExemplarSet out;
  out.assignment.assign(n, 0);
  std::vector<char> is_exemplar(n, 0);
  for (auto k : candidates) is_exemplar[k] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_exemplar[i]) {
      out.assignment[i] = i;
      continue;
    }
    std::size_t best = candidates.front();
    for (auto k : candidates)
      if (s.s(i, k) > s.s(i, best)) best = k;
    out.assignment[i] = best;
  }
  out.exemplars = std::move(candidates);
  out.fitness = fitness(s, out.assignment);
  return out;
}

ExemplarSet select_exemplars(const MessageState& state, const SimilarityMatrix& s) {
  const std::size_t n = s.size();
  std::vector<double> criterion(n);
  for (std::size_t k = 0; k < n; ++k) criterion[k] = state.r(k, k) + state.a(k, k);
  return finish_exemplars(exemplar_candidates(state), criterion, s);
}

ExemplarSet run_ap(const SimilarityMatrix& s, const APConfig& config) {
  config.validate();
  const std::size_t n = s.size();
  if (n == 0) throw UsageError("run_ap: empty similarity matrix");
  const auto working = jitter_similarity(s, config.tie_noise);
  auto state = MessageState::zeros(n);
  std::vector<std::size_t> previous;
  std::size_t stable = 0;
  bool converged = false;
  while (state.iteration < config.max_iter) {
    update_responsibility(working, state, config.damping, config.convention);
    update_availability(state, config.damping, config.convention);
    ++state.iteration;
    auto current = exemplar_candidates(state);
    stable = (state.iteration > 1 && current == previous) ? stable + 1 : 1;
    previous = std::move(current);
    // An empty candidate set never counts as converged.
    if (!previous.empty() && stable >= config.conv_window) {
      converged = true;
      break;
    }
  }
  auto out = select_exemplars(state, s);
  out.iterations = state.iteration;
  out.converged = converged;
  return out;
}

ExemplarSet run_ap(const Dataset& data, const APConfig& config) {
  config.validate();
  return run_ap(build_similarity(data, config.preference), config);
}

LabeledVectors extract_compressed_exemplars(const Dataset& data, const ExemplarSet& exemplars, ExemplarLabelMode mode) {
  if (exemplars.assignment.size() != data.size()) throw UsageError("extract_compressed_exemplars: assignment size mismatch");
  LabeledVectors out{Matrix(exemplars.exemplars.size(), data.dims()), {}};
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> votes;  // exemplar -> (normal, attack)
  if (mode == ExemplarLabelMode::cluster_majority) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto& v = votes[exemplars.assignment[i]];
      (data.labels[i] == Label::attack ? v.second : v.first) += 1;
    }
  }
  for (std::size_t e = 0; e < exemplars.exemplars.size(); ++e) {
    const auto k = exemplars.exemplars[e];
    if (k >= data.size()) throw UsageError("extract_compressed_exemplars: exemplar index out of range");
    auto src = data.row(k);
    std::copy(src.begin(), src.end(), out.vectors.row(e).begin());
    Label label = data.labels[k];
    if (mode == ExemplarLabelMode::cluster_majority) {
      const auto [normal, attack] = votes[k];
      if (normal != attack) label = attack > normal ? Label::attack : Label::normal;
    }
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace cmpm
