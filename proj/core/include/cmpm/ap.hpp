#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cmpm/ap_kernels.hpp"
#include "cmpm/common.hpp"
#include "cmpm/dataset.hpp"

namespace cmpm {

// s(i,k) = -|x_i - x_k|^2 off the diagonal, preference on it.
struct SimilarityMatrix {
  Matrix s;
  double preference = 0.0;

  std::size_t size() const { return s.rows(); }
  bool operator==(const SimilarityMatrix&) const = default;
};

struct MessageState {
  Matrix r;
  Matrix a;
  std::size_t iteration = 0;

  static MessageState zeros(std::size_t n) { return {Matrix(n, n), Matrix(n, n), 0}; }
};

struct APConfig {
  double preference = 0.0;
  double damping = 0.8;
  std::size_t max_iter = 1000;
  std::size_t conv_window = 50;
  DampingConvention convention = DampingConvention::old_term;
  // Relative scale of the deterministic jitter added to S before message
  // passing; exact ties (duplicate points, mirrored pairs) otherwise keep AP
  // from picking one of two equivalent exemplars. 0 disables.
  double tie_noise = 1e-12;

  void validate() const;
};

struct ExemplarSet {
  std::vector<std::size_t> exemplars;   // sorted
  std::vector<std::size_t> assignment;  // assignment[i] = exemplar of i
  double fitness = 0.0;                 // E(c) = sum_i S(i, c(i))

  // Run metadata, filled by run_ap / run_ap_parallel.
  std::size_t iterations = 0;
  bool converged = false;

  bool same_clustering(const ExemplarSet& o) const { return exemplars == o.exemplars && assignment == o.assignment; }
};

SimilarityMatrix build_similarity(const Dataset& data, double preference);

// Working copy for message passing: s(i,k) + (scale |s(i,k)| + tiny) u(i,k)
// with u a hash of the cell position in [0,1).
SimilarityMatrix jitter_similarity(const SimilarityMatrix& s, double scale);
double jitter_cell(double value, std::size_t i, std::size_t k, std::size_t n, double scale);

// (min, max) over the off-diagonal similarities.
std::pair<double, double> suggest_preference_range(const SimilarityMatrix& s);
double median_similarity(const SimilarityMatrix& s);

void update_responsibility(const SimilarityMatrix& s, MessageState& state, double lambda,
                           DampingConvention convention = DampingConvention::old_term);
void update_availability(MessageState& state, double lambda, DampingConvention convention = DampingConvention::old_term);

// Indices k with r(k,k) + a(k,k) > 0, ascending. May be empty.
std::vector<std::size_t> exemplar_candidates(const MessageState& state);

// Completes a candidate list into an ExemplarSet: falls back to the argmax of
// r(k,k) + a(k,k) when empty, assigns every other point to its most similar
// exemplar (ties to the smaller index) and evaluates E(c).
ExemplarSet finish_exemplars(std::vector<std::size_t> candidates, std::span<const double> diagonal_criterion,
                             const SimilarityMatrix& s);

ExemplarSet select_exemplars(const MessageState& state, const SimilarityMatrix& s);

// E(c) for an arbitrary assignment.
double fitness(const SimilarityMatrix& s, std::span<const std::size_t> assignment);

ExemplarSet run_ap(const SimilarityMatrix& s, const APConfig& config);
ExemplarSet run_ap(const Dataset& data, const APConfig& config);

enum class ExemplarLabelMode { own, cluster_majority };

struct LabeledVectors {
  Matrix vectors;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  bool operator==(const LabeledVectors&) const = default;
};

LabeledVectors extract_compressed_exemplars(const Dataset& data, const ExemplarSet& exemplars,
                                            ExemplarLabelMode mode = ExemplarLabelMode::own);

}  // namespace cmpm
