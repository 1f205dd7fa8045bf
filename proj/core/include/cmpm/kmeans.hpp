#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/common.hpp"
#include "cmpm/dataset.hpp"

namespace cmpm {

struct KMeansResult {
  Matrix centroids;                          // k x m
  std::vector<std::size_t> assignment;       // instance -> cluster
  double wcss = 0.0;                         // within-cluster sum of squares
  std::vector<double> wcss_history;          // objective after each Lloyd iteration
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> representatives;  // per cluster, member nearest to the centroid

  std::size_t k() const { return centroids.rows(); }
};

// Lloyd's algorithm seeded with k distinct random instances. An empty cluster
// takes over the instance farthest from its current centroid.
KMeansResult run_kmeans(const Dataset& data, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

// k-means with k equal to an AP run's exemplar count.
KMeansResult match_exemplar_count(const Dataset& data, std::size_t target_count, std::uint64_t seed,
                                  std::size_t max_iter = 300);

// Representative instances with their own labels.
LabeledVectors extract_representatives(const Dataset& data, const KMeansResult& result);

}  // namespace cmpm
