#include "cmpm/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace cmpm {
namespace {

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double t = x[j] - y[j];
    d += t * t;
  }
  return d;
}

std::size_t nearest_centroid(std::span<const double> x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void recompute_means(const Dataset& data, const std::vector<std::size_t>& assignment, Matrix& centroids) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  Matrix sums(k, data.dims());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto x = data.row(i);
    auto s = sums.row(assignment[i]);
    for (std::size_t j = 0; j < x.size(); ++j) s[j] += x[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto s = sums.row(c);
    auto mu = centroids.row(c);
    for (std::size_t j = 0; j < s.size(); ++j) mu[j] = s[j] / static_cast<double>(counts[c]);
  }
}

double within_cluster_ss(const Dataset& data, const std::vector<std::size_t>& assignment, const Matrix& centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += squared_distance(data.row(i), centroids.row(assignment[i]));
  return total;
}

// Gives every empty cluster the instance farthest from its centroid, taken
// from a cluster that keeps at least one member.
void repair_empty_clusters(const Dataset& data, std::vector<std::size_t>& assignment, Matrix& centroids) {
  const std::size_t k = centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (auto c : assignment) ++counts[c];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    std::size_t far = data.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (counts[assignment[i]] < 2) continue;
      const double d = squared_distance(data.row(i), centroids.row(assignment[i]));
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --counts[assignment[far]];
    assignment[far] = c;
    counts[c] = 1;
    auto x = data.row(far);
    std::copy(x.begin(), x.end(), centroids.row(c).begin());
  }
}

}  // namespace

KMeansResult run_kmeans(const Dataset& data, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = data.size();
  if (k < 1 || k > n) throw UsageError("kmeans: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  if (max_iter < 1) throw UsageError("kmeans: max_iter must be >= 1");

  // partial Fisher-Yates for k distinct seeds
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::uniform_int_distribution<std::size_t> pick(c, n - 1);
    std::swap(pool[c], pool[pick(rng)]);
  }

  KMeansResult res;
  res.centroids = Matrix(k, data.dims());
  for (std::size_t c = 0; c < k; ++c) {
    auto x = data.row(pool[c]);
    std::copy(x.begin(), x.end(), res.centroids.row(c).begin());
  }

  res.assignment.assign(n, 0);
  std::vector<std::size_t> next(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) next[i] = nearest_centroid(data.row(i), res.centroids);
    if (it > 0 && next == res.assignment) {
      res.converged = true;
      break;
    }
    res.assignment = next;
    repair_empty_clusters(data, res.assignment, res.centroids);
    recompute_means(data, res.assignment, res.centroids);
    res.wcss_history.push_back(within_cluster_ss(data, res.assignment, res.centroids));
    ++res.iterations;
  }
  res.wcss = res.wcss_history.back();

  res.representatives.assign(k, n);
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = res.assignment[i];
    const double d = squared_distance(data.row(i), res.centroids.row(c));
    if (d < best[c]) {
      best[c] = d;
      res.representatives[c] = i;
    }
  }
  return res;
}

KMeansResult match_exemplar_count(const Dataset& data, std::size_t target_count, std::uint64_t seed,
                                  std::size_t max_iter) {
  return run_kmeans(data, target_count, seed, max_iter);
}

LabeledVectors extract_representatives(const Dataset& data, const KMeansResult& result) {
  LabeledVectors out{Matrix(result.k(), data.dims()), {}};
  for (std::size_t c = 0; c < result.k(); ++c) {
    auto x = data.row(result.representatives[c]);
    std::copy(x.begin(), x.end(), out.vectors.row(c).begin());
    out.labels.push_back(data.labels[result.representatives[c]]);
  }
  return out;
}

}  // namespace cmpm
