#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/dataset.hpp"
#include "cmpm/oner.hpp"

namespace cmpm {

enum class Provenance : std::uint8_t { none = 0, ap = 1, kmeans = 2 };

const char* to_string(Provenance p);

// Everything consulted at detection time.
struct CompressedModel {
  std::uint64_t schema_digest = 0;
  NormalizationParams normalizer;
  HorizontalModel horizontal;
  LabeledVectors exemplars;  // projected, normalized
  Provenance provenance = Provenance::none;
  std::vector<std::pair<std::string, double>> parameters;

  std::size_t input_dims() const { return normalizer.size(); }
  std::size_t dims() const { return horizontal.selected.size(); }

  // Throws DataError when the pieces disagree.
  void validate() const;

  bool operator==(const CompressedModel&) const = default;
};

// Normalizes and projects one raw instance into `out` (size dims()).
void prepare_query(const CompressedModel& model, std::span<const double> raw, std::span<double> scratch,
                   std::span<double> out);

// k-nearest-neighbour vote by squared Euclidean distance. Exact distance
// ties and vote ties resolve to normal.
Label knn_vote(const LabeledVectors& exemplars, std::span<const double> query, std::size_t k = 1);

Label knn_predict(const CompressedModel& model, std::span<const double> raw, std::size_t k = 1);
std::vector<Label> knn_predict_batch(const CompressedModel& model, const Matrix& raw, std::size_t k = 1);

// RBF C-SVC: normal -> -1, attack -> +1.
struct SvmModel {
  Matrix support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;
  double c_param = 1.0;
  std::size_t iterations = 0;

  std::size_t size() const { return coefficients.size(); }
};

struct SvcOptions {
  double tolerance = 1e-3;     // KKT violation gap at which the solver stops
  std::size_t max_iter = 0;    // 0: max(10'000'000, 100 n)
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// Full dual solution, exposed for checks on the optimality conditions.
struct SvcSolution {
  SvmModel model;
  std::vector<double> alpha;  // per training instance
  std::vector<double> y;      // +-1 per training instance
};

SvcSolution svc_solve(const LabeledVectors& data, double c, double gamma, SvcOptions options = {});
SvmModel svc_train(const LabeledVectors& data, double c, double gamma, SvcOptions options = {});

double svc_decision(const SvmModel& model, std::span<const double> x);
Label svc_predict(const SvmModel& model, std::span<const double> x);

struct GridResult {
  double c = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
};

std::vector<double> default_c_grid();      // 2^-5, 2^-3, ..., 2^15
std::vector<double> default_gamma_grid();  // 2^-15, 2^-13, ..., 2^3

// Stratified fold index per instance.
std::vector<std::size_t> stratified_folds(std::span<const Label> labels, std::size_t folds, std::uint64_t seed);

GridResult grid_search(const LabeledVectors& data, std::vector<double> c_grid, std::vector<double> gamma_grid,
                       std::size_t folds, std::uint64_t seed);

}  // namespace cmpm
