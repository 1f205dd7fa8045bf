#include <algorithm>
#include <limits>
#include <string>

#include "cmpm/classify.hpp"

namespace cmpm {

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ap: return "ap";
    case Provenance::kmeans: return "kmeans";
    case Provenance::none: break;
  }
  return "none";
}

void CompressedModel::validate() const {
  if (normalizer.mins.size() != normalizer.maxs.size()) throw DataError("model: normalizer arity mismatch");
  for (std::size_t j = 0; j < normalizer.size(); ++j)
    if (!(normalizer.mins[j] <= normalizer.maxs[j])) throw DataError("model: normalizer min exceeds max");
  for (auto j : horizontal.selected)
    if (j >= normalizer.size()) throw DataError("model: selected attribute out of range");
  if (exemplars.size() == 0) throw DataError("model: no exemplars");
  if (exemplars.vectors.rows() != exemplars.size()) throw DataError("model: exemplar count mismatch");
  if (exemplars.vectors.cols() != dims()) throw DataError("model: exemplar dimension mismatch");
  for (double v : exemplars.vectors.values())
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("model: exemplar value outside [0,1]");
}

void prepare_query(const CompressedModel& model, std::span<const double> raw, std::span<double> scratch,
                   std::span<double> out) {
  if (raw.size() != model.input_dims())
    throw DataError("instance has " + std::to_string(raw.size()) + " attributes, model expects " +
                    std::to_string(model.input_dims()));
  normalize_row(model.normalizer, raw, scratch);
  const auto& sel = model.horizontal.selected;
  for (std::size_t c = 0; c < sel.size(); ++c) out[c] = scratch[sel[c]];
}

Label knn_vote(const LabeledVectors& exemplars, std::span<const double> query, std::size_t k) {
  if (k < 1) throw UsageError("knn: k must be >= 1");
  const std::size_t n = exemplars.size();
  const std::size_t d = query.size();
  if (exemplars.vectors.cols() != d) throw DataError("knn: query dimension mismatch");
  const double* base = exemplars.vectors.values().data();

  if (k == 1) {
    double best = std::numeric_limits<double>::infinity();
    Label label = Label::normal;
    for (std::size_t e = 0; e < n; ++e) {
      const double* x = base + e * d;
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = x[j] - query[j];
        dist += t * t;
      }
      if (dist < best) {
        best = dist;
        label = exemplars.labels[e];
      } else if (dist == best && exemplars.labels[e] == Label::normal) {
        label = Label::normal;
      }
    }
    return label;
  }

  std::vector<std::pair<double, Label>> all(n);
  for (std::size_t e = 0; e < n; ++e) {
    const double* x = base + e * d;
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = x[j] - query[j];
      dist += t * t;
    }
    all[e] = {dist, exemplars.labels[e]};
  }
  const std::size_t take = std::min(k, n);
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end());
  std::size_t attack = 0;
  for (std::size_t i = 0; i < take; ++i) attack += all[i].second == Label::attack;
  return 2 * attack > take ? Label::attack : Label::normal;
}

Label knn_predict(const CompressedModel& model, std::span<const double> raw, std::size_t k) {
  std::vector<double> scratch(model.input_dims()), query(model.dims());
  prepare_query(model, raw, scratch, query);
  return knn_vote(model.exemplars, query, k);
}

std::vector<Label> knn_predict_batch(const CompressedModel& model, const Matrix& raw, std::size_t k) {
  std::vector<double> scratch(model.input_dims()), query(model.dims());
  std::vector<Label> out(raw.rows());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    prepare_query(model, raw.row(i), scratch, query);
    out[i] = knn_vote(model.exemplars, query, k);
  }
  return out;
}

}  // namespace cmpm
