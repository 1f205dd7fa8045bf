#include "cmpm/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "cmpm/parallel.hpp"

namespace cmpm {
namespace {

std::string number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, ptr};
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

ConfusionCounts count_outcomes(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw UsageError("count_outcomes: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::attack;
    const bool flagged = predicted[i] == Label::attack;
    if (actual && flagged) ++c.true_positive;
    else if (actual) ++c.false_negative;
    else if (flagged) ++c.false_positive;
    else ++c.true_negative;
  }
  return c;
}

double recall(const ConfusionCounts& c) {
  const auto positives = c.true_positive + c.false_negative;
  if (positives == 0) throw DataError("recall: no attack instances in the ground truth");
  return static_cast<double>(c.true_positive) / static_cast<double>(positives);
}

double false_positive_rate(const ConfusionCounts& c) {
  const auto negatives = c.false_positive + c.true_negative;
  if (negatives == 0) throw DataError("false_positive_rate: no normal instances in the ground truth");
  return static_cast<double>(c.false_positive) / static_cast<double>(negatives);
}

std::string format_report_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  out += "recall," + number(r.recall) + "\n";
  out += "fpr," + number(r.fpr) + "\n";
  out += "detect_wall_ms," + number(r.detect_wall_ms) + "\n";
  out += "model_size," + std::to_string(r.model_size) + "\n";
  if (r.speedup_vs_baseline) out += "speedup_vs_baseline," + number(*r.speedup_vs_baseline) + "\n";
  return out;
}

EvalReport parse_report_csv(const std::string& text) {
  EvalReport r;
  std::istringstream in(text);
  std::string line;
  const auto parse = [](const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("report: bad value '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == "metric,value") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("report: malformed line '" + line + "'");
    const auto key = line.substr(0, comma);
    const auto value = line.substr(comma + 1);
    if (key == "recall") r.recall = parse(value);
    else if (key == "fpr") r.fpr = parse(value);
    else if (key == "detect_wall_ms") r.detect_wall_ms = parse(value);
    else if (key == "model_size") r.model_size = static_cast<std::size_t>(parse(value));
    else if (key == "speedup_vs_baseline") r.speedup_vs_baseline = parse(value);
    else throw DataError("report: unknown metric '" + key + "'");
  }
  return r;
}

std::string format_percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", ratio * 100.0);
  return buf;
}

std::string format_report_text(const EvalReport& r) {
  std::string out;
  out += "recall      " + format_percent(r.recall) + " %\n";
  out += "fpr         " + format_percent(r.fpr) + " %\n";
  out += "detect time " + number(r.detect_wall_ms) + " ms\n";
  out += "model size  " + std::to_string(r.model_size) + "\n";
  if (r.speedup_vs_baseline) out += "speedup     " + number(*r.speedup_vs_baseline) + "x\n";
  return out;
}

DetectionRun timed_detection(std::size_t model_size, const Dataset& test, const BatchClassifier& classify,
                             std::size_t repeats) {
  if (test.size() == 0) throw UsageError("timed_detection: empty test set");
  if (repeats < 1) throw UsageError("timed_detection: repeats must be >= 1");
  using clock = std::chrono::steady_clock;
  DetectionRun run;
  run.predictions = classify(test.values);  // warm-up
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    auto pred = classify(test.values);
    const auto t1 = clock::now();
    run.pass_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    if (pred != run.predictions) throw DataError("timed_detection: classifier is not deterministic");
  }
  auto sorted = run.pass_ms;
  std::sort(sorted.begin(), sorted.end());
  run.counts = count_outcomes(test.labels, run.predictions);
  const auto positives = run.counts.true_positive + run.counts.false_negative;
  const auto negatives = run.counts.false_positive + run.counts.true_negative;
  run.report.recall = positives ? recall(run.counts) : 0.0;
  run.report.fpr = negatives ? false_positive_rate(run.counts) : 0.0;
  run.report.detect_wall_ms = sorted[sorted.size() / 2];
  run.report.model_size = model_size;
  return run;
}

DetectionRun timed_knn_detection(const CompressedModel& model, const Dataset& test, std::size_t k, std::size_t repeats) {
  return timed_detection(
      model.exemplars.size(), test, [&](const Matrix& raw) { return knn_predict_batch(model, raw, k); }, repeats);
}

Dataset synth_data_gen(std::size_t n, std::size_t dims, std::size_t clusters, double class_overlap,
                       std::uint64_t seed) {
  if (clusters < 2) throw UsageError("synth: clusters must be >= 2");
  if (n < clusters) throw UsageError("synth: n must be >= clusters");
  if (dims < 1) throw UsageError("synth: dims must be >= 1");
  if (!(class_overlap >= 0.0 && class_overlap <= 1.0)) throw UsageError("synth: overlap must lie in [0,1]");

  constexpr double kSpan = 10.0;
  constexpr double kMinSpacing = 3.0;
  const double sigma = 0.25 + 1.75 * class_overlap;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, kSpan);
  Matrix centers(clusters, dims);
  for (std::size_t b = 0; b < clusters; ++b) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (std::size_t j = 0; j < dims; ++j) centers(b, j) = uniform(rng);
      bool ok = true;
      for (std::size_t o = 0; o < b && ok; ++o) {
        double d = 0;
        for (std::size_t j = 0; j < dims; ++j) d += (centers(b, j) - centers(o, j)) * (centers(b, j) - centers(o, j));
        ok = d >= kMinSpacing * kMinSpacing;
      }
      if (ok) break;
    }
  }

  Schema schema;
  for (std::size_t j = 0; j < dims; ++j) schema.attributes.push_back({"f" + std::to_string(j), AttributeKind::numeric, {}});
  schema.label_column = dims;
  Dataset data{schema, Matrix(n, dims), std::vector<Label>(n)};
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = i % clusters;
    for (std::size_t j = 0; j < dims; ++j) data.values(i, j) = centers(b, j) + noise(rng);
    data.labels[i] = (b % 2) ? Label::attack : Label::normal;
  }
  return data;
}

std::vector<BenchRow> scalability_bench(const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& workers,
                                        const BenchTemplate& plan) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw UsageError("bench: sizes must be sorted ascending");
  using clock = std::chrono::steady_clock;
  const auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  std::vector<BenchRow> rows;
  for (auto n : sizes) {
    const auto raw = synth_data_gen(n, plan.dims, plan.clusters, plan.overlap, plan.seed);
    const auto data = apply_normalizer(fit_normalizer(raw), raw);
    APConfig config = plan.ap;
    {
      const auto [lo, hi] = suggest_preference_range(build_similarity(data, 0.0));
      config.preference = lo + plan.preference_fraction * (hi - lo);
    }
    if (plan.include_serial) {
      const auto t0 = clock::now();
      (void)run_ap(data, config);
      rows.push_back({"ap_serial", n, plan.dims, 1, ms_since(t0)});
    }
    for (auto w : workers) {
      const auto t0 = clock::now();
      (void)run_ap_parallel(data, config, EnginePlan{w, plan.partitions});
      rows.push_back({"ap_parallel", n, plan.dims, w, ms_since(t0)});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows, bool header) {
  if (header) out << "job,n,attributes,workers,wall_ms\n";
  for (const auto& r : rows) out << r.job << ',' << r.n << ',' << r.attributes << ',' << r.workers << ',' << number(r.wall_ms) << '\n';
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("spearman: need two equal-length series of >= 2 points");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

double linear_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw UsageError("linear_r2: need two equal-length series of >= 2 points");
  const double r = pearson(x, y);
  return r * r;
}

}  // namespace cmpm
