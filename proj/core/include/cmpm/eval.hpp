#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/classify.hpp"
#include "cmpm/dataset.hpp"
#include "cmpm/engine.hpp"

namespace cmpm {

// Attack is the positive class.
struct ConfusionCounts {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t true_negative = 0;
  std::size_t false_negative = 0;

  std::size_t total() const { return true_positive + false_positive + true_negative + false_negative; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts count_outcomes(std::span<const Label> truth, std::span<const Label> predicted);

double recall(const ConfusionCounts& c);
double false_positive_rate(const ConfusionCounts& c);

struct EvalReport {
  double recall = 0.0;
  double fpr = 0.0;
  double detect_wall_ms = 0.0;
  std::size_t model_size = 0;
  std::optional<double> speedup_vs_baseline;

  bool operator==(const EvalReport&) const = default;
};

// `metric,value` rows; the speedup row is omitted when unset.
std::string format_report_csv(const EvalReport& report);
EvalReport parse_report_csv(const std::string& text);
std::string format_report_text(const EvalReport& report);

// Percentage with four decimals, the way detection tables print them.
std::string format_percent(double ratio);

// Predicts every row of a raw test matrix.
using BatchClassifier = std::function<std::vector<Label>(const Matrix& raw)>;

struct DetectionRun {
  EvalReport report;
  ConfusionCounts counts;
  std::vector<Label> predictions;
  std::vector<double> pass_ms;  // the timed passes, warm-up excluded
};

// One warm-up pass, then `repeats` timed passes; reports the median.
DetectionRun timed_detection(std::size_t model_size, const Dataset& test, const BatchClassifier& classify,
                             std::size_t repeats = 3);
DetectionRun timed_knn_detection(const CompressedModel& model, const Dataset& test, std::size_t k = 1,
                                 std::size_t repeats = 3);

inline double speedup(double baseline_ms, double compressed_ms) { return baseline_ms / compressed_ms; }

// Gaussian blobs; blob b carries label attack iff b is odd. overlap in [0,1]
// widens the blobs relative to their spacing.
Dataset synth_data_gen(std::size_t n, std::size_t dims, std::size_t clusters, double class_overlap,
                       std::uint64_t seed);

struct BenchRow {
  std::string job;
  std::size_t n = 0;
  std::size_t attributes = 0;
  std::size_t workers = 0;
  double wall_ms = 0.0;
};

struct BenchTemplate {
  std::size_t dims = 12;
  std::size_t clusters = 8;
  double overlap = 0.3;
  std::uint64_t seed = 7;
  double preference_fraction = 0.5;
  APConfig ap;  // preference is overwritten per size
  std::size_t partitions = 16;
  bool include_serial = true;
};

std::vector<BenchRow> scalability_bench(const std::vector<std::size_t>& sizes, const std::vector<std::size_t>& workers,
                                        const BenchTemplate& plan);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows, bool header = true);

double spearman(std::span<const double> x, std::span<const double> y);

// R^2 of the least-squares line y = a + b x.
double linear_r2(std::span<const double> x, std::span<const double> y);

}  // namespace cmpm
