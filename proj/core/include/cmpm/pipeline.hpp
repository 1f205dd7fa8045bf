#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cmpm/ap.hpp"
#include "cmpm/classify.hpp"
#include "cmpm/engine.hpp"
#include "cmpm/eval.hpp"

namespace cmpm {

enum class VerticalMethod { ap, kmeans, none };
enum class ClassifierKind { knn, svc };
enum class EngineKind { serial, parallel };

// Flat `key = value` configuration. Keys mirror the CLI flags (`--ap.damping`).
struct PipelineConfig {
  std::filesystem::path schema;
  std::filesystem::path train;
  std::filesystem::path test;
  bool header = false;

  std::size_t oner_k = 0;  // 0: ceil(0.35 m)
  std::size_t oner_bins = kDefaultOneRBins;

  VerticalMethod vertical = VerticalMethod::ap;
  std::optional<double> ap_preference;
  double ap_preference_fraction = 0.5;
  double ap_damping = 0.8;
  std::size_t ap_max_iter = 1000;
  std::size_t ap_conv_window = 50;
  DampingConvention ap_convention = DampingConvention::old_term;
  double ap_tie_noise = 1e-12;
  ExemplarLabelMode ap_label_mode = ExemplarLabelMode::own;

  std::size_t kmeans_k = 0;  // 0: run AP first and match its exemplar count
  std::uint64_t kmeans_seed = 1;
  std::size_t kmeans_max_iter = 300;

  ClassifierKind classifier = ClassifierKind::knn;
  std::size_t knn_k = 1;
  double svc_c = 1.0;
  double svc_gamma = 1.0;
  bool svc_grid = false;
  std::size_t svc_folds = 5;
  std::uint64_t svc_seed = 1;

  EngineKind engine = EngineKind::serial;
  std::size_t workers = 1;
  std::size_t partitions = 16;

  EnginePlan plan() const { return {workers, partitions}; }
};

// Every recognised key, in documentation order.
const std::vector<std::string>& config_keys();

// Throws UsageError for unknown keys or unparsable values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);
void apply_config_text(PipelineConfig& config, std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

struct CompressOutcome {
  CompressedModel model;
  std::size_t training_size = 0;
  std::size_t ap_iterations = 0;
  bool ap_converged = false;
};

// normalize -> OneR -> project -> AP / k-means / none -> exemplars.
// Errors carry the failing stage name.
CompressOutcome compress(const PipelineConfig& config, const Dataset& train);
CompressOutcome compress(const PipelineConfig& config);

struct DetectOutcome {
  DetectionRun run;
  std::optional<GridResult> grid;
};

// Schema digest of the test data must match the model.
DetectOutcome detect(const CompressedModel& model, const Dataset& test, const PipelineConfig& config);

void write_predictions(const std::filesystem::path& path, std::span<const Label> predictions, const Schema& schema);

struct SweepRow {
  double preference = 0.0;
  std::size_t exemplars = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Log-spaced preferences across the similarity range of the normalized,
// projected training data.
std::vector<double> preference_grid(double lo, double hi, std::size_t points);
std::vector<SweepRow> sweep_preference(const PipelineConfig& config, const Dataset& train, std::size_t points);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace cmpm
