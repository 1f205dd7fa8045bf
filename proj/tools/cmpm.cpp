// cmpm: build compressed exemplar models and detect with them.
//
//   cmpm synth             emit a synthetic blobs CSV plus schema
//   cmpm compress          normalize -> OneR -> AP / k-means -> model file
//   cmpm detect            classify a test CSV against a model file
//   cmpm sweep-preference  exemplar count across a preference grid
//   cmpm bench             AP wall time across sizes and worker counts
//
// Exit codes: 0 success, 1 usage error, 2 data or model error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmpm/eval.hpp"
#include "cmpm/model_io.hpp"
#include "cmpm/pipeline.hpp"

namespace {

using namespace cmpm;

// Registers --<key> for every config key; values are applied after the
// config file so flags win.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value configuration file");
    for (const auto& key : config_keys()) {
      std::string names = "--" + key;
      if (key == "engine.workers") names += ",--workers";
      app.add_option_function<std::string>(
          names, [this, key](const std::string& v) { overrides[key] = v; }, "overrides config key " + key);
    }
  }

  PipelineConfig resolve() const {
    PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& [key, value] : overrides) apply_setting(config, key, value);
    return config;
  }
};

std::ostream& open_output(const std::string& path, std::ofstream& file, bool append = false) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, append ? std::ios::app : std::ios::trunc);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

int run_synth(std::size_t n, std::size_t dims, std::size_t clusters, double overlap, std::uint64_t seed,
              const std::string& out, const std::string& schema_out) {
  const auto data = synth_data_gen(n, dims, clusters, overlap, seed);
  write_csv(out, data);
  if (!schema_out.empty()) {
    std::ofstream s(schema_out);
    if (!s) throw DataError("cannot write " + schema_out);
    s << format_schema(data.schema);
  }
  std::cerr << "wrote " << n << " instances to " << out << "\n";
  return 0;
}

int run_compress(const PipelineConfig& config, const std::string& out) {
  const auto result = compress(config);
  save_model(out, result.model);
  std::cerr << "compressed " << result.training_size << " instances to " << result.model.exemplars.size() << " "
            << to_string(result.model.provenance) << " exemplars over " << result.model.dims() << " attributes";
  if (result.model.provenance == Provenance::ap)
    std::cerr << " (" << result.ap_iterations << " iterations, " << (result.ap_converged ? "converged" : "not converged")
              << ")";
  std::cerr << "\n";
  return 0;
}

int run_detect(const PipelineConfig& config, const std::string& model_path, const std::string& predictions,
               const std::string& report, const std::string& baseline_path) {
  const auto model = load_model(model_path);
  const auto schema = load_schema(config.schema);
  const auto test = load_csv(config.test, schema, {config.header});
  auto outcome = detect(model, test, config);
  if (!baseline_path.empty()) {
    const auto baseline = detect(load_model(baseline_path), test, config);
    outcome.run.report.speedup_vs_baseline =
        speedup(baseline.run.report.detect_wall_ms, outcome.run.report.detect_wall_ms);
  }
  if (!predictions.empty()) write_predictions(predictions, outcome.run.predictions, schema);
  std::ofstream file;
  open_output(report, file, true) << format_report_csv(outcome.run.report);
  if (outcome.grid)
    std::cerr << "grid search: C=" << outcome.grid->c << " gamma=" << outcome.grid->gamma
              << " cv_accuracy=" << outcome.grid->cv_accuracy << "\n";
  std::cerr << format_report_text(outcome.run.report);
  return 0;
}

int run_sweep(const PipelineConfig& config, std::size_t points, const std::string& out) {
  const auto schema = load_schema(config.schema);
  const auto train = load_csv(config.train, schema, {config.header});
  const auto rows = sweep_preference(config, train, points);
  std::ofstream file;
  write_sweep_csv(open_output(out, file), rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed exemplar models for intrusion detection"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic Gaussian-blobs dataset");
  std::size_t synth_n = 1000, synth_dims = 12, synth_clusters = 8;
  double synth_overlap = 0.3;
  std::uint64_t synth_seed = 1;
  std::string synth_out, synth_schema;
  synth->add_option("--n", synth_n, "instances")->capture_default_str();
  synth->add_option("--dims", synth_dims, "attributes")->capture_default_str();
  synth->add_option("--clusters", synth_clusters, "blobs (odd blobs are attacks)")->capture_default_str();
  synth->add_option("--overlap", synth_overlap, "blob overlap in [0,1]")->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--out", synth_out, "CSV output")->required();
  synth->add_option("--schema-out", synth_schema, "schema sidecar output");

  // compress
  auto* comp = app.add_subcommand("compress", "Build a compressed model file");
  ConfigFlags comp_flags;
  comp_flags.attach(*comp);
  std::string comp_out;
  comp->add_option("--out,-o", comp_out, "model file")->required();

  // detect
  auto* det = app.add_subcommand("detect", "Classify a test set with a compressed model");
  ConfigFlags det_flags;
  det_flags.attach(*det);
  std::string det_model, det_predictions, det_report, det_baseline;
  det->add_option("--model,-m", det_model, "model file")->required();
  det->add_option("--predictions", det_predictions, "one predicted label per line");
  det->add_option("--report", det_report, "metric,value CSV (appended; '-' for stdout)")->capture_default_str();
  det->add_option("--baseline-model", det_baseline, "uncompressed model for the speedup ratio");

  // sweep-preference
  auto* sweep = app.add_subcommand("sweep-preference", "Exemplar count across a log-spaced preference grid");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::size_t sweep_points = 11;
  std::string sweep_out;
  sweep->add_option("--points", sweep_points, "grid size")->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV output (default stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "AP wall time per (size, workers) on synthetic data");
  ConfigFlags bench_flags;
  bench_flags.attach(*bench);
  std::vector<std::size_t> bench_sizes{500, 1000, 2000};
  std::vector<std::size_t> bench_workers{1, 2, 4, 8};
  BenchTemplate tmpl;
  tmpl.ap.max_iter = 20;
  tmpl.ap.conv_window = 20;
  std::string bench_out;
  bench->add_option("--sizes", bench_sizes, "instance counts, ascending")->delimiter(',')->capture_default_str();
  bench->add_option("--worker-counts", bench_workers, "worker counts")->delimiter(',')->capture_default_str();
  bench->add_option("--dims", tmpl.dims)->capture_default_str();
  bench->add_option("--clusters", tmpl.clusters)->capture_default_str();
  bench->add_option("--overlap", tmpl.overlap)->capture_default_str();
  bench->add_option("--seed", tmpl.seed)->capture_default_str();
  bench->add_option("--iterations", tmpl.ap.max_iter, "fixed AP iteration budget")->capture_default_str();
  bench->add_flag("!--no-serial", tmpl.include_serial, "skip the serial reference rows");
  bench->add_option("--out", bench_out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) return run_synth(synth_n, synth_dims, synth_clusters, synth_overlap, synth_seed, synth_out, synth_schema);
    if (*comp) return run_compress(comp_flags.resolve(), comp_out);
    if (*det) return run_detect(det_flags.resolve(), det_model, det_predictions, det_report, det_baseline);
    if (*sweep) return run_sweep(sweep_flags.resolve(), sweep_points, sweep_out);
    if (*bench) {
      const auto config = bench_flags.resolve();
      tmpl.preference_fraction = config.ap_preference_fraction;
      tmpl.ap.damping = config.ap_damping;
      tmpl.ap.convention = config.ap_convention;
      tmpl.ap.conv_window = std::max(tmpl.ap.conv_window, tmpl.ap.max_iter);
      tmpl.partitions = config.partitions;
      const auto rows = scalability_bench(bench_sizes, bench_workers, tmpl);
      std::ofstream file;
      write_bench_csv(open_output(bench_out, file), rows);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
