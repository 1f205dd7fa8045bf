#include "cmpm/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cmpm/kmeans.hpp"
#include "cmpm/parallel.hpp"

namespace cmpm {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw UsageError("config: bad value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError("config: bad boolean '" + std::string(value) + "' for " + std::string(key));
}

[[noreturn]] void bad_choice(std::string_view key, std::string_view value) {
  throw UsageError("config: unknown choice '" + std::string(value) + "' for " + std::string(key));
}

// Reruns fn, prefixing any error with the stage name.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UsageError& e) {
    throw UsageError(std::string("stage ") + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("stage ") + name + ": " + e.what());
  }
}

double resolve_preference(const PipelineConfig& config, const Dataset& data) {
  if (config.ap_preference) return *config.ap_preference;
  if (data.size() < 2) return 0.0;
  const auto s = config.engine == EngineKind::parallel ? parallel_similarity(data, 0.0, config.plan())
                                                       : build_similarity(data, 0.0);
  const auto [lo, hi] = suggest_preference_range(s);
  return lo + config.ap_preference_fraction * (hi - lo);
}

APConfig ap_config(const PipelineConfig& c, double preference) {
  return {preference, c.ap_damping, c.ap_max_iter, c.ap_conv_window, c.ap_convention, c.ap_tie_noise};
}

ExemplarSet run_configured_ap(const PipelineConfig& config, const Dataset& data, double preference) {
  const auto ap = ap_config(config, preference);
  if (config.engine == EngineKind::parallel) return run_ap_parallel(data, ap, config.plan());
  return run_ap(data, ap);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "schema",         "train",          "test",           "header",        "oner.k",
      "oner.bins",      "vertical",       "ap.preference",  "ap.preference_fraction",
      "ap.damping",     "ap.max_iter",    "ap.conv_window", "ap.convention", "ap.tie_noise", "ap.label_mode",
      "kmeans.k",       "kmeans.seed",    "kmeans.max_iter", "classifier",   "knn.k",
      "svc.c",          "svc.gamma",      "svc.grid",       "svc.folds",     "svc.seed",
      "engine",         "engine.workers", "engine.partitions"};
  return keys;
}

void apply_setting(PipelineConfig& c, std::string_view key, std::string_view raw) {
  const auto v = trim(raw);
  if (key == "schema") c.schema = std::string(v);
  else if (key == "train") c.train = std::string(v);
  else if (key == "test") c.test = std::string(v);
  else if (key == "header") c.header = parse_bool(key, v);
  else if (key == "oner.k") c.oner_k = parse_number<std::size_t>(key, v);
  else if (key == "oner.bins") c.oner_bins = parse_number<std::size_t>(key, v);
  else if (key == "vertical") {
    if (v == "ap") c.vertical = VerticalMethod::ap;
    else if (v == "kmeans") c.vertical = VerticalMethod::kmeans;
    else if (v == "none") c.vertical = VerticalMethod::none;
    else bad_choice(key, v);
  } else if (key == "ap.preference") c.ap_preference = parse_number<double>(key, v);
  else if (key == "ap.preference_fraction") c.ap_preference_fraction = parse_number<double>(key, v);
  else if (key == "ap.damping") c.ap_damping = parse_number<double>(key, v);
  else if (key == "ap.max_iter") c.ap_max_iter = parse_number<std::size_t>(key, v);
  else if (key == "ap.conv_window") c.ap_conv_window = parse_number<std::size_t>(key, v);
  else if (key == "ap.convention") {
    if (v == "new") c.ap_convention = DampingConvention::new_term;
    else if (v == "old") c.ap_convention = DampingConvention::old_term;
    else bad_choice(key, v);
  } else if (key == "ap.tie_noise") c.ap_tie_noise = parse_number<double>(key, v);
  else if (key == "ap.label_mode") {
    if (v == "own") c.ap_label_mode = ExemplarLabelMode::own;
    else if (v == "majority") c.ap_label_mode = ExemplarLabelMode::cluster_majority;
    else bad_choice(key, v);
  } else if (key == "kmeans.k") c.kmeans_k = parse_number<std::size_t>(key, v);
  else if (key == "kmeans.seed") c.kmeans_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "kmeans.max_iter") c.kmeans_max_iter = parse_number<std::size_t>(key, v);
  else if (key == "classifier") {
    if (v == "knn") c.classifier = ClassifierKind::knn;
    else if (v == "svc") c.classifier = ClassifierKind::svc;
    else bad_choice(key, v);
  } else if (key == "knn.k") c.knn_k = parse_number<std::size_t>(key, v);
  else if (key == "svc.c") c.svc_c = parse_number<double>(key, v);
  else if (key == "svc.gamma") c.svc_gamma = parse_number<double>(key, v);
  else if (key == "svc.grid") c.svc_grid = parse_bool(key, v);
  else if (key == "svc.folds") c.svc_folds = parse_number<std::size_t>(key, v);
  else if (key == "svc.seed") c.svc_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "engine") {
    if (v == "serial") c.engine = EngineKind::serial;
    else if (v == "parallel") c.engine = EngineKind::parallel;
    else bad_choice(key, v);
  } else if (key == "engine.workers") c.workers = parse_number<std::size_t>(key, v);
  else if (key == "engine.partitions") c.partitions = parse_number<std::size_t>(key, v);
  else throw UsageError("config: unknown key '" + std::string(key) + "'");
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(config, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PipelineConfig config;
  apply_config_text(config, ss.str());
  return config;
}

CompressOutcome compress(const PipelineConfig& config, const Dataset& train) {
  CompressOutcome out;
  auto& model = out.model;
  out.training_size = train.size();
  model.schema_digest = schema_digest(train.schema);

  const auto normalized = stage("normalize", [&] {
    model.normalizer = fit_normalizer(train);
    return apply_normalizer(model.normalizer, train);
  });

  const std::size_t k = config.oner_k ? config.oner_k : default_attribute_count(train.dims());
  model.horizontal = stage("oner", [&] {
    if (config.engine == EngineKind::parallel) return parallel_oner(normalized, k, config.oner_bins, config.plan());
    return select_attributes(normalized, k, config.oner_bins);
  });
  const auto projected = stage("project", [&] { return project(normalized, model.horizontal); });

  model.parameters = {{"oner.k", static_cast<double>(k)}, {"oner.bins", static_cast<double>(config.oner_bins)}};
  stage("vertical", [&] {
    switch (config.vertical) {
      case VerticalMethod::none:
        model.provenance = Provenance::none;
        model.exemplars = {projected.values, projected.labels};
        return;
      case VerticalMethod::ap: {
        const double p = resolve_preference(config, projected);
        const auto ex = run_configured_ap(config, projected, p);
        model.provenance = Provenance::ap;
        model.exemplars = extract_compressed_exemplars(projected, ex, config.ap_label_mode);
        out.ap_iterations = ex.iterations;
        out.ap_converged = ex.converged;
        model.parameters.insert(model.parameters.end(),
                                {{"ap.preference", p},
                                 {"ap.damping", config.ap_damping},
                                 {"ap.max_iter", static_cast<double>(config.ap_max_iter)},
                                 {"ap.conv_window", static_cast<double>(config.ap_conv_window)},
                                 {"ap.convention", config.ap_convention == DampingConvention::old_term ? 1.0 : 0.0},
                                 {"ap.tie_noise", config.ap_tie_noise},
                                 {"ap.label_mode", config.ap_label_mode == ExemplarLabelMode::cluster_majority ? 1.0 : 0.0},
                                 {"ap.iterations", static_cast<double>(ex.iterations)},
                                 {"ap.converged", ex.converged ? 1.0 : 0.0}});
        return;
      }
      case VerticalMethod::kmeans: {
        std::size_t kk = config.kmeans_k;
        if (kk == 0) kk = run_configured_ap(config, projected, resolve_preference(config, projected)).exemplars.size();
        const auto km = match_exemplar_count(projected, kk, config.kmeans_seed, config.kmeans_max_iter);
        model.provenance = Provenance::kmeans;
        model.exemplars = extract_representatives(projected, km);
        model.parameters.insert(model.parameters.end(), {{"kmeans.k", static_cast<double>(kk)},
                                                         {"kmeans.seed", static_cast<double>(config.kmeans_seed)},
                                                         {"kmeans.max_iter", static_cast<double>(config.kmeans_max_iter)},
                                                         {"kmeans.wcss", km.wcss}});
        return;
      }
    }
  });
  return out;
}

CompressOutcome compress(const PipelineConfig& config) {
  const auto schema = stage("load", [&] { return load_schema(config.schema); });
  const auto train = stage("load", [&] { return load_csv(config.train, schema, {config.header}); });
  return compress(config, train);
}

DetectOutcome detect(const CompressedModel& model, const Dataset& test, const PipelineConfig& config) {
  if (schema_digest(test.schema) != model.schema_digest)
    throw DataError("schema digest mismatch: the model was built for a different schema");
  DetectOutcome out;
  if (config.classifier == ClassifierKind::knn) {
    if (config.knn_k < 1) throw UsageError("knn.k must be >= 1");
    out.run = timed_knn_detection(model, test, config.knn_k);
    return out;
  }
  double c = config.svc_c;
  double gamma = config.svc_gamma;
  if (config.svc_grid) {
    out.grid = grid_search(model.exemplars, default_c_grid(), default_gamma_grid(), config.svc_folds, config.svc_seed);
    c = out.grid->c;
    gamma = out.grid->gamma;
  }
  const auto svm = svc_train(model.exemplars, c, gamma);
  out.run = timed_detection(model.exemplars.size(), test, [&](const Matrix& raw) {
    std::vector<double> scratch(model.input_dims()), query(model.dims());
    std::vector<Label> pred(raw.rows());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
      prepare_query(model, raw.row(i), scratch, query);
      pred[i] = svc_predict(svm, query);
    }
    return pred;
  });
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const Label> predictions, const Schema& schema) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (auto l : predictions) out << (l == Label::attack ? schema.attack_name : schema.normal_name) << '\n';
}

std::vector<double> preference_grid(double lo, double hi, std::size_t points) {
  if (points < 2) throw UsageError("sweep: grid size must be >= 2");
  if (lo > hi || hi > 0.0) throw UsageError("sweep: expected lo <= hi <= 0");
  if (lo == 0.0) return std::vector<double>(points, 0.0);
  // log spacing needs a nonzero upper end; duplicates make hi = 0
  const double top = hi < 0.0 ? hi : lo * 1e-6;
  const double a = std::log(-lo);
  const double b = std::log(-top);
  std::vector<double> out(points);
  for (std::size_t t = 0; t < points; ++t) {
    const double f = static_cast<double>(t) / static_cast<double>(points - 1);
    out[t] = -std::exp(a + f * (b - a));
  }
  out.front() = lo;
  out.back() = top;
  return out;
}

std::vector<SweepRow> sweep_preference(const PipelineConfig& config, const Dataset& train, std::size_t points) {
  const auto normalized = apply_normalizer(fit_normalizer(train), train);
  const std::size_t k = config.oner_k ? config.oner_k : default_attribute_count(train.dims());
  const auto projected = project(normalized, select_attributes(normalized, k, config.oner_bins));
  const auto base = build_similarity(projected, 0.0);
  const auto [lo, hi] = suggest_preference_range(base);
  std::vector<SweepRow> rows;
  for (double p : preference_grid(lo, hi, points)) {
    auto s = base;
    for (std::size_t i = 0; i < s.size(); ++i) s.s(i, i) = p;
    s.preference = p;
    const auto ex = run_ap(s, ap_config(config, p));
    rows.push_back({p, ex.exemplars.size(), ex.iterations, ex.converged});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "preference,exemplar_count\n";
  char buf[32];
  for (const auto& r : rows) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, r.preference);
    out.write(buf, ptr - buf);
    out << ',' << r.exemplars << '\n';
  }
}

}  // namespace cmpm
