#include "disagg/experiment.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "disagg/dataset_io.hpp"
#include "disagg/errors.hpp"
#include "disagg/features.hpp"
#include "disagg/ingest.hpp"
#include "disagg/rng.hpp"

namespace disagg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kCheckpointFormat = "disagg-checkpoint";

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<DataSource> kSources[] = {{DataSource::synthetic, "synthetic"},
                                             {DataSource::plaid, "plaid"}};
constexpr EnumName<FeatureMode> kFeatures[] = {{FeatureMode::ica, "ica"},
                                               {FeatureMode::fryze, "fryze"},
                                               {FeatureMode::fitps, "fitps"},
                                               {FeatureMode::raw, "raw"}};
constexpr EnumName<ClassifierKind> kClassifiers[] = {{ClassifierKind::resnetffn, "resnetffn"},
                                                     {ClassifierKind::knn, "knn"}};
constexpr EnumName<IcaFitData> kIcaFitData[] = {{IcaFitData::aggregates, "aggregates"},
                                                {IcaFitData::standalone, "standalone"}};
constexpr EnumName<InclusionMode> kInclusion[] = {{InclusionMode::uniform_k, "uniform_k"},
                                                  {InclusionMode::bernoulli, "bernoulli"}};

template <typename Enum, std::size_t N>
const char* enum_name(const EnumName<Enum> (&table)[N], Enum v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum enum_value(const EnumName<Enum> (&table)[N], const std::string& key, const json& j) {
  if (!j.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  const auto s = j.get<std::string>();
  std::string options;
  for (const auto& e : table) {
    if (s == e.name) return e.value;
    options += options.empty() ? e.name : std::string("|") + e.name;
  }
  throw ConfigError("config key '" + key + "': unknown value '" + s + "' (" + options + ")");
}

template <typename T>
T typed(const std::string& key, const json& j) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_unsigned() == false && j.get<long long>() < 0) throw ConfigError("");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError("");
    }
    return j.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type: " + j.dump());
  }
}

std::ofstream open_for_write(const fs::path& file, std::ios::openmode mode = {}) {
  std::ofstream out(file, std::ios::trunc | mode);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

void write_text(const fs::path& file, const std::string& text) {
  auto out = open_for_write(file, std::ios::binary);
  out << text;
  if (!out) throw DataError("write failed: " + file.string());
}

json read_json_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
  const fs::path probe = dir / ".write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw DataError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct Manifest {
  std::string config_hash;
  std::size_t n_classes = 0;
  std::size_t window = 0;
  double fs = 0.0;
  double f0 = 0.0;
  std::string dataset_name;
  std::vector<std::string> class_names;
};

Manifest read_manifest(const fs::path& data_dir) {
  const json j = read_json_file(data_dir / kManifestName);
  try {
    Manifest m;
    m.config_hash = j.at("config_hash").get<std::string>();
    m.n_classes = j.at("n_classes").get<std::size_t>();
    m.window = j.at("window").get<std::size_t>();
    m.fs = j.at("fs").get<double>();
    m.f0 = j.at("f0").get<double>();
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw DataError((data_dir / kManifestName).string() + ": " + e.what());
  }
}

std::vector<AggregateSample> read_split(const fs::path& data_dir, const std::string& split,
                                        const Manifest& manifest) {
  if (split != "train" && split != "val" && split != "test") {
    throw ConfigError("unknown split '" + split + "' (train|val|test)");
  }
  auto samples = read_aggregates_jsonl(data_dir / (split + ".jsonl"));
  if (samples.empty()) throw DataError("split '" + split + "' is empty");
  if (samples.front().y.size() != manifest.n_classes || samples.front().x.size() != manifest.window) {
    throw DataError("split '" + split + "' does not match the manifest's shape");
  }
  return samples;
}

SplitCatalog build_catalog(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t window = cfg.resolved_window();
  if (cfg.source == DataSource::synthetic) {
    const auto specs = make_synthetic_specs(cfg.n_classes, cfg.synth_harmonics, cfg.synth_noise,
                                            derive_seed(seed, "specs"));
    return make_synthetic_catalog(specs, cfg.windows_per_class, window, cfg.fs_target, cfg.f0,
                                  derive_seed(seed, "roi"));
  }
  auto records = load_plaid_csv(cfg.plaid_root, cfg.plaid_meta);
  if (records.empty()) throw DataError("no PLAID records found under " + cfg.plaid_root);
  for (auto& rec : records) {
    try {
      rec.waveform = resample(rec.waveform, cfg.fs_target);
    } catch (const std::invalid_argument& e) {
      throw DataError(rec.source_path + ": " + e.what());
    }
  }
  auto catalog = make_splits(records, window, derive_seed(seed, "split"));
  if (catalog.n_classes() != cfg.n_classes) {
    throw DataError("dataset has " + std::to_string(catalog.n_classes()) +
                    " classes but the config says n_classes = " + std::to_string(cfg.n_classes));
  }
  return catalog;
}

}  // namespace

std::size_t ExperimentConfig::resolved_window() const {
  return window != 0 ? window : default_window_length(fs_target, f0);
}

std::string ExperimentConfig::resolved_dataset_name() const {
  if (!dataset_name.empty()) return dataset_name;
  return enum_name(kSources, source);
}

std::uint64_t ExperimentConfig::master_seed() const {
  if (!seed) throw ConfigError("config: 'seed' is required (no implicit randomness)");
  return *seed;
}

void ExperimentConfig::validate() const {
  master_seed();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(fs_target > 0.0 && f0 > 0.0, "fs_target and f0 must be positive");
  require(fs_target / f0 >= 8.0, "need at least 8 samples per period");
  require(resolved_window() >= 8, "window must be at least 8 samples");
  require(n_classes >= 1, "n_classes must be positive");
  require(resolved_k_max() <= n_classes, "k_max must not exceed n_classes");
  require(dup_max >= 1, "dup_max must be at least 1");
  require(inclusion_probability > 0.0 && inclusion_probability <= 1.0,
          "inclusion_probability must lie in (0, 1]");
  require(counts.train > 0 && counts.val > 0 && counts.test > 0, "counts must be positive");
  require(windows_per_class >= kMinWindowsPerClass,
          "windows_per_class must be at least " + std::to_string(kMinWindowsPerClass));
  require(synth_harmonics >= 1 && synth_noise >= 0.0, "bad synthetic class parameters");
  require(ica_tol > 0.0 && ica_max_iter > 0, "ica_tol and ica_max_iter must be positive");
  require(d_model > 0, "d_model must be positive");
  require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
  require(learning_rate >= 0.0 && batch_size > 0 && epochs > 0, "bad training parameters");
  require(knn_k > 0, "knn_k must be positive");
  require(paa_segments > 0 && paa_segments <= resolved_window(),
          "paa_segments must lie in [1, window]");
  if (source == DataSource::plaid) {
    require(!plaid_root.empty() && fs::is_directory(plaid_root),
            "plaid_root does not exist: '" + plaid_root + "'");
    require(!plaid_meta.empty() && fs::is_regular_file(plaid_meta),
            "plaid_meta does not exist: '" + plaid_meta + "'");
  }
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, const json&)>;
  const std::map<std::string, Setter> setters = {
      {"source", [&](auto& k, auto& v) { c.source = enum_value(kSources, k, v); }},
      {"dataset_name", [&](auto& k, auto& v) { c.dataset_name = typed<std::string>(k, v); }},
      {"plaid_root", [&](auto& k, auto& v) { c.plaid_root = typed<std::string>(k, v); }},
      {"plaid_meta", [&](auto& k, auto& v) { c.plaid_meta = typed<std::string>(k, v); }},
      {"fs_target", [&](auto& k, auto& v) { c.fs_target = typed<double>(k, v); }},
      {"f0", [&](auto& k, auto& v) { c.f0 = typed<double>(k, v); }},
      {"window", [&](auto& k, auto& v) { c.window = typed<std::size_t>(k, v); }},
      {"n_classes", [&](auto& k, auto& v) { c.n_classes = typed<std::size_t>(k, v); }},
      {"k_max", [&](auto& k, auto& v) { c.k_max = typed<std::size_t>(k, v); }},
      {"dup_max", [&](auto& k, auto& v) { c.dup_max = typed<std::size_t>(k, v); }},
      {"inclusion", [&](auto& k, auto& v) { c.inclusion = enum_value(kInclusion, k, v); }},
      {"inclusion_probability",
       [&](auto& k, auto& v) { c.inclusion_probability = typed<double>(k, v); }},
      {"counts",
       [&](auto& k, auto& v) {
         if (!v.is_array() || v.size() != 3) {
           throw ConfigError("config key 'counts' must be [train, val, test]");
         }
         c.counts = {typed<std::size_t>(k, v[0]), typed<std::size_t>(k, v[1]),
                     typed<std::size_t>(k, v[2])};
       }},
      {"windows_per_class",
       [&](auto& k, auto& v) { c.windows_per_class = typed<std::size_t>(k, v); }},
      {"synth_harmonics", [&](auto& k, auto& v) { c.synth_harmonics = typed<std::size_t>(k, v); }},
      {"synth_noise", [&](auto& k, auto& v) { c.synth_noise = typed<double>(k, v); }},
      {"seed",
       [&](auto& k, auto& v) {
         if (!v.is_null()) c.seed = typed<std::uint64_t>(k, v);
       }},
      {"feature", [&](auto& k, auto& v) { c.feature = enum_value(kFeatures, k, v); }},
      {"classifier", [&](auto& k, auto& v) { c.classifier = enum_value(kClassifiers, k, v); }},
      {"ica_fit_on", [&](auto& k, auto& v) { c.ica_fit_on = enum_value(kIcaFitData, k, v); }},
      {"ica_nonlinearity",
       [&](auto& k, auto& v) { c.ica_nonlinearity = parse_nonlinearity(typed<std::string>(k, v)); }},
      {"ica_tol", [&](auto& k, auto& v) { c.ica_tol = typed<double>(k, v); }},
      {"ica_max_iter", [&](auto& k, auto& v) { c.ica_max_iter = typed<int>(k, v); }},
      {"d_model", [&](auto& k, auto& v) { c.d_model = typed<std::size_t>(k, v); }},
      {"n_blocks", [&](auto& k, auto& v) { c.n_blocks = typed<std::size_t>(k, v); }},
      {"outer_relu", [&](auto& k, auto& v) { c.outer_relu = typed<bool>(k, v); }},
      {"threshold", [&](auto& k, auto& v) { c.threshold = typed<double>(k, v); }},
      {"learning_rate", [&](auto& k, auto& v) { c.learning_rate = typed<double>(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = typed<std::size_t>(k, v); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = typed<std::size_t>(k, v); }},
      {"patience", [&](auto& k, auto& v) { c.patience = typed<std::size_t>(k, v); }},
      {"knn_k", [&](auto& k, auto& v) { c.knn_k = typed<std::size_t>(k, v); }},
      {"paa_segments", [&](auto& k, auto& v) { c.paa_segments = typed<std::size_t>(k, v); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {
      {"source", enum_name(kSources, c.source)},
      {"dataset_name", c.resolved_dataset_name()},
      {"plaid_root", c.plaid_root},
      {"plaid_meta", c.plaid_meta},
      {"fs_target", c.fs_target},
      {"f0", c.f0},
      {"window", c.resolved_window()},
      {"n_classes", c.n_classes},
      {"k_max", c.resolved_k_max()},
      {"dup_max", c.dup_max},
      {"inclusion", enum_name(kInclusion, c.inclusion)},
      {"inclusion_probability", c.inclusion_probability},
      {"counts", {c.counts.train, c.counts.val, c.counts.test}},
      {"windows_per_class", c.windows_per_class},
      {"synth_harmonics", c.synth_harmonics},
      {"synth_noise", c.synth_noise},
      {"seed", c.seed ? json(*c.seed) : json(nullptr)},
      {"feature", enum_name(kFeatures, c.feature)},
      {"classifier", enum_name(kClassifiers, c.classifier)},
      {"ica_fit_on", enum_name(kIcaFitData, c.ica_fit_on)},
      {"ica_nonlinearity", to_string(c.ica_nonlinearity)},
      {"ica_tol", c.ica_tol},
      {"ica_max_iter", c.ica_max_iter},
      {"d_model", c.d_model},
      {"n_blocks", c.n_blocks},
      {"outer_relu", c.outer_relu},
      {"threshold", c.threshold},
      {"learning_rate", c.learning_rate},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"patience", c.patience},
      {"knn_k", c.knn_k},
      {"paa_segments", c.paa_segments},
  };
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;
  doc[key] = std::move(value);
}

ExperimentConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file.string());
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(file.string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  ExperimentConfig cfg = config_from_json(doc);
  cfg.validate();
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a(to_json(cfg).dump())); }

std::string model_name(FeatureMode feature, ClassifierKind classifier) {
  const char* prefix = "ICA";
  switch (feature) {
    case FeatureMode::ica: prefix = "ICA"; break;
    case FeatureMode::fryze: prefix = "Fryze"; break;
    case FeatureMode::fitps: prefix = "FIT-PS"; break;
    case FeatureMode::raw: prefix = "Raw"; break;
  }
  return std::string(prefix) + (classifier == ClassifierKind::resnetffn ? "+ResNetFFN" : "+k-NN");
}

Matrix FeaturePipeline::apply(const Matrix& windows) const {
  switch (mode) {
    case FeatureMode::ica:
      if (!ica) throw std::logic_error("feature pipeline: ICA model missing");
      return ica_transform(*ica, windows);
    case FeatureMode::fryze: return fryze_features(windows, paa_segments, fs, f0);
    case FeatureMode::fitps: return fitps_features(windows, fs, f0);
    case FeatureMode::raw: return windows;
  }
  return windows;
}

json to_json(const FeaturePipeline& p) {
  json j = {{"mode", enum_name(kFeatures, p.mode)},
            {"paa_segments", p.paa_segments},
            {"fs", p.fs},
            {"f0", p.f0}};
  if (p.ica) j["ica"] = to_json(*p.ica);
  return j;
}

FeaturePipeline feature_pipeline_from_json(const json& j) {
  FeaturePipeline p;
  p.mode = enum_value(kFeatures, "mode", j.at("mode"));
  p.paa_segments = j.at("paa_segments").get<std::size_t>();
  p.fs = j.at("fs").get<double>();
  p.f0 = j.at("f0").get<double>();
  if (j.contains("ica")) p.ica = unmixing_from_json(j.at("ica"));
  return p;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,train_f1,val_f1\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss)
        << ',' << format_double(r.train_f1) << ',' << format_double(r.val_f1) << '\n';
  }
  return out.str();
}

SynthSummary cmd_synth(const ExperimentConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const std::uint64_t seed = cfg.master_seed();

  const SplitCatalog catalog = build_catalog(cfg, seed);
  AggregateOptions opts;
  opts.n_classes = cfg.n_classes;
  opts.k_max = cfg.resolved_k_max();
  opts.dup_max = cfg.dup_max;
  opts.mode = cfg.inclusion;
  opts.inclusion_probability = cfg.inclusion_probability;
  const AggregateDataset ds = build_dataset(catalog, cfg.counts, opts, derive_seed(seed, "synth"));

  SynthSummary summary{config_hash(cfg), ds.train.size(), ds.val.size(), ds.test.size()};
  write_aggregates_jsonl(out_dir / "train.jsonl", ds.train);
  write_aggregates_jsonl(out_dir / "val.jsonl", ds.val);
  write_aggregates_jsonl(out_dir / "test.jsonl", ds.test);
  write_pool_jsonl(out_dir / "pool_train.jsonl", catalog.train);

  const json manifest = {
      {"format", "disagg-dataset"},
      {"version", kFormatVersion},
      {"config_hash", summary.config_hash},
      {"seed", seed},
      {"dataset_name", cfg.resolved_dataset_name()},
      {"n_classes", cfg.n_classes},
      {"class_names", catalog.class_names},
      {"window", cfg.resolved_window()},
      {"fs", cfg.fs_target},
      {"f0", cfg.f0},
      {"counts", {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}}},
      {"pool_sizes",
       {{"train", catalog.train.size()}, {"val", catalog.val.size()}, {"test", catalog.test.size()}}},
      {"config", to_json(cfg)},
  };
  write_text(out_dir / kManifestName, manifest.dump(2) + "\n");
  return summary;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir,
                       const fs::path& out_dir) {
  cfg.validate();
  const Manifest manifest = read_manifest(data_dir);
  if (manifest.n_classes != cfg.n_classes) {
    throw DataError("dataset has " + std::to_string(manifest.n_classes) +
                    " classes but the config says n_classes = " + std::to_string(cfg.n_classes));
  }
  if (manifest.window != cfg.resolved_window()) {
    throw DataError("dataset windows have " + std::to_string(manifest.window) +
                    " samples but the config says window = " +
                    std::to_string(cfg.resolved_window()));
  }
  ensure_dir(out_dir);
  const std::uint64_t seed = cfg.master_seed();

  const auto train_samples = read_split(data_dir, "train", manifest);
  const auto val_samples = read_split(data_dir, "val", manifest);
  const Matrix train_windows = stack_windows(train_samples);
  const BinaryMatrix y_train = stack_labels(train_samples);
  const Matrix val_windows = stack_windows(val_samples);
  const BinaryMatrix y_val = stack_labels(val_samples);

  FeaturePipeline pipeline;
  pipeline.mode = cfg.feature;
  pipeline.paa_segments = cfg.paa_segments;
  pipeline.fs = manifest.fs;
  pipeline.f0 = manifest.f0;
  TrainSummary summary;
  if (cfg.feature == FeatureMode::ica) {
    IcaOptions ica;
    ica.n_components = cfg.n_classes + 1;
    ica.nonlinearity = cfg.ica_nonlinearity;
    ica.tol = cfg.ica_tol;
    ica.max_iter = cfg.ica_max_iter;
    ica.seed = derive_seed(seed, "ica");
    const Matrix fit_data = cfg.ica_fit_on == IcaFitData::aggregates
                                ? train_windows
                                : stack_windows(read_pool_jsonl(data_dir / "pool_train.jsonl"));
    pipeline.ica = fit_ica(fit_data, ica);
    summary.ica_converged = pipeline.ica->converged;
    if (!pipeline.ica->converged) {
      std::cerr << "warning: FastICA did not converge in " << cfg.ica_max_iter << " iterations\n";
    }
  }
  const Matrix f_train = pipeline.apply(train_windows);
  const Matrix f_val = pipeline.apply(val_windows);

  json ckpt = {
      {"format", kCheckpointFormat},
      {"version", kFormatVersion},
      {"classifier", enum_name(kClassifiers, cfg.classifier)},
      {"model_name", model_name(cfg.feature, cfg.classifier)},
      {"dataset_name", manifest.dataset_name},
      {"n_classes", cfg.n_classes},
      {"config", to_json(cfg)},
      {"config_hash", config_hash(cfg)},
      {"data_hash", manifest.config_hash},
      {"features", to_json(pipeline)},
  };

  std::vector<EpochRecord> history;
  if (cfg.classifier == ClassifierKind::resnetffn) {
    ResNetHyper hyper;
    hyper.n_inputs = static_cast<std::size_t>(f_train.cols());
    hyper.d_model = cfg.d_model;
    hyper.n_blocks = cfg.n_blocks;
    hyper.n_classes = cfg.n_classes;
    hyper.outer_relu = cfg.outer_relu;
    hyper.threshold = cfg.threshold;
    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;
    tc.epochs = cfg.epochs;
    tc.patience = cfg.patience;
    tc.seed = seed;
    TrainResult result = train(ResNetFFN::initialized(hyper, seed), LabelledSet{f_train, y_train},
                               LabelledSet{f_val, y_val}, tc);
    history = std::move(result.history);
    summary.best_epoch = result.best_epoch;
    ckpt["resnet"] = to_json(result.model);
    ckpt["best_epoch"] = result.best_epoch;
    ckpt["stopped_early"] = result.stopped_early;
  } else {
    const KnnModel knn{f_train, y_train, cfg.knn_k};
    if (knn.k > static_cast<std::size_t>(f_train.rows())) {
      throw ConfigError("knn_k exceeds the number of training samples");
    }
    ckpt["knn"] = to_json(knn);
  }
  json jh = json::array();
  for (const auto& r : history) {
    jh.push_back({{"epoch", r.epoch},
                  {"train_loss", r.train_loss},
                  {"val_loss", r.val_loss},
                  {"train_f1", r.train_f1},
                  {"val_f1", r.val_f1}});
  }
  ckpt["history"] = std::move(jh);

  summary.checkpoint = out_dir / "model.ckpt";
  summary.history = out_dir / "history.csv";
  summary.epochs_run = history.size();
  const std::vector<std::uint8_t> bytes = json::to_cbor(ckpt);
  {
    auto out = open_for_write(summary.checkpoint, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + summary.checkpoint.string());
  }
  write_text(summary.history, history_csv(history));
  return summary;
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& data_dir, const std::string& split,
                    const fs::path& out_dir, bool force) {
  std::ifstream in(checkpoint, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + checkpoint.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  json ckpt;
  try {
    ckpt = json::from_cbor(bytes);
    if (ckpt.at("format") != kCheckpointFormat) throw DataError("not a disagg checkpoint");
    if (ckpt.at("version").get<int>() != kFormatVersion) {
      throw DataError("unsupported checkpoint version " + ckpt.at("version").dump());
    }
  } catch (const json::exception& e) {
    throw DataError(checkpoint.string() + ": " + e.what());
  }

  const Manifest manifest = read_manifest(data_dir);
  const auto data_hash = ckpt.at("data_hash").get<std::string>();
  if (data_hash != manifest.config_hash && !force) {
    throw DataError("checkpoint was trained on dataset " + data_hash + " but " +
                    data_dir.string() + " is " + manifest.config_hash + " (use --force to override)");
  }
  if (ckpt.at("n_classes").get<std::size_t>() != manifest.n_classes) {
    throw DataError("checkpoint predicts " + ckpt.at("n_classes").dump() +
                    " classes but the dataset has " + std::to_string(manifest.n_classes));
  }
  ensure_dir(out_dir);

  const auto samples = read_split(data_dir, split, manifest);
  const BinaryMatrix y_true = stack_labels(samples);
  const FeaturePipeline pipeline = feature_pipeline_from_json(ckpt.at("features"));
  const Matrix features = pipeline.apply(stack_windows(samples));

  Matrix scores;
  BinaryMatrix y_pred;
  if (ckpt.at("classifier") == "resnetffn") {
    const ResNetFFN model = resnet_from_json(ckpt.at("resnet"));
    scores = model.forward(features);
    y_pred = predict(scores, model.hyper().threshold);
  } else {
    const KnnModel knn = knn_from_json(ckpt.at("knn"));
    scores = knn_scores(knn, features);
    y_pred = knn_predict(knn, features);
  }

  EvalReport report = make_report(ckpt.at("model_name").get<std::string>(), manifest.dataset_name,
                                  y_true, y_pred, bce_loss(scores, y_true));
  report.split = split;
  report.config_hash = ckpt.at("config_hash").get<std::string>();
  report.data_hash = manifest.config_hash;

  write_text(out_dir / "report.json", to_json(report).dump(2) + "\n");
  const EvalReport single[] = {report};
  write_text(out_dir / "report.csv", to_csv(compare_models(single)));
  write_text(out_dir / "per_k.csv", per_k_csv(report));
  return report;
}

ComparisonTable cmd_compare(const std::vector<fs::path>& reports, const fs::path& out_dir) {
  if (reports.empty()) throw ConfigError("compare: no reports given");
  std::vector<EvalReport> loaded;
  for (const auto& path : reports) {
    const fs::path file = fs::is_directory(path) ? path / "report.json" : path;
    try {
      loaded.push_back(report_from_json(read_json_file(file)));
    } catch (const json::exception& e) {
      throw DataError(file.string() + ": " + e.what());
    }
  }
  ComparisonTable table;
  try {
    table = compare_models(loaded);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  ensure_dir(out_dir);
  write_text(out_dir / "report.csv", to_csv(table));
  write_text(out_dir / "comparison.json", to_json(table).dump(2) + "\n");
  return table;
}

}  // namespace disagg
