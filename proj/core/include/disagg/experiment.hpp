#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "disagg/eval.hpp"
#include "disagg/ica.hpp"
#include "disagg/model.hpp"
#include "disagg/synth.hpp"

namespace disagg {

enum class DataSource { synthetic, plaid };
enum class FeatureMode { ica, fryze, fitps, raw };
enum class ClassifierKind { resnetffn, knn };
enum class IcaFitData { aggregates, standalone };

/// Everything an experiment needs, as one flat typed key-value document.
/// Keys mirror the member names; see README for the list.
struct ExperimentConfig {
  DataSource source = DataSource::synthetic;
  std::string dataset_name;  // defaults to "synthetic" / "plaid"
  std::string plaid_root;
  std::string plaid_meta;

  double fs_target = 3000.0;
  double f0 = 60.0;
  std::size_t window = 0;  // 0: one period, round(fs_target / f0)

  std::size_t n_classes = 16;
  std::size_t k_max = 0;  // 0: n_classes
  std::size_t dup_max = 10;
  InclusionMode inclusion = InclusionMode::uniform_k;
  double inclusion_probability = 0.5;
  SplitCounts counts;

  std::size_t windows_per_class = 1200;
  std::size_t synth_harmonics = 6;
  double synth_noise = 0.05;

  std::optional<std::uint64_t> seed;

  FeatureMode feature = FeatureMode::ica;
  ClassifierKind classifier = ClassifierKind::resnetffn;

  IcaFitData ica_fit_on = IcaFitData::aggregates;
  Nonlinearity ica_nonlinearity = Nonlinearity::logcosh;
  double ica_tol = 1e-4;
  int ica_max_iter = 200;

  std::size_t d_model = 64;
  std::size_t n_blocks = 15;
  bool outer_relu = true;
  double threshold = 0.5;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::size_t patience = 10;

  std::size_t knn_k = 5;
  std::size_t paa_segments = 50;

  std::size_t resolved_window() const;
  std::size_t resolved_k_max() const noexcept { return k_max == 0 ? n_classes : k_max; }
  std::string resolved_dataset_name() const;
  std::uint64_t master_seed() const;  // throws ConfigError when unset

  /// Throws ConfigError on out-of-range values, a missing seed or missing
  /// dataset paths.
  void validate() const;
};

/// Unknown keys and type mismatches raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Applies "key=value" to a config document. The value is read as JSON
/// when it parses, otherwise as a string.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads a config file (may be empty path for defaults), applies overrides
/// in order and validates. Precedence: overrides > file > defaults.
ExperimentConfig load_config(const std::filesystem::path& file,
                             const std::vector<std::string>& overrides = {});

/// 16 hex digits of FNV-1a over the canonical JSON of the resolved config.
std::string config_hash(const ExperimentConfig& cfg);

std::string model_name(FeatureMode feature, ClassifierKind classifier);

/// Frozen feature map applied in front of a classifier.
struct FeaturePipeline {
  FeatureMode mode = FeatureMode::ica;
  std::optional<UnmixingModel> ica;
  std::size_t paa_segments = 50;
  double fs = 3000.0;
  double f0 = 60.0;

  Matrix apply(const Matrix& windows) const;
};

nlohmann::json to_json(const FeaturePipeline& p);
FeaturePipeline feature_pipeline_from_json(const nlohmann::json& j);

struct SynthSummary {
  std::string config_hash;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
};

/// Writes manifest.json, {train,val,test}.jsonl and pool_train.jsonl
/// (standalone training windows) into out_dir.
SynthSummary cmd_synth(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  bool ica_converged = true;
};

/// Fits the feature pipeline on the training split, trains the configured
/// classifier and writes model.ckpt (CBOR) and history.csv to out_dir.
TrainSummary cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& data_dir,
                       const std::filesystem::path& out_dir);

/// Scores one split and writes report.json, report.csv and per_k.csv.
/// Refuses a checkpoint trained on a different dataset archive unless
/// `force` is set.
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                    const std::string& split, const std::filesystem::path& out_dir,
                    bool force = false);

/// Reads report.json files (or directories holding one) and writes
/// report.csv and comparison.json.
ComparisonTable cmd_compare(const std::vector<std::filesystem::path>& reports,
                            const std::filesystem::path& out_dir);

/// History rows "epoch,train_loss,val_loss,train_f1,val_f1".
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace disagg
