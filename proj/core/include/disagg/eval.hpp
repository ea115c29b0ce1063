#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "disagg/types.hpp"

namespace disagg {

/// Mean over samples of 2|y ^ y_hat| / (|y| + |y_hat|). A sample with both
/// sets empty scores 1; an empty prediction against a non-empty truth
/// scores 0. Throws std::invalid_argument on a shape mismatch.
double f1_samples(const BinaryMatrix& y_true, const BinaryMatrix& y_pred);

/// Micro-averaged F1 over all (sample, label) cells.
double f1_micro(const BinaryMatrix& y_true, const BinaryMatrix& y_pred);

struct CardinalityScore {
  double f1 = 0.0;
  std::size_t count = 0;
};

/// Samples grouped by k = sum of the true row, f1_samples within each group.
std::map<std::size_t, CardinalityScore> f1_by_cardinality(const BinaryMatrix& y_true,
                                                          const BinaryMatrix& y_pred);

struct EvalReport {
  std::string model_name;
  std::string dataset_name;
  double f1_overall = 0.0;
  std::map<std::size_t, CardinalityScore> f1_by_k;
  double loss = 0.0;
  std::size_t n_samples = 0;
  std::string split;
  std::string config_hash;
  std::string data_hash;
};

EvalReport make_report(std::string model_name, std::string dataset_name,
                       const BinaryMatrix& y_true, const BinaryMatrix& y_pred, double loss);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// "k,f1,count" rows, ascending k.
std::string per_k_csv(const EvalReport& report);

/// Rows are models and columns datasets, in order of first appearance;
/// cells hold f1_overall.
struct ComparisonTable {
  std::vector<std::string> models;
  std::vector<std::string> datasets;
  std::map<std::pair<std::string, std::string>, double> cells;

  std::optional<double> at(const std::string& model, const std::string& dataset) const;
  bool operator==(const ComparisonTable&) const = default;
};

/// Throws std::invalid_argument on an empty list or a duplicate
/// (model, dataset) pair.
ComparisonTable compare_models(std::span<const EvalReport> reports);

/// Header "model,<dataset>...", one row per model, empty cell when absent.
std::string to_csv(const ComparisonTable& table);
ComparisonTable table_from_csv(std::string_view csv);

nlohmann::json to_json(const ComparisonTable& table);
ComparisonTable table_from_json(const nlohmann::json& j);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace disagg
