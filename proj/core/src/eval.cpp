#include "disagg/eval.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

#include "disagg/errors.hpp"

namespace disagg {
namespace {

void check_shapes(const BinaryMatrix& a, const BinaryMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("f1: y_true is " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " but y_pred is " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

double sample_f1(const BinaryMatrix& y_true, const BinaryMatrix& y_pred, Eigen::Index i) {
  long both = 0;
  long n_true = 0;
  long n_pred = 0;
  for (Eigen::Index c = 0; c < y_true.cols(); ++c) {
    const bool t = y_true(i, c) != 0;
    const bool p = y_pred(i, c) != 0;
    both += t && p;
    n_true += t;
    n_pred += p;
  }
  if (n_true + n_pred == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(n_true + n_pred);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double f1_samples(const BinaryMatrix& y_true, const BinaryMatrix& y_pred) {
  check_shapes(y_true, y_pred);
  if (y_true.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) total += sample_f1(y_true, y_pred, i);
  return total / static_cast<double>(y_true.rows());
}

double f1_micro(const BinaryMatrix& y_true, const BinaryMatrix& y_pred) {
  check_shapes(y_true, y_pred);
  const auto t = y_true.cast<long>().array();
  const auto p = y_pred.cast<long>().array();
  const long both = (t * p).sum();
  const long denom = t.sum() + p.sum();
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(both) / static_cast<double>(denom);
}

std::map<std::size_t, CardinalityScore> f1_by_cardinality(const BinaryMatrix& y_true,
                                                          const BinaryMatrix& y_pred) {
  check_shapes(y_true, y_pred);
  std::map<std::size_t, std::pair<double, std::size_t>> sums;
  for (Eigen::Index i = 0; i < y_true.rows(); ++i) {
    const auto k = static_cast<std::size_t>(y_true.row(i).cast<long>().sum());
    auto& [total, count] = sums[k];
    total += sample_f1(y_true, y_pred, i);
    ++count;
  }
  std::map<std::size_t, CardinalityScore> out;
  for (const auto& [k, s] : sums) {
    out[k] = CardinalityScore{s.first / static_cast<double>(s.second), s.second};
  }
  return out;
}

EvalReport make_report(std::string model_name, std::string dataset_name,
                       const BinaryMatrix& y_true, const BinaryMatrix& y_pred, double loss) {
  EvalReport r;
  r.model_name = std::move(model_name);
  r.dataset_name = std::move(dataset_name);
  r.f1_overall = f1_samples(y_true, y_pred);
  r.f1_by_k = f1_by_cardinality(y_true, y_pred);
  r.loss = loss;
  r.n_samples = static_cast<std::size_t>(y_true.rows());
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& [k, s] : r.f1_by_k) per_k.push_back({{"k", k}, {"f1", s.f1}, {"count", s.count}});
  return {{"model", r.model_name},   {"dataset", r.dataset_name},
          {"split", r.split},        {"f1_overall", r.f1_overall},
          {"loss", r.loss},          {"n_samples", r.n_samples},
          {"f1_by_k", per_k},        {"config_hash", r.config_hash},
          {"data_hash", r.data_hash}};
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.model_name = j.at("model").get<std::string>();
  r.dataset_name = j.at("dataset").get<std::string>();
  r.f1_overall = j.at("f1_overall").get<double>();
  r.loss = j.value("loss", 0.0);
  r.n_samples = j.value("n_samples", std::size_t{0});
  r.split = j.value("split", std::string{});
  r.config_hash = j.value("config_hash", std::string{});
  r.data_hash = j.value("data_hash", std::string{});
  if (j.contains("f1_by_k")) {
    for (const auto& e : j.at("f1_by_k")) {
      r.f1_by_k[e.at("k").get<std::size_t>()] =
          CardinalityScore{e.at("f1").get<double>(), e.at("count").get<std::size_t>()};
    }
  }
  return r;
}

std::string per_k_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "k,f1,count\n";
  for (const auto& [k, s] : report.f1_by_k) {
    out << k << ',' << format_double(s.f1) << ',' << s.count << '\n';
  }
  return out.str();
}

std::optional<double> ComparisonTable::at(const std::string& model,
                                          const std::string& dataset) const {
  const auto it = cells.find({model, dataset});
  if (it == cells.end()) return std::nullopt;
  return it->second;
}

ComparisonTable compare_models(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("compare_models: no reports");
  ComparisonTable table;
  for (const auto& r : reports) {
    if (!table.cells.emplace(std::make_pair(r.model_name, r.dataset_name), r.f1_overall).second) {
      throw std::invalid_argument("compare_models: duplicate report for model '" + r.model_name +
                                  "' on dataset '" + r.dataset_name + "'");
    }
    if (std::find(table.models.begin(), table.models.end(), r.model_name) == table.models.end()) {
      table.models.push_back(r.model_name);
    }
    if (std::find(table.datasets.begin(), table.datasets.end(), r.dataset_name) ==
        table.datasets.end()) {
      table.datasets.push_back(r.dataset_name);
    }
  }
  return table;
}

std::string to_csv(const ComparisonTable& table) {
  std::ostringstream out;
  out << "model";
  for (const auto& d : table.datasets) out << ',' << csv_field(d);
  out << '\n';
  for (const auto& m : table.models) {
    out << csv_field(m);
    for (const auto& d : table.datasets) {
      out << ',';
      if (const auto v = table.at(m, d)) out << format_double(*v);
    }
    out << '\n';
  }
  return out.str();
}

ComparisonTable table_from_csv(std::string_view csv) {
  const auto rows = parse_csv(csv);
  if (rows.empty() || rows.front().empty() || rows.front().front() != "model") {
    throw DataError("comparison csv: missing 'model' header");
  }
  ComparisonTable table;
  table.datasets.assign(rows.front().begin() + 1, rows.front().end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != table.datasets.size() + 1) {
      throw DataError("comparison csv: row " + std::to_string(r + 1) + " has wrong width");
    }
    table.models.push_back(row.front());
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c].empty()) continue;
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(row[c].data(), row[c].data() + row[c].size(), v);
      if (ec != std::errc{} || ptr != row[c].data() + row[c].size()) {
        throw DataError("comparison csv: bad number '" + row[c] + "'");
      }
      table.cells[{row.front(), table.datasets[c - 1]}] = v;
    }
  }
  return table;
}

nlohmann::json to_json(const ComparisonTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : table.models) {
    nlohmann::json scores = nlohmann::json::object();
    for (const auto& d : table.datasets) {
      if (const auto v = table.at(m, d)) scores[d] = *v;
    }
    rows.push_back({{"model", m}, {"f1", scores}});
  }
  return {{"datasets", table.datasets}, {"rows", rows}};
}

ComparisonTable table_from_json(const nlohmann::json& j) {
  ComparisonTable table;
  table.datasets = j.at("datasets").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    const auto model = row.at("model").get<std::string>();
    table.models.push_back(model);
    for (const auto& [dataset, value] : row.at("f1").items()) {
      table.cells[{model, dataset}] = value.get<double>();
    }
  }
  return table;
}

}  // namespace disagg
