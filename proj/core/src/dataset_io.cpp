#include "disagg/dataset_io.hpp"

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "disagg/errors.hpp"

namespace disagg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

template <typename F>
void for_each_line(const fs::path& file, F&& f) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

void write_aggregates_jsonl(const fs::path& file, std::span<const AggregateSample> samples) {
  auto out = open_out(file);
  for (const auto& s : samples) {
    json j;
    j["x"] = s.x;
    j["y"] = s.y;
    j["k"] = s.cardinality;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + file.string());
}

std::vector<AggregateSample> read_aggregates_jsonl(const fs::path& file) {
  std::vector<AggregateSample> samples;
  for_each_line(file, [&](const json& j) {
    AggregateSample s;
    j.at("x").get_to(s.x);
    j.at("y").get_to(s.y);
    s.cardinality = j.at("k").get<int>();
    int sum = 0;
    for (auto b : s.y) {
      if (b > 1) throw DataError(file.string() + ": label entries must be 0 or 1");
      sum += b;
    }
    if (sum != s.cardinality) {
      throw DataError(file.string() + ": k = " + std::to_string(s.cardinality) +
                      " disagrees with sum(y) = " + std::to_string(sum));
    }
    if (!samples.empty() &&
        (s.x.size() != samples.front().x.size() || s.y.size() != samples.front().y.size())) {
      throw DataError(file.string() + ": inconsistent row shapes");
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

void write_pool_jsonl(const fs::path& file, std::span<const SplitEntry> entries) {
  auto out = open_out(file);
  for (const auto& e : entries) {
    json j;
    j["x"] = e.window.samples;
    j["c"] = e.class_id;
    j["uid"] = e.uid;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("write failed: " + file.string());
}

std::vector<SplitEntry> read_pool_jsonl(const fs::path& file) {
  std::vector<SplitEntry> entries;
  for_each_line(file, [&](const json& j) {
    SplitEntry e;
    j.at("x").get_to(e.window.samples);
    e.class_id = j.at("c").get<int>();
    e.uid = j.at("uid").get<std::uint64_t>();
    entries.push_back(std::move(e));
  });
  return entries;
}

Matrix stack_windows(std::span<const AggregateSample> samples) {
  if (samples.empty()) return {};
  Matrix X(static_cast<Eigen::Index>(samples.size()),
           static_cast<Eigen::Index>(samples.front().x.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& x = samples[static_cast<std::size_t>(i)].x;
    if (static_cast<Eigen::Index>(x.size()) != X.cols()) throw DataError("ragged windows");
    X.row(i) = Eigen::Map<const RowVector>(x.data(), X.cols());
  }
  return X;
}

Matrix stack_windows(std::span<const SplitEntry> entries) {
  if (entries.empty()) return {};
  Matrix X(static_cast<Eigen::Index>(entries.size()),
           static_cast<Eigen::Index>(entries.front().window.length()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto& x = entries[static_cast<std::size_t>(i)].window.samples;
    if (static_cast<Eigen::Index>(x.size()) != X.cols()) throw DataError("ragged windows");
    X.row(i) = Eigen::Map<const RowVector>(x.data(), X.cols());
  }
  return X;
}

BinaryMatrix stack_labels(std::span<const AggregateSample> samples) {
  if (samples.empty()) return {};
  BinaryMatrix Y(static_cast<Eigen::Index>(samples.size()),
                 static_cast<Eigen::Index>(samples.front().y.size()));
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const auto& y = samples[static_cast<std::size_t>(i)].y;
    if (static_cast<Eigen::Index>(y.size()) != Y.cols()) throw DataError("ragged labels");
    for (Eigen::Index c = 0; c < Y.cols(); ++c) Y(i, c) = y[static_cast<std::size_t>(c)];
  }
  return Y;
}

}  // namespace disagg
