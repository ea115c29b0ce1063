#include "disagg/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "disagg/errors.hpp"
#include "disagg/rng.hpp"

namespace disagg {
namespace fs = std::filesystem;
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

void read_current_voltage_csv(const fs::path& file, std::vector<double>& current,
                              std::vector<double>& voltage) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  current.clear();
  voltage.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    double i = 0.0;
    double v = 0.0;
    if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos ||
        !parse_double(row.substr(0, comma), i) || !parse_double(row.substr(comma + 1), v)) {
      throw DataError(file.string() + ":" + std::to_string(line_no) +
                      ": expected two numeric columns 'current,voltage', got '" + line + "'");
    }
    current.push_back(i);
    voltage.push_back(v);
  }
}

std::vector<ApplianceRecord> load_plaid_csv(const fs::path& root, const fs::path& meta) {
  if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root.string());
  std::ifstream meta_in(meta);
  if (!meta_in) throw DataError("cannot open metadata file " + meta.string());
  nlohmann::json labels;
  try {
    meta_in >> labels;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("metadata " + meta.string() + ": " + e.what());
  }
  if (!labels.is_object()) throw DataError("metadata " + meta.string() + " must be a JSON object");

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path().lexically_relative(root).generic_string());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<std::pair<std::string, std::string>> labelled;  // (file, class)
  std::set<std::string> class_set;
  for (const auto& f : files) {
    const auto it = labels.find(f);
    if (it == labels.end() || !it->is_string()) {
      std::cerr << "warning: no metadata entry for " << f << "; skipping\n";
      continue;
    }
    labelled.emplace_back(f, it->get<std::string>());
    class_set.insert(it->get<std::string>());
  }
  if (labelled.empty()) {
    std::cerr << "warning: no labelled CSV files under " << root.string() << "\n";
    return {};
  }

  std::map<std::string, int> class_ids;
  for (const auto& name : class_set) class_ids.emplace(name, static_cast<int>(class_ids.size()));

  std::vector<ApplianceRecord> records;
  records.reserve(labelled.size());
  for (const auto& [file, name] : labelled) {
    ApplianceRecord rec;
    rec.class_id = class_ids.at(name);
    rec.class_name = name;
    rec.source_path = file;
    read_current_voltage_csv(root / file, rec.waveform.current, rec.waveform.voltage);
    rec.waveform.fs = kPlaidSampleRate;
    rec.waveform.f0 = kPlaidGridFrequency;
    try {
      rec.waveform.validate();
    } catch (const std::invalid_argument& e) {
      throw DataError(file + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

SplitCatalog make_splits(std::vector<SplitEntry> entries, std::vector<std::string> class_names,
                         std::uint64_t seed, SplitFractions fractions) {
  const std::size_t n_classes = class_names.size();
  std::vector<std::vector<SplitEntry>> by_class(n_classes);
  for (auto& e : entries) {
    if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= n_classes) {
      throw DataError("split: class id " + std::to_string(e.class_id) + " out of range");
    }
    by_class[static_cast<std::size_t>(e.class_id)].push_back(std::move(e));
  }

  SplitCatalog catalog;
  catalog.fractions = fractions;
  catalog.seed = seed;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& pool = by_class[c];
    if (pool.size() < kMinWindowsPerClass) {
      throw DataError("split: class '" + class_names[c] + "' has " + std::to_string(pool.size()) +
                      " windows; at least " + std::to_string(kMinWindowsPerClass) + " required");
    }
    // Canonical order first so the shuffle depends only on content and seed.
    std::sort(pool.begin(), pool.end(),
              [](const SplitEntry& a, const SplitEntry& b) { return a.uid < b.uid; });
    Rng rng(derive_seed(seed, "split", c));
    std::shuffle(pool.begin(), pool.end(), rng);

    const double n = static_cast<double>(pool.size());
    const auto n_train = static_cast<std::size_t>(std::llround(fractions.train * n));
    const auto n_val = std::min(static_cast<std::size_t>(std::llround(fractions.val * n)),
                                pool.size() - n_train);
    auto first = std::make_move_iterator(pool.begin());
    auto mid1 = first + static_cast<std::ptrdiff_t>(n_train);
    auto mid2 = mid1 + static_cast<std::ptrdiff_t>(n_val);
    auto last = std::make_move_iterator(pool.end());
    catalog.train.insert(catalog.train.end(), first, mid1);
    catalog.val.insert(catalog.val.end(), mid1, mid2);
    catalog.test.insert(catalog.test.end(), mid2, last);
  }
  catalog.class_names = std::move(class_names);
  return catalog;
}

SplitCatalog make_splits(const std::vector<ApplianceRecord>& records, std::size_t window_length,
                         std::uint64_t seed) {
  std::map<int, std::string> names;
  std::vector<SplitEntry> entries;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto [it, inserted] = names.emplace(rec.class_id, rec.class_name);
    if (!inserted && it->second != rec.class_name) {
      throw DataError("split: class id " + std::to_string(rec.class_id) + " maps to both '" +
                      it->second + "' and '" + rec.class_name + "'");
    }
    for (auto& w : extract_windows(rec.waveform, window_length, WindowAlign::zero_crossing)) {
      const std::uint64_t uid = (static_cast<std::uint64_t>(r) << 32) | w.origin;
      entries.push_back(SplitEntry{rec.class_id, std::move(w), uid});
    }
  }
  std::vector<std::string> class_names;
  for (const auto& [id, name] : names) {
    if (id != static_cast<int>(class_names.size())) {
      throw DataError("split: class ids must be contiguous from 0 (missing id " +
                      std::to_string(class_names.size()) + ")");
    }
    class_names.push_back(name);
  }
  return make_splits(std::move(entries), std::move(class_names), seed);
}

}  // namespace disagg
