#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "disagg/waveform.hpp"

namespace disagg {

struct ApplianceRecord {
  int class_id = 0;
  std::string class_name;
  Waveform waveform;
  std::string source_path;  // relative to the dataset root
};

/// One standalone region of interest in a split pool.
struct SplitEntry {
  int class_id = 0;
  Window window;
  std::uint64_t uid = 0;  // unique across the whole catalog
};

struct SplitFractions {
  double train = 0.70;
  double val = 0.10;
  double test = 0.20;
};

struct SplitCatalog {
  std::vector<SplitEntry> train;
  std::vector<SplitEntry> val;
  std::vector<SplitEntry> test;
  std::vector<std::string> class_names;
  SplitFractions fractions;
  std::uint64_t seed = 0;

  std::size_t n_classes() const noexcept { return class_names.size(); }
};

inline constexpr double kPlaidSampleRate = 30000.0;
inline constexpr double kPlaidGridFrequency = 60.0;
inline constexpr std::size_t kMinWindowsPerClass = 10;

/// Loads every `*.csv` under `root` (headerless `current,voltage` rows).
/// `meta` is a JSON object mapping the file path relative to `root` to a
/// class name. Class ids follow sorted class-name order. Files without a
/// metadata entry are skipped with a warning; malformed rows raise
/// DataError naming file and line.
std::vector<ApplianceRecord> load_plaid_csv(const std::filesystem::path& root,
                                            const std::filesystem::path& meta);

/// Reads one headerless two-column CSV. Throws DataError on bad rows.
void read_current_voltage_csv(const std::filesystem::path& file, std::vector<double>& current,
                              std::vector<double>& voltage);

/// Stratified, seeded 70/10/20 split of zero-crossing aligned windows of
/// length `window_length` cut from every record.
SplitCatalog make_splits(const std::vector<ApplianceRecord>& records, std::size_t window_length,
                         std::uint64_t seed);

/// Same split rule over already-cut windows. `class_names.size()` is the
/// class count; each class needs at least kMinWindowsPerClass windows.
SplitCatalog make_splits(std::vector<SplitEntry> entries, std::vector<std::string> class_names,
                         std::uint64_t seed, SplitFractions fractions = {});

}  // namespace disagg
