#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "disagg/ingest.hpp"
#include "disagg/synth.hpp"
#include "disagg/types.hpp"

namespace disagg {

// One aggregate per line: {"x": [W floats], "y": [n_classes bits], "k": int}.
void write_aggregates_jsonl(const std::filesystem::path& file,
                            std::span<const AggregateSample> samples);
std::vector<AggregateSample> read_aggregates_jsonl(const std::filesystem::path& file);

// One standalone window per line: {"x": [...], "c": class_id, "uid": id}.
void write_pool_jsonl(const std::filesystem::path& file, std::span<const SplitEntry> entries);
std::vector<SplitEntry> read_pool_jsonl(const std::filesystem::path& file);

Matrix stack_windows(std::span<const AggregateSample> samples);
Matrix stack_windows(std::span<const SplitEntry> entries);
BinaryMatrix stack_labels(std::span<const AggregateSample> samples);

}  // namespace disagg
