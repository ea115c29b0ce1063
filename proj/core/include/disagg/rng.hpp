#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace disagg {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for a named substream ("split", "synth", "init", "batching", ...)
/// of a master seed. Substreams are independent of each other, so one
/// component can be re-seeded without disturbing the rest.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) noexcept;

/// Seed for the index-th item of a named substream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t index) noexcept;

}  // namespace disagg
