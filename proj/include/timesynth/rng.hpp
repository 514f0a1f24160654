#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace timesynth {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Counter-based child seed: the same (parent, index) always yields the same
// child, and children of one parent do not depend on how many siblings exist.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

// Child seed keyed by a label (e.g. a family or model name).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

Engine make_engine(std::uint64_t seed);

}  // namespace timesynth
