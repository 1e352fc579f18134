#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace biadapt {

using Rng = std::mt19937_64;

/// Derive an independent seed for a named sub-stream (split, batches,
/// negatives, init, ...) plus an optional index, so a single user seed
/// fans out reproducibly.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
    return Rng(substream_seed(seed, stream, index));
}

} // namespace biadapt
