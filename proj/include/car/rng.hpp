#pragma once

#include <cstdint>
#include <random>

namespace car {

using Rng = std::mt19937_64;

/// Engine for substream `stream` of `seed`. The state depends only on the
/// pair, so replicate k draws the same numbers under any thread count.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace car
