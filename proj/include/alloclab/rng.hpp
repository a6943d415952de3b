#pragma once

#include <cstdint>
#include <random>

namespace alloclab {

using Rng = std::mt19937_64;

/// Derive an independent seed for sub-stream `stream` of `seed` (splitmix64 mixing).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace alloclab
