#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace hfc {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent stream for (seed, chain, stream); stable across platforms.
Rng make_rng(std::uint64_t seed, std::uint64_t chain, std::uint64_t stream);

std::string save_rng(const Rng& rng);
void load_rng(Rng& rng, const std::string& text);

/// Uniform double in [0, 1) with a fixed bit recipe (53 high bits).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline bool coin(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace hfc
