#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace das {

using Rng = std::mt19937_64;

// Purpose tags for derived random streams. Every stream is addressed by a
// path (root seed, tag/index, tag/index, ...) and hashed with SplitMix64, so
// distinct paths give unrelated generators.
enum class Stream : std::uint64_t {
  Scene = 0x5343,      // instance generation
  Trial = 0x5452,      // per-trial runner seed
  Selection = 0x534c,  // random polling (cold start, RRS)
  Downlink = 0x444c,   // downlink error draws
  Access = 0x4143,     // random access (transmit / channel draws)
};

std::uint64_t splitmix64(std::uint64_t x);

// Hashes a stream path into a 64-bit seed.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

inline std::uint64_t derive_seed(std::uint64_t root, Stream tag, std::uint64_t index) {
  return derive_seed(root, {static_cast<std::uint64_t>(tag), index});
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Standard normal draw via Box-Muller on the raw engine output, so results do
// not depend on the standard library's distribution implementation.
double standard_normal(Rng& rng);

// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, n), n >= 1, by rejection.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace das
