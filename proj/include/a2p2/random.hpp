#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace a2p2 {

// All seeded randomness goes through std::mt19937_64, whose output sequence is
// fixed by the standard. Distributions are implemented here rather than taken
// from <random>, since those are not portable across standard libraries.
using Rng = std::mt19937_64;

// Uniform integer in [0, bound) by rejection sampling; bound > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// Uniform double in [0, 1) from the top 53 bits.
double uniform_unit(Rng& rng);

// Fisher-Yates: for i = n-1 down to 1, swap(items[i], items[uniform_below(i+1)]).
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

// Derives an independent stream seed from (seed, stream) with SplitMix64.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace a2p2
