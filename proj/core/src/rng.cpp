#include "chardial/rng.hpp"

#include <limits>
#include <stdexcept>

namespace chardial {

std::uint64_t DeterministicRng::uniform(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform bound must be positive");
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x <= limit) return x % bound;
    }
}

DeterministicRng DeterministicRng::derive(std::uint64_t stream) const {
    // splitmix64 of (seed, stream)
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return DeterministicRng(z ^ (z >> 31));
}

}  // namespace chardial
