#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace chardial {

/// Seeded generator with a platform-stable draw sequence. std::mt19937_64 output
/// is fixed by the standard; the distributions built on it here are written out
/// explicitly because the std ones are implementation-defined.
class DeterministicRng {
  public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound);

    int coin() { return static_cast<int>(uniform(2)); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// Child stream derived from this seed and a label, independent of draw position.
    DeterministicRng derive(std::uint64_t stream) const;

  private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
};

}  // namespace chardial
