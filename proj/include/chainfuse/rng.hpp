#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace chainfuse {

// SplitMix64 finalizer; used to expand a root seed into independent sub-streams.
std::uint64_t mix64(std::uint64_t x);

// Deterministic seed derivation: the same (root, tags) always yields the same
// seed, and distinct tag sequences yield unrelated seeds.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> tags);
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag);

// Small portable PRNG (xoshiro256**). Bounded draws are implemented here rather
// than through <random> distributions so streams are identical across standard
// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();

    // Uniform integer in [0, bound). bound must be > 0.
    std::size_t uniform_index(std::size_t bound);

    // Uniform real in [0, 1).
    double uniform();

    double normal(double mean = 0.0, double stddev = 1.0);

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(values[i - 1], values[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& values) { shuffle(std::span<T>(values)); }

private:
    std::uint64_t state_[4];
};

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

// n draws with replacement from [0, n).
std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng);

}  // namespace chainfuse
