#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace swarmlab {

// Deterministic RNG. All draws are implemented on top of the raw mt19937_64
// stream instead of <random> distributions, whose outputs are
// implementation-defined; this keeps seeded runs reproducible.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

    // Sample an index from a probability vector; fp residue falls into the
    // last nonzero-probability bucket.
    int categorical(std::span<const double> probs) {
        double u = uniform();
        double cum = 0.0;
        int last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last = static_cast<int>(i);
            cum += probs[i];
            if (u < cum) return static_cast<int>(i);
        }
        return last;
    }

    std::uint64_t raw() { return gen_(); }

    // splitmix64 finalizer; derives independent substream seeds.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace swarmlab
