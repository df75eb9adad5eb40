#pragma once

// Counter-based pseudo-random generator (SplitMix64 output function).
//
// Every draw is a pure function of (seed, counter), so parallel workers can
// partition counter space and reproduce results independently of scheduling.
// The k-th output equals the k-th value of the reference SplitMix64 stream
// seeded with `seed`, which makes the sequence portable across
// implementations.

#include <cstdint>
#include <cmath>
#include <vector>

namespace racxpt {

inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from (seed, tag). Used to hand each
// codebook / trial / restart its own counter space.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64_at(seed ^ 0xD1B54A32D192ED03ULL, tag);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }

    // Uniform in [0, 1).
    double next_double() { return (double)(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound) via rejection (exact, no modulo bias).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Exponential(1); building block for Dirichlet sampling.
    double next_exponential() {
        double u;
        do {
            u = next_double();
        } while (u <= 0.0);
        return -std::log(u);
    }

    // Symmetric Dirichlet(1,...,1): uniform on the simplex.
    std::vector<double> next_dirichlet(std::size_t k) {
        std::vector<double> v(k);
        double sum = 0.0;
        for (auto& x : v) {
            x = next_exponential();
            sum += x;
        }
        for (auto& x : v) x /= sum;
        return v;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = (std::size_t)next_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace racxpt
