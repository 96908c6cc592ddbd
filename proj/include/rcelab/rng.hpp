#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rcelab {

/// Seeded random source. Draws are derived from raw mt19937_64 words rather
/// than std:: distributions so that streams are identical across standard
/// library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Rng::index: empty range");
        // rejection sampling keeps the draw unbiased
        const std::uint64_t span = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= span);
        return static_cast<std::size_t>(x % n);
    }

    /// Samples an index from an unnormalized nonnegative weight vector.
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) throw std::runtime_error("Rng::categorical: zero total mass");
        double u = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.size() - 1;  // fp slack lands on the last bin
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace rcelab
