#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cognn/error.hpp"

namespace cognn {

// Deterministic random source. The engine (mt19937_64) is bit-exact by
// standard; the distributions are hand-rolled because the std ones are
// implementation-defined and would break golden files across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive. Rejection sampling keeps the
    // draw unbiased and reproducible.
    int uniform_int(int lo, int hi) {
        if (lo > hi) fail(Error::Code::invalid_argument, "uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t draw;
        do {
            draw = engine_();
        } while (draw >= limit);
        return lo + static_cast<int>(draw % span);
    }

    // Standard normal via Box-Muller. One value per call; the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    std::vector<double> normal_vector(std::size_t n, double mean = 0.0, double sigma = 1.0) {
        std::vector<double> out(n);
        for (auto& v : out) v = normal(mean, sigma);
        return out;
    }

    // In-place Fisher-Yates shuffle (std::shuffle is not portable bit-for-bit).
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i - 1)));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cognn
