#pragma once

#include <cmath>
#include <cstdint>

namespace timebin {

// Counter-based deterministic random stream. Each (seed, phase_index,
// train_index) triple selects an independent substream, so results are
// reproducible under any partition of trains across workers.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t phase_index, std::uint64_t train_index)
        : state_(init_state(seed, phase_index, train_index)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (no caching, two uniforms per draw)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Poisson by sequential inversion; adequate for the means used here
    // (pair numbers per train, dark counts per span).
    int poisson(double mean) {
        return poisson(mean, std::exp(-mean));
    }

    // variant with precomputed exp(-mean) for hot loops
    int poisson(double mean, double exp_neg_mean) {
        double u = uniform();
        double p = exp_neg_mean;
        double cum = p;
        int k = 0;
        while (u > cum && k < 10000) {
            ++k;
            p *= mean / k;
            cum += p;
        }
        return k;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t init_state(std::uint64_t seed, std::uint64_t phase, std::uint64_t train) {
        std::uint64_t x = mix(seed + 0x9E3779B97F4A7C15ULL);
        x = mix(x ^ (phase + 0xD1B54A32D192ED03ULL));
        x = mix(x ^ (train + 0x8CB92BA72F3D8DD7ULL));
        return x;
    }

    std::uint64_t state_;
};

} // namespace timebin
