#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace guitar {

// Deterministic random source. mt19937_64 has a standard-mandated output
// sequence and the transforms below avoid std::*_distribution, whose
// sequences differ between standard library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // [0, 1)
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal, Marsaglia polar method
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace guitar
