#pragma once

#include <cmath>
#include <cstdint>

namespace pcdream {

// splitmix64 (Vigna's public-domain generator). Every random decision in
// this project flows through it so runs reproduce bit-for-bit across
// platforms and languages.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 mantissa bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1]; safe as a log() argument.
    double next_open_double() { return 1.0 - next_double(); }

    // Uniform integer in [0, bound). Plain modulo: the tiny bias is
    // irrelevant here and the output is trivially portable.
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

    // Standard normal via Box-Muller. Draws two uniforms and caches the
    // second variate, so consumption order stays a pure function of the
    // number of calls.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_open_double();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Deterministic sub-seed: jump `stream` steps into the splitmix64 sequence
// seeded at `base` and emit one value. Used to hand out independent
// sub-seeds, e.g. one per (dataset, class, cloud) or per dream iteration.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    SplitMix64 rng(base + stream * 0x9e3779b97f4a7c15ULL);
    return rng.next();
}

} // namespace pcdream
