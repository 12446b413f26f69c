#pragma once

#include <cstdint>
#include <random>

namespace trajrl {

// Deterministic random source. All draws are produced through explicit
// bit-level mappings of mt19937_64 output, never through the distribution
// classes of <random>, whose sequences differ between standard library
// implementations. Every seeded run therefore replays exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1), never exactly 0 or 1.
    double uniform_open() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via the inverse CDF; see norm_quantile below.
    double normal();

    // Uniform integer in [0, n). Lemire's multiply-shift; bias is at most
    // n / 2^64 which is irrelevant for the bank sizes used here.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

private:
    std::mt19937_64 gen_;
};

// splitmix64 step, used to derive independent substream seeds from a master
// seed without correlated low bits.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Standard normal CDF.
double norm_cdf(double x);

// Inverse standard normal CDF (Wichura's AS 241, double precision).
// Requires p in (0, 1).
double norm_quantile(double p);

inline double Rng::normal() { return norm_quantile(uniform_open()); }

} // namespace trajrl
