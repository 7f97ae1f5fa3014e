#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tracehide/common.hpp"

namespace tracehide {

// Stage ordinals for deriving per-stage seeds from one global seed.
// Keeping the fan-out explicit makes every sub-seed recoverable from
// the run manifest.
namespace stage {
inline constexpr std::uint64_t synth = 1;
inline constexpr std::uint64_t split = 2;
inline constexpr std::uint64_t model_init = 3;
inline constexpr std::uint64_t train = 4;
inline constexpr std::uint64_t sampling = 5;
inline constexpr std::uint64_t unlearn = 6;
inline constexpr std::uint64_t bad_teacher = 7;
inline constexpr std::uint64_t benchmark_run = 100;  // + run index
}  // namespace stage

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage_ordinal) {
    std::uint64_t s = seed ^ (0xa0761d6478bd642fULL * (stage_ordinal + 1));
    return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stage_ordinal,
                                 std::uint64_t sub) {
    return derive_seed(derive_seed(seed, stage_ordinal), sub + 0x100);
}

// Seeded generator with hand-rolled draw helpers. The std::*_distribution
// classes are implementation-defined, so rolling the few draws we need on
// top of mt19937_64 keeps corpora and shuffles stable across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform double in [0, 1), 53-bit resolution
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n), rejection sampled
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw input_error("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // geometric on {1, 2, ...} with the given mean, by inversion
    std::uint64_t geometric(double mean) {
        if (mean < 1.0) throw input_error("Rng::geometric: mean must be >= 1");
        if (mean == 1.0) return 1;
        const double p = 1.0 / mean;
        const double u = next_double();
        const double k = std::ceil(std::log1p(-u) / std::log1p(-p));
        return k < 1.0 ? 1 : static_cast<std::uint64_t>(k);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // index drawn proportionally to non-negative weights
    std::size_t weighted(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w))
                throw input_error("Rng::weighted: weights must be finite and non-negative");
            total += w;
        }
        if (total <= 0.0) throw input_error("Rng::weighted: total weight must be positive");
        double u = next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace tracehide
