#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace segbench {

// SplitMix64 finalizer. Bijective on 64-bit values, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Stateless counter-based draw: the `counter`-th output under `seed`.
// Used where results must not depend on evaluation order (tie-breaking
// keyed by voxel index, per-resample substreams).
constexpr std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t counter) {
    return mix64(seed + kGoldenGamma * (counter + 1));
}

// Sequential stream forked from (seed, stream). Cheap to construct per
// resample or per worker; streams with distinct ids are independent.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix64(seed + kGoldenGamma * (stream + 1))) {}

    std::uint64_t next() { return mix64(base_ + kGoldenGamma * (++n_)); }

    // Unbiased-enough integer in [0, m) via 128-bit multiply-shift.
    std::uint64_t next_below(std::uint64_t m) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * m) >> 64);
    }

    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t base_;
    std::uint64_t n_ = 0;
};

// Pairwise (cascade) summation: deterministic for a fixed element order and
// more accurate than naive accumulation on long inputs.
inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 16) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t half = x.size() / 2;
    return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

inline double mean_of(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean_of: empty input");
    return pairwise_sum(x) / static_cast<double>(x.size());
}

// q-th quantile (q in [0,1]) with linear interpolation between the closest
// order statistics. `sorted` must be ascending and nonempty.
inline double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("percentile_sorted: empty input");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile_sorted: q outside [0,1]");
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace segbench
