#pragma once

// Deterministic random number utilities.
//
// All randomness in the library flows through Rng, a thin wrapper around
// std::mt19937_64 with hand-rolled distribution transforms. The standard
// library's distribution objects (uniform_int_distribution etc.) are
// implementation-defined and may produce different streams across
// platforms/toolchains; the transforms here are fully specified, so a seed
// produces the same stream everywhere. That property backs every
// "identical seed => bit-identical output" contract in the library.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace egi {

// splitmix64 finalizer; used for seed derivation and hash mixing.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine a base seed with stream indices into an independent sub-seed.
// Used to give every (center_a, center_b) pair / every worker task its own
// stream so results never depend on iteration or worker order.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(base ^ 0x5851f42d4c957f2dULL) ^ mix64(a) ^ mix64(b ^ 0xd6e8feb86659fd93ULL));
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // Uniform integer in [0, n). n must be > 0. Rejection sampling keeps the
    // distribution exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    int index(std::size_t n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

    // Uniform double in [0, 1) with 53 random bits.
    double real() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform double in [lo, hi).
    double real(double lo, double hi) { return lo + (hi - lo) * real(); }

    // Number of failures before the first success with success probability s;
    // support {0, 1, 2, ...}, mean (1-s)/s. Inverse-transform sampling.
    // s must be in (0, 1].
    std::uint64_t geometric_failures(double s) {
        if (s >= 1.0) return 0;
        const double u = real();
        // floor(log(1-u) / log(1-s)); log1p keeps precision for small s.
        const double g = std::floor(std::log1p(-u) / std::log1p(-s));
        if (g < 0.0) return 0;
        if (g > 1e18) return static_cast<std::uint64_t>(1e18);
        return static_cast<std::uint64_t>(g);
    }

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn uniformly from [0, n), in selection order.
    // Partial Fisher-Yates on an index vector; O(n) setup, fine at our sizes.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        if (k > n) k = n;
        for (int i = 0; i < k; ++i) {
            int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        idx.resize(static_cast<std::size_t>(k));
        return idx;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace egi
