#pragma once

// Deterministic random number generation.
//
// All randomness in the library flows through Rng, which wraps a
// fully-specified engine (mt19937_64) and hand-rolled distributions so
// that results are bit-identical across standard library implementations.
// Substreams derived from (master seed, stream id) let callers generate
// rows or jobs in parallel while agreeing bit-for-bit with a serial run.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace rinnlab {

// SplitMix64: used to decorrelate seeds and derive substreams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based substream id: hash the master seed with a stream index.
inline std::uint64_t substream(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

// Tag-based substream for named purposes ("params", "split", ...).
inline std::uint64_t substream(std::uint64_t master, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return substream(master, h);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Lemire multiply-shift; n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(engine_()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Random sign, +1 or -1 with equal probability.
    double sign() { return bernoulli(0.5) ? 1.0 : -1.0; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        // Box-Muller; u clamped away from 0 so log stays finite.
        double u = uniform01();
        if (u < 1e-300) u = 1e-300;
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Marsaglia-Tsang for alpha >= 1; boosted for alpha < 1.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            const double u = uniform01();
            return gamma(alpha + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // k distinct indices drawn from [0, n), in shuffled order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        shuffle(idx);
        idx.resize(static_cast<std::size_t>(k));
        return idx;
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace rinnlab
