#ifndef METRIQ_RNG_HPP
#define METRIQ_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "metriq/error.hpp"

namespace metriq {

/// splitmix64 output scrambler. Used both as the core generator step and for
/// deriving independent per-task seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream (splitmix64 counter generator).
///
/// All sampling is implemented here rather than with <random> distributions so
/// that a given seed produces the same sequence on every platform and standard
/// library. One uniform draw advances the state exactly once; a normal draw
/// advances it exactly twice (Box-Muller).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double normal() {
        const double u1 = 1.0 - next_double();  // (0, 1], keeps the log finite
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Exponential with the given rate (mean 1/rate).
    double exponential(double rate) {
        if (rate <= 0.0) throw InputError("exponential rate must be positive");
        return -std::log(1.0 - next_double()) / rate;
    }

    /// Unbiased uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw InputError("Rng::below requires n > 0");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    /// Index sampled proportionally to the given nonnegative weights.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw InputError("categorical weights must have positive sum");
        double u = next_double() * total;
        double cum = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            cum += weights[i];
            if (u < cum) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    /// In-place Fisher-Yates shuffle.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t state_;
};

/// Derives a task seed from a master seed and a path of indices. Tasks with
/// distinct paths get statistically independent streams, so parallel and
/// serial schedules of the same work produce identical results.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(base + 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t t : path) h = mix64(h ^ mix64(t + 0x9e3779b97f4a7c15ULL));
    return h;
}

}  // namespace metriq

#endif
