#pragma once

// Seeded random streams and the two stochastic primitives of the signal
// model: drawing the AI's signal and drawing explanation quality.
//
// Every consumer receives its own stream, derived from a root seed plus a
// tuple of integer keys. Derivation is a pure function, so trials can be
// generated in any order or on any thread and still see the same draws.

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

#include "paradoxsim/belief.hpp"
#include "paradoxsim/errors.hpp"

namespace paradoxsim {

using RngStream = std::mt19937_64;

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = detail::mix64(root);
    for (auto k : keys) h = detail::mix64(h ^ detail::mix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

inline RngStream make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> keys) {
    return RngStream(derive_seed(root, keys));
}

// 53-bit uniform in [0,1); fixed mapping so draws do not depend on the
// standard library's distribution implementation.
inline double uniform01(RngStream& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(RngStream& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

// Beta(alpha, beta) on [0,1], or a point mass when `point` is set.
struct BetaDist {
    double alpha = 5.0;
    double beta = 2.0;
    std::optional<double> point;

    static BetaDist degenerate(double at) { return BetaDist{1.0, 1.0, at}; }

    void validate() const {
        if (point) {
            if (!(*point >= 0.0 && *point <= 1.0)) throw ConfigError("point mass must lie in [0,1]");
            return;
        }
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw ConfigError("beta shape parameters must be finite and > 0");
    }

    double mean() const { return point ? *point : alpha / (alpha + beta); }

    double operator()(RngStream& rng) const {
        if (point) return *point;
        std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
        const double x = ga(rng);
        const double y = gb(rng);
        const double s = x + y;
        return s > 0.0 ? x / s : 0.5;
    }
};

// Draws the AI's observed signal given the truth: correct with probability
// mu, otherwise uniform over the n-1 wrong options.
inline Option sample_signal(RngStream& rng, Option truth, const SignalModel& model) {
    model.space.check(truth);
    if (uniform01(rng) < model.mu) return truth;
    const std::size_t n = model.n();
    const Option k = uniform_index(rng, n - 1);
    return k >= truth ? k + 1 : k;
}

// Explanation quality is drawn without reference to the truth or the signal,
// so its distribution is the same for correct and incorrect advice.
inline double sample_explanation_quality(RngStream& rng, const BetaDist& dist) {
    dist.validate();
    return dist(rng);
}

}  // namespace paradoxsim
