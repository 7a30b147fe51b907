#pragma once

// Diagnosis space, the symmetric-noise signal model, and the posterior
// update operators (normative Bayes and explanation-weighted).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "paradoxsim/errors.hpp"

namespace paradoxsim {

using Option = std::size_t;

inline constexpr double kSimplexTolerance = 1e-9;
inline constexpr double kProbabilityFloor = 1e-15;
inline constexpr double kDefaultAiAccuracy = 0.73;
inline constexpr double kMaxPerceivedAccuracy = 0.999;

class DiagnosisSpace {
public:
    DiagnosisSpace() : DiagnosisSpace(5) {}

    // Labels default to "A", "B", ...
    explicit DiagnosisSpace(std::size_t n) {
        if (n < 2) throw ConfigError("diagnosis space needs at least 2 options");
        if (n > 26) throw ConfigError("default labels support at most 26 options");
        labels_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) labels_.emplace_back(1, static_cast<char>('A' + i));
    }

    explicit DiagnosisSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.size() < 2) throw ConfigError("diagnosis space needs at least 2 options");
        std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
        if (seen.size() != labels_.size()) throw ConfigError("diagnosis labels must be distinct");
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    const std::string& label(Option k) const {
        check(k);
        return labels_[k];
    }

    Option index_of(const std::string& label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) throw DomainError("unknown option label '" + label + "'");
        return static_cast<Option>(it - labels_.begin());
    }

    void check(Option k) const {
        if (k >= labels_.size())
            throw DomainError("option index " + std::to_string(k) + " out of range for n=" +
                              std::to_string(labels_.size()));
    }

    friend bool operator==(const DiagnosisSpace&, const DiagnosisSpace&) = default;

private:
    std::vector<std::string> labels_;
};

// A point on the probability simplex.
class BeliefVector {
public:
    BeliefVector() = default;

    // Validates without rescaling.
    explicit BeliefVector(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.size() < 2) throw DomainError("belief vector needs at least 2 entries");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0 && p <= 1.0))
                throw DomainError("belief entry " + std::to_string(p) + " outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance)
            throw DomainError("belief entries sum to " + std::to_string(sum) + ", expected 1");
    }

    static BeliefVector uniform(std::size_t n) {
        return BeliefVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    static BeliefVector degenerate(std::size_t n, Option k) {
        if (k >= n) throw DomainError("degenerate belief index out of range");
        std::vector<double> v(n, 0.0);
        v[k] = 1.0;
        return BeliefVector(std::move(v));
    }

    // Normalizes nonnegative mass; entries below the floor are flushed to
    // zero before the final renormalization.
    static BeliefVector from_mass(std::vector<double> mass) {
        double total = 0.0;
        for (double m : mass) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("unnormalized mass must be finite and >= 0");
            total += m;
        }
        if (!(total > 0.0)) throw DegenerateUpdateError("unnormalized belief mass is zero");
        for (double& m : mass) m /= total;
        bool flushed = false;
        for (double& m : mass) {
            if (m != 0.0 && m < kProbabilityFloor) {
                m = 0.0;
                flushed = true;
            }
        }
        if (flushed) {
            total = std::accumulate(mass.begin(), mass.end(), 0.0);
            for (double& m : mass) m /= total;
        }
        BeliefVector out;
        out.probs_ = std::move(mass);
        return out;
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](Option k) const { return probs_[k]; }
    double at(Option k) const {
        if (k >= probs_.size()) throw DomainError("belief index out of range");
        return probs_[k];
    }
    std::span<const double> probs() const noexcept { return probs_; }
    auto begin() const noexcept { return probs_.begin(); }
    auto end() const noexcept { return probs_.end(); }

    friend bool operator==(const BeliefVector&, const BeliefVector&) = default;

private:
    std::vector<double> probs_;
};

struct SignalModel {
    double mu = kDefaultAiAccuracy;
    DiagnosisSpace space{};

    SignalModel() = default;
    SignalModel(double accuracy, DiagnosisSpace s) : mu(accuracy), space(std::move(s)) { validate(); }

    std::size_t n() const noexcept { return space.size(); }
    double off_signal() const noexcept { return (1.0 - mu) / static_cast<double>(n() - 1); }

    void validate() const {
        if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("signal accuracy must lie in [0,1]");
    }
};

struct Explanation {
    double quality = 0.0;

    explicit Explanation(double q = 0.0) : quality(q) {
        if (!(q >= 0.0 && q <= 1.0)) throw DomainError("explanation quality must lie in [0,1]");
    }
    friend bool operator==(const Explanation&, const Explanation&) = default;
};

struct BehaviorParams {
    double lambda = 0.0;             // susceptibility to explanations
    double format_trust_bump = 0.0;  // perceived-accuracy shift for deterministic advice

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
        if (!std::isfinite(format_trust_bump)) throw ConfigError("format_trust_bump must be finite");
    }
};

// Clamp of a perceived accuracy to [1/n, 0.999].
inline double clamp_perceived_accuracy(double mu, std::size_t n) {
    return std::clamp(mu, 1.0 / static_cast<double>(n), kMaxPerceivedAccuracy);
}

enum class Format { deterministic, probabilistic };

inline const char* to_string(Format f) { return f == Format::deterministic ? "det" : "prob"; }

inline Format parse_format(const std::string& s) {
    if (s == "det") return Format::deterministic;
    if (s == "prob") return Format::probabilistic;
    throw DomainError("format must be 'det' or 'prob', got '" + s + "'");
}

// The canonical announced distribution: mu on the recommendation and the
// off-signal mass elsewhere.
inline BeliefVector stated_distribution(const SignalModel& model, Option recommended) {
    model.space.check(recommended);
    std::vector<double> q(model.n(), model.off_signal());
    q[recommended] = model.mu;
    return BeliefVector::from_mass(std::move(q));
}

struct AdviceEvent {
    Option recommended = 0;
    Format format = Format::deterministic;
    BeliefVector stated;
    std::optional<Explanation> explanation;

    static AdviceEvent canonical(const SignalModel& model, Option rec, Format fmt,
                                 std::optional<Explanation> e = std::nullopt) {
        return AdviceEvent{rec, fmt, stated_distribution(model, rec), e};
    }

    void validate() const {
        if (stated.size() == 0) return;
        if (recommended >= stated.size()) throw DomainError("recommendation outside stated distribution");
        auto mx = *std::max_element(stated.begin(), stated.end());
        if (stated[recommended] < mx) throw DomainError("stated distribution must peak on the recommendation");
    }
};

// Pr(observed | truth) under symmetric noise.
inline double signal_likelihood(const SignalModel& model, Option observed, Option truth) {
    model.space.check(observed);
    model.space.check(truth);
    return observed == truth ? model.mu : model.off_signal();
}

namespace detail {

inline BeliefVector weighted_update(const BeliefVector& prior, const SignalModel& model,
                                    Option recommended, double rec_weight) {
    if (prior.size() != model.n())
        throw DomainError("prior dimension " + std::to_string(prior.size()) +
                          " does not match diagnosis space size " + std::to_string(model.n()));
    model.space.check(recommended);
    const double off = model.off_signal();
    std::vector<double> mass(prior.size());
    for (Option j = 0; j < prior.size(); ++j)
        mass[j] = prior[j] * (j == recommended ? model.mu * rec_weight : off);
    try {
        return BeliefVector::from_mass(std::move(mass));
    } catch (const DegenerateUpdateError&) {
        throw DegenerateUpdateError("posterior undefined: prior puts no mass on any option with positive likelihood");
    }
}

}  // namespace detail

inline BeliefVector bayes_posterior(const BeliefVector& prior, const SignalModel& model, Option recommended) {
    return detail::weighted_update(prior, model, recommended, 1.0);
}

// psi = exp(lambda * q)
inline double persuasiveness(const BehaviorParams& params, double quality) {
    if (!(quality >= 0.0)) throw DomainError("explanation quality must be >= 0");
    if (quality > 1.0) throw DomainError("explanation quality must be <= 1");
    return std::exp(params.lambda * quality);
}

// Bayes update with the recommended option's likelihood inflated by the
// persuasiveness weight; non-recommended options are left untouched.
inline BeliefVector explained_posterior(const BeliefVector& prior, const SignalModel& model, Option recommended,
                                        const BehaviorParams& params, double quality) {
    return detail::weighted_update(prior, model, recommended, persuasiveness(params, quality));
}

}  // namespace paradoxsim
