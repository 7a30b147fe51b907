#pragma once

// Per-trial measures: confidence (SSQ), accuracy, correctness, revision,
// ex-ante trust, implied accuracy, over-reliance and quadratic-score payoffs.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "paradoxsim/belief.hpp"
#include "paradoxsim/errors.hpp"

namespace paradoxsim {

// Absolute slack on the strict over-reliance comparison. Exact Bayesian
// updating round-trips to the true accuracy only up to rounding.
inline constexpr double kOverRelianceSlack = 1e-9;

struct TrialRecord {
    std::string subject_id;
    std::string scenario_id;
    Option truth = 0;
    AdviceEvent advice;
    BeliefVector prior;
    double expected_ssq = 0.0;
    BeliefVector posterior;
    bool arm_explanation = false;
    Format arm_format = Format::deterministic;

    bool ai_correct() const noexcept { return advice.recommended == truth; }
    std::size_t n() const noexcept { return prior.size(); }

    void validate() const {
        const auto n = prior.size();
        if (n < 2) throw DomainError("trial prior is empty");
        if (posterior.size() != n) throw DomainError("prior/posterior dimension mismatch");
        if (truth >= n) throw DomainError("truth index out of range");
        if (advice.recommended >= n) throw DomainError("recommended option out of range");
        const double lo = 1.0 / static_cast<double>(n);
        if (!(expected_ssq >= lo - kSimplexTolerance && expected_ssq <= 1.0 + kSimplexTolerance))
            throw DomainError("expected_ssq " + std::to_string(expected_ssq) + " outside [1/n,1]");
        if (arm_explanation != advice.explanation.has_value())
            throw DomainError("explanation arm and explanation presence disagree");
    }
};

struct TrialMetrics {
    double ssq_prior = 0.0;
    double ssq_post = 0.0;
    double accuracy_prior = 0.0;
    double accuracy_post = 0.0;
    bool correct_prior = false;
    bool correct_post = false;
    double revision = 0.0;
    double shift_to_rec = 0.0;
    double alpha = 0.0;
    double alpha_raw = 0.0;
    bool alpha_degenerate = false;
    std::optional<double> mu_implied;  // empty when indeterminate (0/0)
    bool over_reliant = false;
    double qsr_prior = 0.0;
    double qsr_post = 0.0;
};

inline double ssq(const BeliefVector& b) {
    double s = 0.0;
    for (double p : b) s += p * p;
    return s;
}

inline double accuracy(const BeliefVector& b, Option truth) { return b.at(truth); }

// Ties for the maximum are scored not-correct.
inline bool correctness(const BeliefVector& b, Option truth) {
    const double t = b.at(truth);
    for (Option j = 0; j < b.size(); ++j)
        if (j != truth && b[j] >= t) return false;
    return true;
}

inline double revision(const BeliefVector& prior, const BeliefVector& post) {
    if (prior.size() != post.size()) throw DomainError("revision: dimension mismatch");
    double s = 0.0;
    for (Option j = 0; j < prior.size(); ++j) {
        const double d = post[j] - prior[j];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double shift_to_rec(const BeliefVector& prior, const BeliefVector& post, Option rec) {
    return std::abs(post.at(rec) - prior.at(rec));
}

struct TrustEstimate {
    double value = 0.0;  // clamped to [0,1]
    double raw = 0.0;
    bool degenerate = false;  // prior SSQ already 1
};

// Mixture weight on "the AI reveals the truth" implied by an anticipated
// posterior SSQ: E[SSQ_post] = alpha + (1 - alpha) SSQ_prior.
inline TrustEstimate trust_alpha(double ssq_prior, double ssq_expected, std::size_t n) {
    const double lo = 1.0 / static_cast<double>(n);
    auto in_range = [lo](double s) { return s >= lo - kSimplexTolerance && s <= 1.0 + kSimplexTolerance; };
    if (!in_range(ssq_prior) || !in_range(ssq_expected))
        throw DomainError("trust_alpha: SSQ inputs must lie in [1/n, 1]");
    if (ssq_prior >= 1.0) return {0.0, 0.0, true};
    const double raw = (ssq_expected - ssq_prior) / (1.0 - ssq_prior);
    return {std::clamp(raw, 0.0, 1.0), raw, false};
}

// The signal accuracy a Bayesian would need to move `prior` on the
// recommended option to `post` on it. Empty when both masses sit at the same
// boundary (0 -> 0 or 1 -> 1), where every accuracy fits.
inline std::optional<double> implied_accuracy(const BeliefVector& prior, const BeliefVector& post, Option rec) {
    if (prior.size() != post.size()) throw DomainError("implied_accuracy: dimension mismatch");
    const double p = prior.at(rec);
    const double pi = post.at(rec);
    const double spread = static_cast<double>(prior.size() - 1);
    const double num = pi * (1.0 - p) / spread;
    const double den = p * (1.0 - pi) + num;
    if (!(den > 0.0)) return std::nullopt;
    return std::clamp(num / den, 0.0, 1.0);
}

inline bool over_reliance(double mu_implied, double mu_true) { return mu_implied > mu_true + kOverRelianceSlack; }

// Quadratic scoring rule: 2 - sum_j (b_j - 1[j = truth])^2.
inline double qsr_payoff(const BeliefVector& b, Option truth) {
    if (truth >= b.size()) throw DomainError("qsr_payoff: truth out of range");
    double loss = 0.0;
    for (Option j = 0; j < b.size(); ++j) {
        const double d = b[j] - (j == truth ? 1.0 : 0.0);
        loss += d * d;
    }
    return 2.0 - loss;
}

inline TrialMetrics compute_metrics(const TrialRecord& rec, double mu_true) {
    rec.validate();
    const Option k = rec.advice.recommended;
    TrialMetrics m;
    m.ssq_prior = ssq(rec.prior);
    m.ssq_post = ssq(rec.posterior);
    m.accuracy_prior = accuracy(rec.prior, rec.truth);
    m.accuracy_post = accuracy(rec.posterior, rec.truth);
    m.correct_prior = correctness(rec.prior, rec.truth);
    m.correct_post = correctness(rec.posterior, rec.truth);
    m.revision = revision(rec.prior, rec.posterior);
    m.shift_to_rec = shift_to_rec(rec.prior, rec.posterior, k);

    const auto n = rec.n();
    const double lo = 1.0 / static_cast<double>(n);
    const auto trust = trust_alpha(std::clamp(m.ssq_prior, lo, 1.0), std::clamp(rec.expected_ssq, lo, 1.0), n);
    m.alpha = trust.value;
    m.alpha_raw = trust.raw;
    m.alpha_degenerate = trust.degenerate;

    m.mu_implied = implied_accuracy(rec.prior, rec.posterior, k);
    m.over_reliant = m.mu_implied && over_reliance(*m.mu_implied, mu_true);
    m.qsr_prior = qsr_payoff(rec.prior, rec.truth);
    m.qsr_post = qsr_payoff(rec.posterior, rec.truth);
    return m;
}

}  // namespace paradoxsim
