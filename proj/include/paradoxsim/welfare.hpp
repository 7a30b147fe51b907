#pragma once

// Welfare calculus for transparency policies. A policy's welfare gain over
// the no-explanation status quo is
//
//   W = mu * delta_plus + (1 - mu) * delta_minus        (percentage points)
//
// where mu is the AI accuracy among the cases the policy explains and the
// deltas are the explanation effects on accuracy when the AI is right and
// wrong.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paradoxsim/analysis.hpp"
#include "paradoxsim/errors.hpp"

namespace paradoxsim {

struct TreatmentEffects {
    double delta_plus = 0.0;   // pp, AI correct
    double delta_minus = 0.0;  // pp, AI incorrect
    double mu_eff = kDefaultAiAccuracy;
    double baseline_accuracy = 0.0;  // pp, accuracy without explanations

    void validate() const {
        if (!(mu_eff >= 0.0 && mu_eff <= 1.0)) throw DomainError("effective AI accuracy must lie in [0,1]");
        if (!std::isfinite(delta_plus) || !std::isfinite(delta_minus)) throw DomainError("effects must be finite");
    }
};

inline double welfare_gain(const TreatmentEffects& e) {
    e.validate();
    return e.mu_eff * e.delta_plus + (1.0 - e.mu_eff) * e.delta_minus;
}

inline double expected_accuracy(const TreatmentEffects& e) { return welfare_gain(e) + e.baseline_accuracy; }

// The published first-best row reports delta_plus itself (explaining only
// correct advice, counted over correct cases); the equation applied to
// (delta_plus, 0) gives mu * delta_plus instead.
enum class FirstBestConvention { table, equation };

inline double first_best_gain(const TreatmentEffects& e, FirstBestConvention convention = FirstBestConvention::table) {
    e.validate();
    return convention == FirstBestConvention::table ? e.delta_plus : e.mu_eff * e.delta_plus;
}

struct Valuation {
    enum class Mode { literal, calibrated };
    double n_diagnoses = 500e6;
    double cost_per_error = 11000.0;
    Mode mode = Mode::calibrated;
    double value_per_pp = 1.82e9 / 3.3;  // dollars per percentage point

    void validate() const {
        if (!(n_diagnoses >= 0.0) || !(cost_per_error >= 0.0) || !(value_per_pp >= 0.0))
            throw DomainError("valuation inputs must be nonnegative");
    }
};

// Dollars per year.
inline double economic_value(double W_pp, const Valuation& v) {
    v.validate();
    if (v.mode == Valuation::Mode::literal) return W_pp / 100.0 * v.n_diagnoses * v.cost_per_error;
    return W_pp * v.value_per_pp;
}

enum class CompetenceClass { low, high };

enum class PolicyKind { status_quo, universal, confidence_threshold, competence_adaptive, first_best, custom };

inline const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::status_quo: return "status_quo";
        case PolicyKind::universal: return "universal";
        case PolicyKind::confidence_threshold: return "confidence_threshold";
        case PolicyKind::competence_adaptive: return "competence_adaptive";
        case PolicyKind::first_best: return "first_best";
        case PolicyKind::custom: return "custom";
    }
    return "?";
}

inline PolicyKind parse_policy_kind(const std::string& s) {
    for (auto k : {PolicyKind::status_quo, PolicyKind::universal, PolicyKind::confidence_threshold,
                   PolicyKind::competence_adaptive, PolicyKind::first_best, PolicyKind::custom})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown policy kind '" + s + "'");
}

// Explain iff the AI's confidence percentile is at least `min_percentile`
// and the physician's competence class is enabled.
struct RuleSpec {
    bool explain_low_competence = true;
    bool explain_high_competence = true;
    double min_percentile = 0.0;

    bool operator()(double percentile, CompetenceClass c) const {
        const bool cls = c == CompetenceClass::low ? explain_low_competence : explain_high_competence;
        return cls && percentile >= min_percentile;
    }
};

struct TransparencyPolicy {
    PolicyKind kind = PolicyKind::status_quo;
    std::string name;
    double threshold_percentile = 85.0;  // confidence_threshold only
    FirstBestConvention convention = FirstBestConvention::table;
    std::function<bool(double, CompetenceClass)> rule;  // custom only

    std::string display_name() const { return name.empty() ? to_string(kind) : name; }

    static TransparencyPolicy of(PolicyKind k, std::string name = {}) {
        TransparencyPolicy p;
        p.kind = k;
        p.name = std::move(name);
        return p;
    }
    static TransparencyPolicy custom(std::function<bool(double, CompetenceClass)> rule, std::string name = "custom") {
        TransparencyPolicy p;
        p.kind = PolicyKind::custom;
        p.name = std::move(name);
        p.rule = std::move(rule);
        return p;
    }
};

// Treatment effects for each conditioning cell a policy may need.
struct EffectInputs {
    std::optional<TreatmentEffects> pooled;        // all cases
    std::optional<TreatmentEffects> confident;     // AI confidence above threshold
    std::optional<TreatmentEffects> low_competence;
    std::optional<TreatmentEffects> high_competence;
    double low_competence_share = 0.5;

    // Inputs behind the published five-policy comparison.
    static EffectInputs published() {
        EffectInputs in;
        in.pooled = TreatmentEffects{6.3, -4.9, 0.73, 0.0};
        in.confident = TreatmentEffects{6.8, -2.5, 0.744, 0.0};
        in.low_competence = TreatmentEffects{7.6, -3.4, 0.73, 0.0};
        return in;
    }
};

struct WelfareReport {
    std::string policy;
    PolicyKind kind = PolicyKind::status_quo;
    double W = 0.0;             // pp
    double dollar_value = 0.0;  // dollars per year
    double efficiency = 0.0;    // W / W_first_best
    double first_best_W = 0.0;
    std::optional<TreatmentEffects> effects;  // inputs echo
};

namespace detail {

inline const TreatmentEffects& need(const std::optional<TreatmentEffects>& e, const char* what,
                                    const TransparencyPolicy& p) {
    if (!e) throw ConfigError("policy '" + p.display_name() + "' needs " + what + " treatment effects");
    return *e;
}

}  // namespace detail

// Competence-adaptive uses the low-competence effects as they stand, the
// same way the published table does; a custom rule weights each class by its
// population share and integrates over a uniform AI-confidence percentile.
inline WelfareReport evaluate_policy(const TransparencyPolicy& policy, const EffectInputs& in,
                                     const Valuation& valuation = {}) {
    const auto& pooled = detail::need(in.pooled, "pooled", policy);
    WelfareReport r;
    r.policy = policy.display_name();
    r.kind = policy.kind;
    r.first_best_W = first_best_gain(pooled, policy.convention);

    switch (policy.kind) {
        case PolicyKind::status_quo:
            r.W = 0.0;
            r.effects = TreatmentEffects{0.0, 0.0, pooled.mu_eff, pooled.baseline_accuracy};
            break;
        case PolicyKind::universal:
            r.W = welfare_gain(pooled);
            r.effects = pooled;
            break;
        case PolicyKind::confidence_threshold: {
            const auto& e = detail::need(in.confident, "confidence-conditional", policy);
            r.W = welfare_gain(e);
            r.effects = e;
            break;
        }
        case PolicyKind::competence_adaptive: {
            const auto& e = detail::need(in.low_competence, "low-competence", policy);
            r.W = welfare_gain(e);
            r.effects = e;
            break;
        }
        case PolicyKind::first_best:
            r.W = r.first_best_W;
            r.effects = TreatmentEffects{pooled.delta_plus, 0.0, pooled.mu_eff, pooled.baseline_accuracy};
            break;
        case PolicyKind::custom: {
            if (!policy.rule) throw ConfigError("custom policy '" + policy.display_name() + "' has no rule");
            double W = 0.0;
            for (auto cls : {CompetenceClass::low, CompetenceClass::high}) {
                const double share = cls == CompetenceClass::low ? in.low_competence_share
                                                                 : 1.0 - in.low_competence_share;
                std::size_t on = 0;
                for (int pct = 0; pct < 100; ++pct) on += policy.rule(pct + 0.5, cls) ? 1 : 0;
                if (on == 0 || share == 0.0) continue;
                const auto& e = cls == CompetenceClass::low ? detail::need(in.low_competence, "low-competence", policy)
                                                            : detail::need(in.high_competence, "high-competence", policy);
                W += share * (static_cast<double>(on) / 100.0) * welfare_gain(e);
            }
            r.W = W;
            break;
        }
    }
    r.dollar_value = economic_value(r.W, valuation);
    r.efficiency = r.first_best_W != 0.0 ? r.W / r.first_best_W : 0.0;
    return r;
}

// Sorted by W descending; ties keep input order.
inline std::vector<WelfareReport> compare_policies(std::span<const TransparencyPolicy> policies,
                                                   const EffectInputs& in, const Valuation& valuation = {}) {
    std::vector<WelfareReport> out;
    out.reserve(policies.size());
    for (const auto& p : policies) out.push_back(evaluate_policy(p, in, valuation));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.W > b.W; });
    return out;
}

// Status quo, universal, confidence threshold (85th pct), competence-adaptive
// and first-best.
inline std::vector<TransparencyPolicy> published_policy_menu() {
    return {TransparencyPolicy::of(PolicyKind::status_quo, "status_quo"),
            TransparencyPolicy::of(PolicyKind::universal, "universal"),
            TransparencyPolicy::of(PolicyKind::confidence_threshold, "confidence_threshold"),
            TransparencyPolicy::of(PolicyKind::competence_adaptive, "competence_adaptive"),
            TransparencyPolicy::of(PolicyKind::first_best, "first_best")};
}

// Estimates pooled and per-competence-class effects from trial data. The
// confidence-conditional cell cannot be estimated (the simulated AI has no
// confidence score) and is left empty.
inline EffectInputs estimate_effect_inputs(std::span<const MeasuredTrial> data,
                                           const ShareWeights& weights = ShareWeights::empirical()) {
    auto to_effects = [&](std::span<const MeasuredTrial> d) {
        const auto tab = aggregate_paradox(d, weights);
        const double baseline = (tab.cells[0].mean * static_cast<double>(tab.cells[0].count) +
                                 tab.cells[2].mean * static_cast<double>(tab.cells[2].count)) /
                                static_cast<double>(tab.cells[0].count + tab.cells[2].count);
        return TreatmentEffects{tab.delta_plus, tab.delta_minus, tab.share_correct, baseline};
    };
    EffectInputs in;
    in.pooled = to_effects(data);

    std::map<std::string, MeanAccumulator> competence;
    for (const auto& t : data) competence[t.record.subject_id].add(t.metrics.accuracy_prior);
    std::vector<double> values;
    for (const auto& [id, a] : competence) values.push_back(a.mean());
    const double med = detail::median_of(values);
    std::vector<MeasuredTrial> low, high;
    for (const auto& t : data) (competence.at(t.record.subject_id).mean() > med ? high : low).push_back(t);
    in.low_competence_share = static_cast<double>(low.size()) / static_cast<double>(data.size());
    try {
        in.low_competence = to_effects(low);
    } catch (const AggregationError&) {
    }
    try {
        in.high_competence = to_effects(high);
    } catch (const AggregationError&) {
    }
    return in;
}

}  // namespace paradoxsim
