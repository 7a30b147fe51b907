#pragma once

// End-to-end steps shared by the command-line tool and the tests: measuring
// a dataset into a report, evaluating welfare, and the per-trial metrics CSV.

#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "paradoxsim/analysis.hpp"
#include "paradoxsim/config.hpp"
#include "paradoxsim/report.hpp"
#include "paradoxsim/trial_csv.hpp"
#include "paradoxsim/welfare.hpp"

namespace paradoxsim {

inline void write_metrics_csv(std::ostream& os, std::span<const MeasuredTrial> data) {
    os << "subject_id,scenario_id,arm_explanation,arm_format,ai_correct,ssq_prior,ssq_post,accuracy_prior,"
          "accuracy_post,correct_prior,correct_post,revision,shift_to_rec,alpha,alpha_raw,mu_implied,"
          "over_reliant,qsr_prior,qsr_post\n";
    for (const auto& t : data) {
        const auto& r = t.record;
        const auto& m = t.metrics;
        os << r.subject_id << ',' << r.scenario_id << ',' << (r.arm_explanation ? 1 : 0) << ','
           << to_string(r.arm_format) << ',' << (r.ai_correct() ? 1 : 0) << ',' << format_double(m.ssq_prior) << ','
           << format_double(m.ssq_post) << ',' << format_double(m.accuracy_prior) << ','
           << format_double(m.accuracy_post) << ',' << (m.correct_prior ? 1 : 0) << ','
           << (m.correct_post ? 1 : 0) << ',' << format_double(m.revision) << ','
           << format_double(m.shift_to_rec) << ',' << format_double(m.alpha) << ','
           << format_double(m.alpha_raw) << ',' << (m.mu_implied ? format_double(*m.mu_implied) : std::string())
           << ',' << (m.over_reliant ? 1 : 0) << ',' << format_double(m.qsr_prior) << ','
           << format_double(m.qsr_post) << '\n';
    }
}

// Paradox, over-reliance, belief-updating and typology tables plus the
// accuracy decomposition and format interactions. Tables whose cells are missing from the dataset raise AggregationError, except
// the format interactions, which are omitted when a format arm is absent.
inline Report build_measure_report(std::span<const MeasuredTrial> data, const RunConfig& cfg) {
    Report rep;
    rep.seed = cfg.seed;
    rep.config = cfg.document;
    rep.config_hash = config_hash(cfg.document);

    rep.paradox = aggregate_paradox(data, cfg.weights);
    rep.overreliance = aggregate_overreliance(data, cfg.mu_true);
    rep.belief_updating = discernment(data);
    rep.typology = aggregate_typology(data, cfg.weights);
    rep.decomposition = accuracy_decomposition(data);

    const auto correct = filter_ai_correct(data, true);
    const auto incorrect = filter_ai_correct(data, false);
    const std::vector<std::pair<std::string, OutcomeSelector>> outcomes = {
        {"accuracy_post", outcome::accuracy_post()},
        {"alpha", outcome::alpha()},
        {"mu_implied", outcome::mu_implied()},
        {"over_reliance", outcome::over_reliant()},
        {"revision", outcome::revision()}};
    for (const auto& [name, sel] : outcomes) {
        try {
            rep.interactions[name + ".ai_correct"] = interaction_effect(correct, sel);
            rep.interactions[name + ".ai_incorrect"] = interaction_effect(incorrect, sel);
        } catch (const AggregationError&) {
        }
    }

    if (cfg.bootstrap_resamples > 0) {
        using Span = std::span<const MeasuredTrial>;
        const auto w = cfg.weights;
        rep.intervals["delta_plus"] = bootstrap_ci(
            data, [&](Span d) { return aggregate_paradox(d, w).delta_plus; }, cfg.bootstrap_resamples, cfg.seed);
        rep.intervals["delta_minus"] = bootstrap_ci(
            data, [&](Span d) { return aggregate_paradox(d, w).delta_minus; }, cfg.bootstrap_resamples, cfg.seed);
        rep.intervals["net_benefit"] = bootstrap_ci(
            data, [&](Span d) { return aggregate_paradox(d, w).net_benefit; }, cfg.bootstrap_resamples, cfg.seed);
    }
    return rep;
}

// Effect inputs for the configured welfare mode. In sim mode the pooled and
// competence-class effects come from the data; cells the data cannot supply
// (confidence-conditional) fall back to the configured inputs.
inline EffectInputs welfare_inputs(const RunConfig& cfg, std::span<const MeasuredTrial> data) {
    if (cfg.welfare_mode == WelfareMode::paper) return cfg.effects;
    auto in = estimate_effect_inputs(data, cfg.weights);
    if (!in.confident) in.confident = cfg.effects.confident;
    return in;
}

inline std::vector<WelfareReport> run_welfare(const RunConfig& cfg, const EffectInputs& inputs) {
    const auto policies = cfg.transparency_policies();
    if (policies.empty()) throw ConfigError("welfare: the policy list is empty");
    return compare_policies(policies, inputs, cfg.valuation);
}

}  // namespace paradoxsim
