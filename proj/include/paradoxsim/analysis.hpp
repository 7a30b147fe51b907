#pragma once

// Aggregation of trial-level measures into the paradox, over-reliance,
// belief-updating and typology tables, plus the saturated 2x2 interaction
// contrast and a subject-clustered percentile bootstrap.
//
// All means use compensated summation so results do not depend on record
// order beyond the last few ulps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paradoxsim/errors.hpp"
#include "paradoxsim/measures.hpp"
#include "paradoxsim/random.hpp"

namespace paradoxsim {

struct MeasuredTrial {
    TrialRecord record;
    TrialMetrics metrics;
};

inline std::vector<MeasuredTrial> measure_all(std::span<const TrialRecord> dataset, double mu_true) {
    std::vector<MeasuredTrial> out;
    out.reserve(dataset.size());
    for (const auto& r : dataset) out.push_back({r, compute_metrics(r, mu_true)});
    return out;
}

// Neumaier-compensated running mean.
class MeanAccumulator {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        sq_ += x * x;
        ++n_;
    }
    std::size_t count() const noexcept { return n_; }
    double sum() const noexcept { return sum_ + comp_; }
    double mean() const noexcept {
        return n_ ? sum() / static_cast<double>(n_) : std::numeric_limits<double>::quiet_NaN();
    }
    // Standard error of the mean treating observations as independent.
    double std_error() const noexcept {
        if (n_ < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sq_ - static_cast<double>(n_) * m * m) / static_cast<double>(n_ - 1));
        return std::sqrt(var / static_cast<double>(n_));
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
    double sq_ = 0.0;
    std::size_t n_ = 0;
};

// Share of AI-correct advice used to combine the two conditional effects.
struct ShareWeights {
    enum class Kind { empirical, fixed } kind = Kind::empirical;
    double share_correct = 0.73;

    static ShareWeights empirical() { return {}; }
    static ShareWeights fixed(double share) {
        if (!(share >= 0.0 && share <= 1.0)) throw ConfigError("share of AI-correct cases must lie in [0,1]");
        return {Kind::fixed, share};
    }
    // 0.73 / 0.27 as used for the published net effects.
    static ShareWeights published() { return fixed(0.73); }
};

struct CellStat {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double std_error = 0.0;
    std::size_t count = 0;
};

inline CellStat to_cell(const MeanAccumulator& a, double scale = 1.0) {
    return {a.mean() * scale, a.std_error() * scale, a.count()};
}

namespace detail {

inline std::size_t cell_index(bool ai_correct, bool explanation) {
    return (ai_correct ? 0u : 2u) + (explanation ? 1u : 0u);
}

inline const char* cell_name(std::size_t idx) {
    static constexpr std::array<const char*, 4> names = {
        "AI correct / no explanation", "AI correct / explanation", "AI incorrect / no explanation",
        "AI incorrect / explanation"};
    return names[idx];
}

inline void require_cells(const std::array<MeanAccumulator, 4>& cells, const char* table) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].count() == 0)
            throw AggregationError(std::string(table) + ": empty cell (" + cell_name(i) + ")");
}

inline double empirical_share(std::span<const MeasuredTrial> data) {
    if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t c = 0;
    for (const auto& t : data) c += t.record.ai_correct() ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(data.size());
}

inline double resolve_share(const ShareWeights& w, std::span<const MeasuredTrial> data) {
    return w.kind == ShareWeights::Kind::fixed ? w.share_correct : empirical_share(data);
}

}  // namespace detail

// Cells are indexed [AI correct: no expl, expl; AI incorrect: no expl, expl].
// Accuracies are in percent; effects in percentage points.
struct ParadoxTable {
    std::array<CellStat, 4> cells{};
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double share_correct = 0.0;
    double net_benefit = 0.0;
    double paradox_magnitude = 0.0;  // delta_plus - delta_minus

    const CellStat& cell(bool ai_correct, bool explanation) const {
        return cells[detail::cell_index(ai_correct, explanation)];
    }
};

inline ParadoxTable aggregate_paradox(std::span<const MeasuredTrial> data,
                                      const ShareWeights& weights = ShareWeights::empirical()) {
    std::array<MeanAccumulator, 4> acc{};
    for (const auto& t : data)
        acc[detail::cell_index(t.record.ai_correct(), t.record.arm_explanation)].add(t.metrics.accuracy_post);
    detail::require_cells(acc, "paradox table");

    ParadoxTable tab;
    for (std::size_t i = 0; i < 4; ++i) tab.cells[i] = to_cell(acc[i], 100.0);
    tab.delta_plus = tab.cells[1].mean - tab.cells[0].mean;
    tab.delta_minus = tab.cells[3].mean - tab.cells[2].mean;
    tab.share_correct = detail::resolve_share(weights, data);
    tab.net_benefit = tab.share_correct * tab.delta_plus + (1.0 - tab.share_correct) * tab.delta_minus;
    tab.paradox_magnitude = tab.delta_plus - tab.delta_minus;
    return tab;
}

struct OverrelianceCell {
    CellStat alpha;
    CellStat mu_implied;
    double deviation = 0.0;   // mean mu_implied - mu_true
    double prevalence = 0.0;  // share with mu_implied > mu_true
    std::size_t count = 0;
    std::size_t indeterminate = 0;  // trials without a defined mu_implied
};

struct OverrelianceTable {
    double mu_true = kDefaultAiAccuracy;
    std::array<OverrelianceCell, 4> cells{};
    double delta_alpha_correct = 0.0;
    double delta_alpha_incorrect = 0.0;
    double delta_mu_implied_correct = 0.0;
    double delta_mu_implied_incorrect = 0.0;

    const OverrelianceCell& cell(bool ai_correct, bool explanation) const {
        return cells[detail::cell_index(ai_correct, explanation)];
    }
};

inline OverrelianceTable aggregate_overreliance(std::span<const MeasuredTrial> data, double mu_true) {
    std::array<MeanAccumulator, 4> alpha{}, implied{}, prevalent{};
    std::array<std::size_t, 4> count{}, indet{};
    for (const auto& t : data) {
        const auto c = detail::cell_index(t.record.ai_correct(), t.record.arm_explanation);
        ++count[c];
        alpha[c].add(t.metrics.alpha);
        if (t.metrics.mu_implied) {
            implied[c].add(*t.metrics.mu_implied);
            prevalent[c].add(over_reliance(*t.metrics.mu_implied, mu_true) ? 1.0 : 0.0);
        } else {
            ++indet[c];
        }
    }
    detail::require_cells(implied, "over-reliance table");

    OverrelianceTable tab;
    tab.mu_true = mu_true;
    for (std::size_t i = 0; i < 4; ++i) {
        auto& cell = tab.cells[i];
        cell.alpha = to_cell(alpha[i]);
        cell.mu_implied = to_cell(implied[i]);
        cell.deviation = cell.mu_implied.mean - mu_true;
        cell.prevalence = prevalent[i].mean();
        cell.count = count[i];
        cell.indeterminate = indet[i];
    }
    tab.delta_alpha_correct = tab.cells[1].alpha.mean - tab.cells[0].alpha.mean;
    tab.delta_alpha_incorrect = tab.cells[3].alpha.mean - tab.cells[2].alpha.mean;
    tab.delta_mu_implied_correct = tab.cells[1].mu_implied.mean - tab.cells[0].mu_implied.mean;
    tab.delta_mu_implied_incorrect = tab.cells[3].mu_implied.mean - tab.cells[2].mu_implied.mean;
    return tab;
}

// Outcome extractor for interaction contrasts; empty optionals are skipped.
using OutcomeSelector = std::function<std::optional<double>(const MeasuredTrial&)>;

namespace outcome {

inline OutcomeSelector accuracy_post() {
    return [](const MeasuredTrial& t) -> std::optional<double> { return t.metrics.accuracy_post; };
}
inline OutcomeSelector alpha() {
    return [](const MeasuredTrial& t) -> std::optional<double> { return t.metrics.alpha; };
}
inline OutcomeSelector mu_implied() {
    return [](const MeasuredTrial& t) { return t.metrics.mu_implied; };
}
inline OutcomeSelector over_reliant() {
    return [](const MeasuredTrial& t) -> std::optional<double> {
        if (!t.metrics.mu_implied) return std::nullopt;
        return t.metrics.over_reliant ? 1.0 : 0.0;
    };
}
inline OutcomeSelector revision() {
    return [](const MeasuredTrial& t) -> std::optional<double> { return t.metrics.revision; };
}

}  // namespace outcome

// Saturated 2x2 contrast over explanation x format cell means:
//   (E,Det - NE,Det) - (E,Prob - NE,Prob).
// This equals the coefficient on Expl x Det in an OLS regression of the
// outcome on {1, Expl, Det, Expl x Det}.
inline double interaction_contrast(double e_det, double ne_det, double e_prob, double ne_prob) {
    return (e_det - ne_det) - (e_prob - ne_prob);
}

inline double interaction_effect(std::span<const MeasuredTrial> data, const OutcomeSelector& select) {
    // [NE-Prob, E-Prob, NE-Det, E-Det]
    std::array<MeanAccumulator, 4> acc{};
    for (const auto& t : data) {
        const auto y = select(t);
        if (!y) continue;
        const std::size_t idx = (t.record.arm_format == Format::deterministic ? 2u : 0u) +
                                (t.record.arm_explanation ? 1u : 0u);
        acc[idx].add(*y);
    }
    static constexpr std::array<const char*, 4> names = {"no explanation / probabilistic",
                                                         "explanation / probabilistic",
                                                         "no explanation / deterministic",
                                                         "explanation / deterministic"};
    for (std::size_t i = 0; i < 4; ++i)
        if (acc[i].count() == 0)
            throw AggregationError(std::string("interaction effect: empty cell (") + names[i] + ")");
    return interaction_contrast(acc[3].mean(), acc[2].mean(), acc[1].mean(), acc[0].mean());
}

inline std::vector<MeasuredTrial> filter_ai_correct(std::span<const MeasuredTrial> data, bool correct) {
    std::vector<MeasuredTrial> out;
    for (const auto& t : data)
        if (t.record.ai_correct() == correct) out.push_back(t);
    return out;
}

// Mean revision and shift toward the recommendation by AI correctness and
// explanation arm, and the discernment gap (incorrect - correct) per arm.
struct DiscernmentResult {
    std::array<CellStat, 4> revision{};  // same cell order as ParadoxTable
    std::array<CellStat, 4> shift{};
    double gap_no_explanation = 0.0;
    double gap_explanation = 0.0;
    double change = 0.0;  // gap_explanation - gap_no_explanation
};

inline double discernment_gap(double mean_revision_incorrect, double mean_revision_correct) {
    return mean_revision_incorrect - mean_revision_correct;
}

inline DiscernmentResult discernment(std::span<const MeasuredTrial> data) {
    std::array<MeanAccumulator, 4> rev{}, shift{};
    for (const auto& t : data) {
        const auto c = detail::cell_index(t.record.ai_correct(), t.record.arm_explanation);
        rev[c].add(t.metrics.revision);
        shift[c].add(t.metrics.shift_to_rec);
    }
    detail::require_cells(rev, "discernment");
    DiscernmentResult out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.revision[i] = to_cell(rev[i]);
        out.shift[i] = to_cell(shift[i]);
    }
    out.gap_no_explanation = discernment_gap(out.revision[2].mean, out.revision[0].mean);
    out.gap_explanation = discernment_gap(out.revision[3].mean, out.revision[1].mean);
    out.change = out.gap_explanation - out.gap_no_explanation;
    return out;
}

struct TypologyRow {
    std::string label;
    bool complete = true;  // all four cells populated
    std::array<CellStat, 4> cells{};
    double benefit = std::numeric_limits<double>::quiet_NaN();  // pp
    double harm = std::numeric_limits<double>::quiet_NaN();     // pp
    double ratio = std::numeric_limits<double>::quiet_NaN();    // |benefit| / |harm|
    bool ratio_infinite = false;
    double net = std::numeric_limits<double>::quiet_NaN();
    std::size_t subjects = 0;
};

// Net effect and benefit/harm ratio for one type.
inline TypologyRow typology_row(std::string label, double benefit_pp, double harm_pp, double share_correct) {
    TypologyRow row;
    row.label = std::move(label);
    row.benefit = benefit_pp;
    row.harm = harm_pp;
    row.net = share_correct * benefit_pp + (1.0 - share_correct) * harm_pp;
    if (harm_pp == 0.0) {
        row.ratio_infinite = true;
        row.ratio = std::numeric_limits<double>::infinity();
    } else {
        row.ratio = std::abs(benefit_pp) / std::abs(harm_pp);
    }
    return row;
}

struct TypologyTable {
    std::array<TypologyRow, 4> rows{};  // indexed by PhysicianType
    double share_correct = 0.0;
    double competence_median = std::numeric_limits<double>::quiet_NaN();
    double confidence_median = std::numeric_limits<double>::quiet_NaN();
    bool degenerate_split = false;
};

inline constexpr std::array<const char*, 4> kTypologyLabels = {
    "calibrated_expert", "humble_expert", "overconfident_novice", "uncertain_novice"};

// Type index: 0 high/high, 1 high competence/low confidence, 2 low/high, 3 low/low.
inline std::size_t typology_index(bool high_competence, bool high_confidence) {
    return (high_competence ? 0u : 2u) + (high_confidence ? 0u : 1u);
}

inline TypologyTable aggregate_typology(std::span<const MeasuredTrial> data, const ShareWeights& weights,
                                        const std::function<std::size_t(const MeasuredTrial&)>& classify) {
    std::array<std::array<MeanAccumulator, 4>, 4> acc{};
    std::array<std::map<std::string, int>, 4> subjects{};
    for (const auto& t : data) {
        const auto type = classify(t);
        if (type >= 4) throw DomainError("typology classifier returned an invalid type");
        acc[type][detail::cell_index(t.record.ai_correct(), t.record.arm_explanation)].add(t.metrics.accuracy_post);
        subjects[type][t.record.subject_id] = 1;
    }
    TypologyTable tab;
    tab.share_correct = detail::resolve_share(weights, data);
    for (std::size_t k = 0; k < 4; ++k) {
        bool complete = true;
        for (const auto& c : acc[k]) complete = complete && c.count() > 0;
        TypologyRow row;
        if (complete) {
            const double benefit = 100.0 * (acc[k][1].mean() - acc[k][0].mean());
            const double harm = 100.0 * (acc[k][3].mean() - acc[k][2].mean());
            row = typology_row(kTypologyLabels[k], benefit, harm, tab.share_correct);
        } else {
            row.label = kTypologyLabels[k];
            row.complete = false;
        }
        for (std::size_t i = 0; i < 4; ++i) row.cells[i] = to_cell(acc[k][i], 100.0);
        row.subjects = subjects[k].size();
        tab.rows[k] = row;
    }
    return tab;
}

namespace detail {

// Median with ties at or below the median assigned to "low".
inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Median splits on per-subject mean prior accuracy (competence) and mean
// prior SSQ (confidence); subjects at or below the median are "low".
inline TypologyTable aggregate_typology(std::span<const MeasuredTrial> data,
                                        const ShareWeights& weights = ShareWeights::empirical()) {
    std::map<std::string, std::pair<MeanAccumulator, MeanAccumulator>> per_subject;
    for (const auto& t : data) {
        auto& s = per_subject[t.record.subject_id];
        s.first.add(t.metrics.accuracy_prior);
        s.second.add(t.metrics.ssq_prior);
    }
    if (per_subject.empty()) throw AggregationError("typology: empty dataset");
    std::vector<double> comp, conf;
    for (const auto& [id, s] : per_subject) {
        comp.push_back(s.first.mean());
        conf.push_back(s.second.mean());
    }
    const double comp_med = detail::median_of(comp);
    const double conf_med = detail::median_of(conf);
    const bool degenerate = std::all_of(comp.begin(), comp.end(), [&](double x) { return x == comp[0]; }) ||
                            std::all_of(conf.begin(), conf.end(), [&](double x) { return x == conf[0]; });

    std::map<std::string, std::size_t> type_of;
    for (const auto& [id, s] : per_subject)
        type_of[id] = typology_index(s.first.mean() > comp_med, s.second.mean() > conf_med);

    auto tab = aggregate_typology(data, weights,
                                  [&](const MeasuredTrial& t) { return type_of.at(t.record.subject_id); });
    tab.competence_median = comp_med;
    tab.confidence_median = conf_med;
    tab.degenerate_split = degenerate;
    return tab;
}

struct AccuracyDecomposition {
    double share_correct_signal = 0.0;
    double acc_given_correct = 0.0;
    double acc_given_incorrect = 0.0;
    double total = 0.0;
};

// total = share * acc|correct + (1 - share) * acc|incorrect, with an empty
// stratum contributing zero weight.
inline AccuracyDecomposition accuracy_decomposition(std::span<const MeasuredTrial> data,
                                                    const OutcomeSelector& select = outcome::accuracy_post()) {
    if (data.empty()) throw AggregationError("accuracy decomposition: empty dataset");
    MeanAccumulator c, i;
    for (const auto& t : data) {
        const auto y = select(t);
        if (!y) continue;
        (t.record.ai_correct() ? c : i).add(*y);
    }
    const auto total_n = c.count() + i.count();
    if (total_n == 0) throw AggregationError("accuracy decomposition: no defined outcomes");
    AccuracyDecomposition out;
    out.share_correct_signal = static_cast<double>(c.count()) / static_cast<double>(total_n);
    out.acc_given_correct = c.count() ? c.mean() : 0.0;
    out.acc_given_incorrect = i.count() ? i.mean() : 0.0;
    out.total = (c.sum() + i.sum()) / static_cast<double>(total_n);
    return out;
}

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double estimate = 0.0;  // statistic on the original sample
    std::size_t resamples = 0;
    std::size_t clusters = 0;
};

namespace detail {

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& s, double p) {
    const double h = (static_cast<double>(s.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace detail

// Percentile bootstrap resampling whole clusters with replacement. Clusters
// are ordered by key, so the interval depends only on (data, seed).
template <typename T, typename Statistic, typename ClusterKey>
Interval bootstrap_ci(std::span<const T> data, Statistic&& statistic, ClusterKey&& cluster_key,
                      std::size_t n_resamples, std::uint64_t seed, double level = 0.95) {
    if (n_resamples < 100) throw ConfigError("bootstrap needs at least 100 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0,1)");

    using Key = std::decay_t<decltype(cluster_key(data.front()))>;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) groups[cluster_key(data[i])].push_back(i);
    if (groups.size() < 2) throw AggregationError("bootstrap needs at least 2 clusters");

    std::vector<const std::vector<std::size_t>*> clusters;
    for (const auto& [k, idx] : groups) clusters.push_back(&idx);

    Interval out;
    out.estimate = statistic(data);
    out.resamples = n_resamples;
    out.clusters = clusters.size();

    std::vector<double> stats;
    stats.reserve(n_resamples);
    std::vector<T> sample;
    for (std::size_t b = 0; b < n_resamples; ++b) {
        auto rng = make_stream(seed, {b, 0x426f6f74ULL});
        sample.clear();
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            const auto& members = *clusters[uniform_index(rng, clusters.size())];
            for (auto i : members) sample.push_back(data[i]);
        }
        stats.push_back(statistic(std::span<const T>(sample)));
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    out.lower = detail::quantile_sorted(stats, tail);
    out.upper = detail::quantile_sorted(stats, 1.0 - tail);
    return out;
}

// Subject-clustered bootstrap over measured trials.
template <typename Statistic>
Interval bootstrap_ci(std::span<const MeasuredTrial> data, Statistic&& statistic, std::size_t n_resamples,
                      std::uint64_t seed, double level = 0.95) {
    return bootstrap_ci(data, std::forward<Statistic>(statistic),
                        [](const MeasuredTrial& t) { return t.record.subject_id; }, n_resamples, seed, level);
}

}  // namespace paradoxsim
