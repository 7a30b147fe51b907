#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "paradoxsim/analysis.hpp"
#include "paradoxsim/simulate.hpp"
#include "paradoxsim/trial_csv.hpp"

using namespace paradoxsim;
using Catch::Approx;

namespace {

MeasuredTrial cell_trial(bool ai_correct, bool expl, double acc, Format f = Format::deterministic,
                         std::string subject = "S1") {
    MeasuredTrial t;
    t.record.subject_id = std::move(subject);
    t.record.truth = 0;
    t.record.advice.recommended = ai_correct ? 0 : 1;
    t.record.arm_explanation = expl;
    t.record.arm_format = f;
    t.metrics.accuracy_post = acc;
    return t;
}

std::vector<MeasuredTrial> four_cells(const std::array<double, 4>& means, std::size_t copies = 1) {
    std::vector<MeasuredTrial> d;
    for (std::size_t k = 0; k < copies; ++k)
        for (int c = 0; c < 4; ++c) d.push_back(cell_trial(c < 2, c % 2 == 1, means[c]));
    return d;
}

std::vector<MeasuredTrial> simulated(std::size_t n, double lambda, std::uint64_t seed = 20250101) {
    SimConfig cfg;
    cfg.seed = seed;
    cfg.n_trials = n;
    cfg.behavior.lambda = lambda;
    return measure_all(run_experiment(cfg, 0), 0.73);
}

std::string csv_of(const std::vector<TrialRecord>& d) {
    std::ostringstream os;
    write_trials_csv(os, d);
    return os.str();
}

std::vector<TrialRecord> parse(const std::string& text) {
    std::istringstream is(text);
    return read_trials_csv(is, SignalModel{});
}

const std::string kHeader =
    "subject_id,scenario_id,arm_explanation,arm_format,truth,ai_rec,q,prior_pA,prior_pB,prior_pC,prior_pD,"
    "prior_pE,expected_ssq,post_pA,post_pB,post_pC,post_pD,post_pE\n";

}  // namespace

TEST_CASE("compensated mean") {
    MeanAccumulator a;
    a.add(1e16);
    for (int i = 0; i < 1000; ++i) a.add(1.0);
    a.add(-1e16);
    CHECK(a.sum() == 1000.0);
    MeanAccumulator b;
    for (double x : {1.0, 2.0, 3.0, 4.0}) b.add(x);
    CHECK(b.mean() == 2.5);
    CHECK(b.std_error() == Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("paradox table arithmetic") {
    const auto tab = aggregate_paradox(four_cells({0.874, 0.937, 0.143, 0.094}), ShareWeights::published());
    CHECK(tab.delta_plus == Approx(6.3).margin(1e-9));
    CHECK(tab.delta_minus == Approx(-4.9).margin(1e-9));
    CHECK(tab.net_benefit == Approx(0.73 * 6.3 - 0.27 * 4.9).margin(1e-9));
    CHECK(tab.net_benefit == Approx(3.3).margin(0.05));
    CHECK(tab.paradox_magnitude == Approx(11.2));
    CHECK(tab.cell(false, true).mean == Approx(9.4));

    const auto flat = aggregate_paradox(four_cells({0.5, 0.5, 0.5, 0.5}));
    CHECK(flat.delta_plus == 0.0);
    CHECK(flat.delta_minus == 0.0);

    auto missing = four_cells({0.9, 0.9, 0.1, 0.1});
    missing.pop_back();
    CHECK_THROWS_AS(aggregate_paradox(missing), AggregationError);
}

TEST_CASE("empirical share weights use the AI-correct frequency") {
    auto d = four_cells({0.8, 0.9, 0.2, 0.1}, 1);
    d.push_back(cell_trial(true, false, 0.8));
    d.push_back(cell_trial(true, true, 0.9));
    const auto tab = aggregate_paradox(d);
    CHECK(tab.share_correct == Approx(4.0 / 6.0));
}

TEST_CASE("over-reliance table") {
    const std::array<double, 4> implied = {0.839, 0.882, 0.758, 0.792};
    std::vector<MeasuredTrial> d;
    for (int c = 0; c < 4; ++c) {
        auto t = cell_trial(c < 2, c % 2 == 1, 0.5);
        t.metrics.mu_implied = implied[c];
        d.push_back(t);
    }
    const auto tab = aggregate_overreliance(d, 0.73);
    const std::array<double, 4> want = {0.109, 0.152, 0.028, 0.062};
    for (int c = 0; c < 4; ++c) CHECK(tab.cells[c].deviation == Approx(want[c]).margin(1e-12));
    CHECK(tab.cell(true, true).prevalence == 1.0);

    SECTION("all-Bayes data has no over-reliance") {
        SimConfig cfg;
        cfg.n_trials = 2000;
        for (auto& p : cfg.population.profiles) p.anticipation_bump = 0.0;
        const auto m = measure_all(run_experiment(cfg), 0.73);
        const auto t = aggregate_overreliance(m, 0.73);
        for (const auto& cell : t.cells) {
            CHECK(cell.mu_implied.mean == Approx(0.73).margin(1e-9));
            CHECK(cell.prevalence == 0.0);
        }
    }
    SECTION("an empty explanation arm is an error") {
        std::vector<MeasuredTrial> half;
        for (const auto& t : d)
            if (!t.record.arm_explanation) half.push_back(t);
        CHECK_THROWS_AS(aggregate_overreliance(half, 0.73), AggregationError);
    }
}

TEST_CASE("format interaction") {
    CHECK(interaction_contrast(0.4, 0.4, 0.4, 0.4) == 0.0);
    CHECK(interaction_contrast(0.786, 0.800, 0.797, 0.717) == Approx(-0.094).margin(1e-12));

    std::vector<MeasuredTrial> d;
    const double a = 0.3, b = 0.05, c = 0.1, dd = -0.07;
    // Probabilistic cells: a, a+c; deterministic: a+b, a+b+c+dd.
    d.push_back(cell_trial(true, false, a, Format::probabilistic));
    d.push_back(cell_trial(true, true, a + c, Format::probabilistic));
    d.push_back(cell_trial(true, false, a + b, Format::deterministic));
    d.push_back(cell_trial(true, true, a + b + c + dd, Format::deterministic));
    CHECK(interaction_effect(d, outcome::accuracy_post()) == Approx(dd).margin(1e-15));

    d.pop_back();
    CHECK_THROWS_AS(interaction_effect(d, outcome::accuracy_post()), AggregationError);
}

TEST_CASE("discernment index") {
    CHECK(discernment_gap(0.677, 0.473) == Approx(0.204));
    CHECK(discernment_gap(0.761, 0.503) == Approx(0.258));
    CHECK(discernment_gap(0.5, 0.5) == 0.0);

    std::vector<MeasuredTrial> d;
    const std::array<double, 4> rev = {0.473, 0.503, 0.677, 0.761};
    for (int c = 0; c < 4; ++c) {
        auto t = cell_trial(c < 2, c % 2 == 1, 0.5);
        t.metrics.revision = rev[c];
        d.push_back(t);
    }
    const auto r = discernment(d);
    CHECK(r.gap_no_explanation == Approx(0.204));
    CHECK(r.gap_explanation == Approx(0.258));
    CHECK(r.change == Approx(0.054));
}

TEST_CASE("typology rows") {
    const auto novice = typology_row("overconfident_novice", 14.9, -3.7, 0.73);
    CHECK(novice.net == Approx(0.73 * 14.9 - 0.27 * 3.7));
    CHECK(novice.net == Approx(9.9).margin(0.05));
    CHECK(novice.ratio == Approx(14.9 / 3.7));

    const auto humble = typology_row("humble_expert", 3.6, -12.4, 0.73);
    CHECK(humble.net == Approx(-0.72).margin(0.005));
    CHECK(humble.ratio == Approx(0.29).margin(0.001));

    const auto free = typology_row("x", 5.0, 0.0, 0.73);
    CHECK(free.ratio_infinite);
    CHECK(free.net == Approx(0.73 * 5.0));
}

TEST_CASE("typology aggregation") {
    SECTION("explicit classifier") {
        std::vector<MeasuredTrial> d;
        for (int c = 0; c < 4; ++c) {
            d.push_back(cell_trial(c < 2, c % 2 == 1, 0.1 * (c + 1), Format::deterministic, "A"));
            d.push_back(cell_trial(c < 2, c % 2 == 1, 0.5, Format::deterministic, "B"));
        }
        const auto tab = aggregate_typology(d, ShareWeights::published(),
                                            [](const MeasuredTrial& t) -> std::size_t {
                                                return t.record.subject_id == "A" ? 2 : 1;
                                            });
        CHECK(tab.rows[2].benefit == Approx(10.0));
        CHECK(tab.rows[2].harm == Approx(10.0));
        CHECK(tab.rows[1].benefit == 0.0);
        CHECK_FALSE(tab.rows[0].complete);
        CHECK(tab.rows[2].subjects == 1);
    }
    SECTION("median split on simulated subjects") {
        const auto tab = aggregate_typology(simulated(3000, 0.8));
        CHECK_FALSE(tab.degenerate_split);
        std::size_t subjects = 0;
        for (const auto& r : tab.rows) subjects += r.subjects;
        CHECK(subjects == 4 * 200);
    }
    SECTION("identical subjects collapse the split") {
        std::vector<MeasuredTrial> d;
        for (const char* s : {"A", "B"})
            for (int c = 0; c < 4; ++c) d.push_back(cell_trial(c < 2, c % 2 == 1, 0.5, Format::deterministic, s));
        CHECK(aggregate_typology(d).degenerate_split);
    }
}

TEST_CASE("accuracy decomposition") {
    std::vector<MeasuredTrial> d;
    for (int i = 0; i < 73; ++i) d.push_back(cell_trial(true, true, 0.937));
    for (int i = 0; i < 27; ++i) d.push_back(cell_trial(false, true, 0.094));
    const auto r = accuracy_decomposition(d);
    CHECK(r.share_correct_signal == Approx(0.73));
    CHECK(100.0 * r.total == Approx(70.939).margin(1e-9));

    std::vector<MeasuredTrial> right(10, cell_trial(true, true, 0.9));
    CHECK(accuracy_decomposition(right).total == Approx(accuracy_decomposition(right).acc_given_correct));
    CHECK_THROWS_AS(accuracy_decomposition(std::vector<MeasuredTrial>{}), AggregationError);
}

TEST_CASE("cluster bootstrap") {
    const auto data = simulated(600, 0.8);
    using Span = std::span<const MeasuredTrial>;

    SECTION("constant statistic gives a zero-width interval") {
        const auto ci = bootstrap_ci(Span(data), [](Span) { return 1.5; }, 200, 1);
        CHECK(ci.lower == 1.5);
        CHECK(ci.upper == 1.5);
        CHECK(ci.clusters == 4 * 40);
    }
    SECTION("reproducible and stable in the resample count") {
        auto stat = [](Span d) { return aggregate_paradox(d).delta_plus; };
        const auto a = bootstrap_ci(Span(data), stat, 400, 9);
        const auto b = bootstrap_ci(Span(data), stat, 400, 9);
        const auto c = bootstrap_ci(Span(data), stat, 800, 9);
        CHECK(a.lower == b.lower);
        CHECK(a.upper == b.upper);
        const double width = a.upper - a.lower;
        CHECK(width > 0.0);
        CHECK(std::abs(c.lower - a.lower) < 0.25 * width);
        CHECK(std::abs(c.upper - a.upper) < 0.25 * width);
        CHECK(a.lower <= a.estimate);
        CHECK(a.estimate <= a.upper);
    }
    SECTION("guards") {
        CHECK_THROWS_AS(bootstrap_ci(Span(data), [](Span) { return 0.0; }, 50, 1), ConfigError);
        std::vector<MeasuredTrial> one(5, cell_trial(true, true, 0.5));
        CHECK_THROWS_AS(bootstrap_ci(Span(one), [](Span) { return 0.0; }, 100, 1), AggregationError);
    }
}

TEST_CASE("bootstrap coverage of a cluster mean") {
    // Clustered normal data with known mean 0; 95% intervals should cover
    // it in roughly 95% of replications.
    std::mt19937_64 g(17);
    std::normal_distribution<double> z(0.0, 1.0);
    struct Obs {
        int cluster;
        double y;
    };
    int covered = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<Obs> obs;
        for (int c = 0; c < 40; ++c) {
            const double effect = z(g);
            for (int k = 0; k < 5; ++k) obs.push_back({c, effect + z(g)});
        }
        auto mean = [](std::span<const Obs> d) {
            double s = 0.0;
            for (const auto& o : d) s += o.y;
            return s / static_cast<double>(d.size());
        };
        const auto ci = bootstrap_ci(std::span<const Obs>(obs), mean, [](const Obs& o) { return o.cluster; }, 300,
                                     static_cast<std::uint64_t>(r));
        covered += ci.lower <= 0.0 && 0.0 <= ci.upper;
    }
    const double rate = static_cast<double>(covered) / reps;
    CHECK(rate > 0.88);
    CHECK(rate < 0.99);
}

TEST_CASE("trial CSV round trip") {
    SimConfig cfg;
    cfg.n_trials = 500;
    cfg.behavior.lambda = 0.8;
    const auto d = run_experiment(cfg);
    const auto text = csv_of(d);
    const auto back = parse(text);
    REQUIRE(back.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back[i].subject_id == d[i].subject_id);
        CHECK(back[i].truth == d[i].truth);
        CHECK(back[i].advice.recommended == d[i].advice.recommended);
        CHECK(back[i].advice.explanation.has_value() == d[i].advice.explanation.has_value());
        CHECK(back[i].prior == d[i].prior);
        CHECK(back[i].posterior == d[i].posterior);
        CHECK(back[i].expected_ssq == d[i].expected_ssq);
    }
    CHECK(csv_of(back) == text);
}

TEST_CASE("trial CSV validation") {
    CHECK(parse(kHeader).empty());

    const std::string good = "S1,Q01,0,det,A,B,,0.2,0.2,0.2,0.2,0.2,0.3,0.0675,0.73,0.0675,0.0675,0.0675\n";
    CHECK(parse(kHeader + good).size() == 1);

    SECTION("rows not summing to one cite the row") {
        const std::string bad = "S1,Q01,0,det,A,B,,0.2,0.2,0.2,0.2,0.1,0.3,0.0675,0.73,0.0675,0.0675,0.0675\n";
        try {
            parse(kHeader + good + bad);
            FAIL("expected a schema error");
        } catch (const SchemaError& e) {
            CHECK(e.row() == 3);
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
    SECTION("missing column is named") {
        std::string h = kHeader;
        h.replace(h.find("expected_ssq,"), 13, "");
        try {
            parse(h);
            FAIL("expected a schema error");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("expected_ssq") != std::string::npos);
        }
    }
    SECTION("explanation arms need a quality score") {
        const std::string row = "S1,Q01,1,det,A,B,,0.2,0.2,0.2,0.2,0.2,0.3,0.0675,0.73,0.0675,0.0675,0.0675\n";
        CHECK_THROWS_AS(parse(kHeader + row), SchemaError);
    }
    SECTION("small rounding drift is renormalized") {
        const std::string row =
            "S1,Q01,0,det,A,B,,0.2000001,0.2,0.2,0.2,0.2,0.3,0.0675,0.73,0.0675,0.0675,0.0675\n";
        const auto d = parse(kHeader + row);
        double sum = 0.0;
        for (double p : d[0].prior) sum += p;
        CHECK(sum == Approx(1.0).margin(1e-15));
    }
}
