#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "paradoxsim/simulate.hpp"
#include "paradoxsim/trial_csv.hpp"

using namespace paradoxsim;
using Catch::Approx;

namespace {

SimConfig small(std::size_t n = 2000) {
    SimConfig cfg;
    cfg.n_trials = n;
    cfg.behavior.lambda = 0.8;
    return cfg;
}

std::string dump(const std::vector<TrialRecord>& d) {
    std::ostringstream os;
    write_trials_csv(os, d);
    return os.str();
}

}  // namespace

TEST_CASE("prior sampling") {
    auto rng = make_stream(1, {});
    SECTION("fixed modal mass on the truth") {
        const PhysicianProfile p{1.0, BetaDist::degenerate(0.6), 0.0};
        const auto prior = sample_prior(rng, p, 2, 5);
        CHECK(prior[2] == Approx(0.6));
        CHECK(prior[0] == Approx(0.1));
    }
    SECTION("zero competence never centres on the truth") {
        const PhysicianProfile p{0.0, BetaDist::degenerate(0.6), 0.0};
        for (int i = 0; i < 500; ++i) CHECK(sample_prior(rng, p, 1, 5)[1] == Approx(0.1));
    }
    SECTION("modal-correct rate tracks competence") {
        const PhysicianProfile p{0.62, BetaDist{5.0, 1.5, std::nullopt}, 0.0};
        std::size_t hits = 0;
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            const auto prior = sample_prior(rng, p, 0, 5);
            hits += std::max_element(prior.begin(), prior.end()) == prior.begin();
        }
        CHECK(static_cast<double>(hits) / n == Approx(0.62).margin(0.01));
    }
}

TEST_CASE("expected posterior confidence") {
    const BeliefVector prior({0.4, 0.3, 0.1, 0.1, 0.1});
    CHECK(expected_posterior_ssq(prior, 0.2, 5) == Approx(ssq(prior)).epsilon(1e-12));
    CHECK(expected_posterior_ssq(prior, 0.99999, 5) == Approx(1.0).margin(1e-4));

    const auto uni = BeliefVector::uniform(5);
    const SignalModel m(0.73, DiagnosisSpace(5));
    double brute = 0.0;
    for (Option r = 0; r < 5; ++r) {
        double pr = 0.0;
        for (Option t = 0; t < 5; ++t) pr += uni[t] * signal_likelihood(m, r, t);
        brute += pr * ssq(bayes_posterior(uni, m, r));
    }
    CHECK(expected_posterior_ssq(uni, 0.73, 5) == Approx(brute).epsilon(1e-14));
    CHECK(brute == Approx(0.73 * 0.73 + 4 * 0.0675 * 0.0675));
}

TEST_CASE("simulated trials") {
    SECTION("null behavior is exact Bayes") {
        SimConfig cfg = small(200);
        cfg.behavior.lambda = 0.0;
        for (const auto& r : run_experiment(cfg)) {
            const auto want = bayes_posterior(r.prior, cfg.model, r.advice.recommended);
            for (Option j = 0; j < 5; ++j) CHECK(r.posterior[j] == Approx(want[j]).margin(1e-15));
        }
    }
    SECTION("perfect advice always lands on the truth") {
        SimConfig cfg = small(200);
        cfg.model.mu = 1.0;
        for (const auto& r : run_experiment(cfg)) {
            CHECK(r.ai_correct());
            CHECK(correctness(r.posterior, r.truth));
        }
    }
    SECTION("explanation arms carry a quality score") {
        for (const auto& r : run_experiment(small(100)))
            CHECK(r.arm_explanation == r.advice.explanation.has_value());
    }
}

TEST_CASE("experiment shape and arm filter") {
    CHECK(run_experiment(small(1000)).size() == 4000);

    SimConfig cfg = small(300);
    cfg.arms = {Arm::parse("EP")};
    const auto d = run_experiment(cfg);
    CHECK(d.size() == 300);
    for (const auto& r : d) {
        CHECK(r.arm_explanation);
        CHECK(r.arm_format == Format::probabilistic);
    }

    cfg.arms.clear();
    CHECK(run_experiment(cfg).empty());
    CHECK_THROWS_AS(Arm::parse("X"), ConfigError);
}

TEST_CASE("determinism across repeats and thread counts") {
    const auto cfg = small(3000);
    const auto one = dump(run_experiment(cfg, 1));
    CHECK(one == dump(run_experiment(cfg, 1)));
    CHECK(one == dump(run_experiment(cfg, 3)));
    CHECK(one == dump(run_experiment(cfg, 8)));
    auto other = cfg;
    other.seed += 1;
    CHECK(one != dump(run_experiment(other, 2)));
}

TEST_CASE("AI-correct share matches the signal accuracy") {
    const auto d = run_experiment(small(25000), 0);
    std::size_t hits = 0;
    for (const auto& r : d) hits += r.ai_correct();
    const double n = static_cast<double>(d.size());
    const double se = std::sqrt(0.73 * 0.27 / n);
    CHECK(std::abs(hits / n - 0.73) < 3.0 * se);
}

TEST_CASE("anticipation raises expected confidence in explanation arms") {
    SimConfig cfg = small(20000);
    double e = 0.0, ne = 0.0;
    std::size_t ne_n = 0, e_n = 0;
    for (const auto& r : run_experiment(cfg, 0)) {
        const double a = trust_alpha(ssq(r.prior), r.expected_ssq, 5).value;
        (r.arm_explanation ? e : ne) += a;
        ++(r.arm_explanation ? e_n : ne_n);
    }
    CHECK(e / e_n > ne / ne_n);
}

TEST_CASE("paired effect sample") {
    const PairedEffectSample sample(small(20000), 0);
    const auto [b0, h0] = sample.effects(0.0);
    CHECK(b0 == 0.0);
    CHECK(h0 == 0.0);
    double last = 0.0;
    for (double lambda : {0.2, 0.5, 1.0, 2.0, 4.0}) {
        const auto [b, h] = sample.effects(lambda);
        CHECK(b >= last);
        CHECK(h <= 0.0);
        last = b;
    }
}

TEST_CASE("lambda calibration") {
    const auto cfg = small(20000);
    CalibrationOptions opt;
    opt.threads = 0;

    CHECK(calibrate_lambda(cfg, 0.0, 0.0, 0.05, opt).lambda == Approx(0.0));

    double last_lambda = 0.0;
    for (double target : {2.0, 4.0, 6.3}) {
        const auto r = calibrate_lambda(cfg, target, -4.9, 0.05, opt);
        CHECK(std::abs(r.achieved_benefit_pp - target) <= 0.05);
        CHECK(r.lambda >= last_lambda);
        last_lambda = r.lambda;
    }

    CHECK_THROWS_AS(calibrate_lambda(cfg, 6.3, -4.9, -0.1, opt), ConfigError);
    CHECK_THROWS_AS(calibrate_lambda(cfg, NAN, -4.9, 0.1, opt), ConfigError);
    try {
        opt.lambda_max = 0.05;
        calibrate_lambda(cfg, 6.3, -4.9, 0.1, opt);
        FAIL("expected a calibration failure");
    } catch (const CalibrationError& e) {
        CHECK(e.best().lambda == Approx(0.05));
        CHECK(e.best().achieved_benefit_pp < 6.3);
    }
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.n_trials = 10;
    cfg.population.weights = {0.5, 0.5, 0.5, 0.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SimConfig{};
    cfg.scenarios_per_subject = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
