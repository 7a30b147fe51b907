#pragma once

// Synthetic trial generation for the 2x2 (explanation x format) design and
// calibration of the explanation susceptibility lambda.
//
// A subject is a block of `scenarios_per_subject` consecutive trials within
// one arm. Each subject draws a physician type once; each trial draws truth,
// AI signal, prior and explanation quality from its own stream keyed by
// (seed, arm, trial index). Output therefore does not depend on the number
// of worker threads or the order in which trials are produced.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "paradoxsim/belief.hpp"
#include "paradoxsim/errors.hpp"
#include "paradoxsim/measures.hpp"
#include "paradoxsim/random.hpp"

namespace paradoxsim {

enum class PhysicianType : std::size_t {
    calibrated_expert = 0,     // high competence, high confidence
    humble_expert = 1,         // high competence, low confidence
    overconfident_novice = 2,  // low competence, high confidence
    uncertain_novice = 3,      // low competence, low confidence
};

inline constexpr std::array<const char*, 4> kPhysicianTypeNames = {
    "calibrated_expert", "humble_expert", "overconfident_novice", "uncertain_novice"};

inline const char* to_string(PhysicianType t) { return kPhysicianTypeNames[static_cast<std::size_t>(t)]; }

struct PhysicianProfile {
    double competence = 0.617;  // P(modal prior option == truth)
    // Modal prior mass. A Beta draw x maps to 1/n + (1 - 1/n) x; a point
    // mass is used as the modal mass directly.
    BetaDist confidence{2.0, 2.0, std::nullopt};
    double anticipation_bump = 0.0;

    void validate() const {
        if (!(competence >= 0.0 && competence <= 1.0)) throw ConfigError("competence must lie in [0,1]");
        confidence.validate();
        if (confidence.point && !(*confidence.point > 0.0 && *confidence.point < 1.0))
            throw ConfigError("fixed modal mass must lie strictly inside (0,1)");
        if (!std::isfinite(anticipation_bump)) throw ConfigError("anticipation_bump must be finite");
    }
};

struct PopulationMix {
    std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
    std::array<PhysicianProfile, 4> profiles{};

    // Equal-weight mix whose mean competence is 0.6175.
    static PopulationMix defaults() {
        PopulationMix mix;
        const BetaDist high_conf{5.0, 1.5, std::nullopt};
        const BetaDist low_conf{1.5, 5.0, std::nullopt};
        mix.profiles[0] = {0.76, high_conf, 0.03};
        mix.profiles[1] = {0.76, low_conf, 0.03};
        mix.profiles[2] = {0.475, high_conf, 0.03};
        mix.profiles[3] = {0.475, low_conf, 0.03};
        return mix;
    }

    static PopulationMix single(const PhysicianProfile& p) {
        PopulationMix mix;
        mix.weights = {1.0, 0.0, 0.0, 0.0};
        mix.profiles.fill(p);
        return mix;
    }

    void validate() const {
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("population weights must be >= 0");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("population weights must sum to 1");
        for (const auto& p : profiles) p.validate();
    }

    PhysicianType draw(RngStream& rng) const {
        const double u = uniform01(rng);
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            last = i;
            acc += weights[i];
            if (u < acc) return static_cast<PhysicianType>(i);
        }
        return static_cast<PhysicianType>(last);
    }
};

struct Arm {
    bool explanation = false;
    Format format = Format::deterministic;

    // 0..3 in the order P, EP, D, ED.
    std::uint64_t key() const noexcept {
        return (format == Format::deterministic ? 2u : 0u) + (explanation ? 1u : 0u);
    }
    std::string label() const {
        return std::string(explanation ? "E" : "") + (format == Format::deterministic ? "D" : "P");
    }
    static Arm parse(const std::string& s) {
        if (s == "P") return {false, Format::probabilistic};
        if (s == "EP") return {true, Format::probabilistic};
        if (s == "D") return {false, Format::deterministic};
        if (s == "ED") return {true, Format::deterministic};
        throw ConfigError("unknown arm '" + s + "' (expected P, EP, D or ED)");
    }
    static std::vector<Arm> all() {
        return {{false, Format::probabilistic}, {true, Format::probabilistic},
                {false, Format::deterministic}, {true, Format::deterministic}};
    }
    friend bool operator==(const Arm&, const Arm&) = default;
};

struct SimConfig {
    std::uint64_t seed = 20250101;
    std::size_t n_trials = 1000;  // per arm
    std::size_t scenarios_per_subject = 15;
    SignalModel model{};
    BehaviorParams behavior{};
    BetaDist q_dist{5.0, 2.0, std::nullopt};
    PopulationMix population = PopulationMix::defaults();
    std::vector<Arm> arms = Arm::all();

    void validate() const {
        if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
        if (scenarios_per_subject < 1) throw ConfigError("scenarios_per_subject must be >= 1");
        model.validate();
        behavior.validate();
        q_dist.validate();
        population.validate();
    }
};

// Perceived accuracy after an additive bump. Without a bump the true
// accuracy is used as is; a bump is clamped to [1/n, 0.999].
inline double perceived_accuracy(double mu, double bump, std::size_t n) {
    if (bump == 0.0) return mu;
    return clamp_perceived_accuracy(mu + bump, n);
}

inline BeliefVector sample_prior(RngStream& rng, const PhysicianProfile& profile, Option truth, std::size_t n) {
    if (truth >= n) throw DomainError("sample_prior: truth out of range");
    const double floor = 1.0 / static_cast<double>(n);
    Option modal = truth;
    if (!(uniform01(rng) < profile.competence)) {
        const Option k = uniform_index(rng, n - 1);
        modal = k >= truth ? k + 1 : k;
    }
    double m;
    if (profile.confidence.point) {
        m = *profile.confidence.point;
    } else {
        const double x = std::clamp(profile.confidence(rng), 1e-9, 1.0 - 1e-9);
        m = floor + (1.0 - floor) * x;
    }
    std::vector<double> p(n, (1.0 - m) / static_cast<double>(n - 1));
    p[modal] = m;
    return BeliefVector::from_mass(std::move(p));
}

// Expected SSQ of the Bayes posterior, averaging over the recommendation
// distribution that the prior and a perceived accuracy jointly imply.
inline double expected_posterior_ssq(const BeliefVector& prior, double perceived_mu, std::size_t n) {
    if (prior.size() != n) throw DomainError("expected_posterior_ssq: dimension mismatch");
    if (!(perceived_mu >= 0.0 && perceived_mu <= 1.0)) throw DomainError("perceived accuracy must lie in [0,1]");
    const SignalModel model(perceived_mu, DiagnosisSpace(n));
    const double off = model.off_signal();
    double total = 0.0;
    for (Option r = 0; r < n; ++r) {
        double pr = 0.0;
        for (Option t = 0; t < n; ++t) pr += prior[t] * (t == r ? perceived_mu : off);
        if (pr <= 0.0) continue;
        total += pr * ssq(bayes_posterior(prior, model, r));
    }
    return std::clamp(total, 1.0 / static_cast<double>(n), 1.0);
}

// Random quantities of one trial, before any behavioral response.
struct TrialDraw {
    Option truth = 0;
    Option recommended = 0;
    BeliefVector prior;
    double quality = 0.0;
};

inline TrialDraw draw_trial(RngStream& rng, const SimConfig& cfg, const PhysicianProfile& profile) {
    const std::size_t n = cfg.model.n();
    TrialDraw d;
    d.truth = uniform_index(rng, n);
    d.recommended = sample_signal(rng, d.truth, cfg.model);
    d.prior = sample_prior(rng, profile, d.truth, n);
    // Drawn in every arm so the streams stay aligned across arms.
    d.quality = sample_explanation_quality(rng, cfg.q_dist);
    return d;
}

// Perceived accuracy used by the posterior update in an arm.
inline double posterior_accuracy(const SimConfig& cfg, Format format) {
    const double bump = format == Format::deterministic ? cfg.behavior.format_trust_bump : 0.0;
    return perceived_accuracy(cfg.model.mu, bump, cfg.model.n());
}

inline BeliefVector respond(const TrialDraw& d, const SimConfig& cfg, bool explanation, Format format,
                            double lambda) {
    const SignalModel perceived(posterior_accuracy(cfg, format), cfg.model.space);
    if (!explanation) return bayes_posterior(d.prior, perceived, d.recommended);
    return explained_posterior(d.prior, perceived, d.recommended, BehaviorParams{lambda, 0.0}, d.quality);
}

inline TrialRecord simulate_trial(RngStream& rng, const SimConfig& cfg, const Arm& arm,
                                  const PhysicianProfile& profile, std::string subject_id = "S0",
                                  std::string scenario_id = "Q01") {
    const std::size_t n = cfg.model.n();
    const TrialDraw d = draw_trial(rng, cfg, profile);

    TrialRecord rec;
    rec.subject_id = std::move(subject_id);
    rec.scenario_id = std::move(scenario_id);
    rec.truth = d.truth;
    rec.arm_explanation = arm.explanation;
    rec.arm_format = arm.format;
    rec.advice = AdviceEvent::canonical(cfg.model, d.recommended, arm.format,
                                        arm.explanation ? std::optional<Explanation>(Explanation(d.quality))
                                                        : std::nullopt);
    rec.prior = d.prior;

    const double post_mu = posterior_accuracy(cfg, arm.format);
    const double ex_ante_mu =
        arm.explanation ? perceived_accuracy(post_mu, profile.anticipation_bump, n) : post_mu;
    rec.expected_ssq = expected_posterior_ssq(d.prior, ex_ante_mu, n);
    rec.posterior = respond(d, cfg, arm.explanation, arm.format, cfg.behavior.lambda);
    return rec;
}

namespace detail {

inline constexpr std::uint64_t kTrialTag = 0x7452;
inline constexpr std::uint64_t kSubjectTag = 0x5375;
inline constexpr std::uint64_t kCalibrationTag = 0x4361;

inline std::string subject_label(const Arm& arm, std::size_t subject) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%05zu", arm.label().c_str(), subject);
    return buf;
}

inline std::string scenario_label(std::size_t scenario) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "Q%02zu", scenario + 1);
    return buf;
}

// Runs body(i) for i in [0, count) on up to `threads` workers.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * chunk;
                const std::size_t hi = std::min(count, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline PhysicianType subject_type(const SimConfig& cfg, const Arm& arm, std::size_t subject) {
    auto rng = make_stream(cfg.seed, {arm.key(), subject, detail::kSubjectTag});
    return cfg.population.draw(rng);
}

// Records are ordered by the configured arm order, then by trial index.
inline std::vector<TrialRecord> run_experiment(const SimConfig& cfg, std::size_t threads = 1) {
    cfg.validate();
    const std::size_t per_arm = cfg.n_trials;
    std::vector<TrialRecord> out(cfg.arms.size() * per_arm);
    detail::parallel_for(out.size(), threads, [&](std::size_t slot) {
        const Arm& arm = cfg.arms[slot / per_arm];
        const std::size_t i = slot % per_arm;
        const std::size_t subject = i / cfg.scenarios_per_subject;
        const auto type = subject_type(cfg, arm, subject);
        auto rng = make_stream(cfg.seed, {arm.key(), i, detail::kTrialTag});
        out[slot] = simulate_trial(rng, cfg, arm, cfg.population.profiles[static_cast<std::size_t>(type)],
                                   detail::subject_label(arm, subject),
                                   detail::scenario_label(i % cfg.scenarios_per_subject));
    });
    return out;
}

struct CalibrationResult {
    double lambda = 0.0;
    double achieved_benefit_pp = 0.0;
    double achieved_harm_pp = 0.0;
    double target_benefit_pp = 0.0;
    double target_harm_pp = 0.0;
    std::size_t iterations = 0;
    std::size_t sample_size = 0;
};

class CalibrationError : public std::runtime_error {
public:
    CalibrationError(const std::string& what, CalibrationResult best)
        : std::runtime_error(what), best_(best) {}
    const CalibrationResult& best() const noexcept { return best_; }

private:
    CalibrationResult best_;
};

struct CalibrationOptions {
    double lambda_max = 20.0;
    std::size_t max_iterations = 200;
    std::size_t threads = 1;
};

// Explanation effect on posterior accuracy (pp), separately for AI-correct
// and AI-incorrect trials, from a fixed set of paired draws: each draw is
// answered once without and once with an explanation, so the effect is
// exactly zero at lambda = 0 and nondecreasing in lambda on the benefit side.
class PairedEffectSample {
public:
    PairedEffectSample(const SimConfig& cfg, std::size_t threads = 1) : cfg_(cfg) {
        cfg_.validate();
        std::vector<Format> formats;
        for (const auto& a : cfg_.arms)
            if (std::find(formats.begin(), formats.end(), a.format) == formats.end()) formats.push_back(a.format);
        if (formats.empty()) throw ConfigError("calibration needs at least one arm");
        const std::size_t per = cfg_.n_trials;
        draws_.resize(formats.size() * per);
        formats_.resize(draws_.size());
        baseline_.resize(draws_.size());
        detail::parallel_for(draws_.size(), threads, [&](std::size_t slot) {
            const Format f = formats[slot / per];
            const Arm arm{true, f};
            const std::size_t i = slot % per;
            const auto type = subject_type(cfg_, arm, i / cfg_.scenarios_per_subject);
            auto rng = make_stream(cfg_.seed, {arm.key(), i, detail::kCalibrationTag});
            draws_[slot] = draw_trial(rng, cfg_, cfg_.population.profiles[static_cast<std::size_t>(type)]);
            formats_[slot] = f;
            baseline_[slot] = respond(draws_[slot], cfg_, false, f, 0.0)[draws_[slot].truth];
        });
    }

    std::size_t size() const noexcept { return draws_.size(); }

    // {benefit, harm} in percentage points.
    std::pair<double, double> effects(double lambda) const {
        double sum_c = 0.0, sum_i = 0.0;
        std::size_t n_c = 0, n_i = 0;
        for (std::size_t s = 0; s < draws_.size(); ++s) {
            const auto& d = draws_[s];
            const double diff = respond(d, cfg_, true, formats_[s], lambda)[d.truth] - baseline_[s];
            if (d.truth == d.recommended) {
                sum_c += diff;
                ++n_c;
            } else {
                sum_i += diff;
                ++n_i;
            }
        }
        return {n_c ? 100.0 * sum_c / static_cast<double>(n_c) : 0.0,
                n_i ? 100.0 * sum_i / static_cast<double>(n_i) : 0.0};
    }

private:
    SimConfig cfg_;
    std::vector<TrialDraw> draws_;
    std::vector<Format> formats_;
    std::vector<double> baseline_;
};

// Bisection on lambda so the simulated explanation effect on accuracy when
// the AI is correct matches `target_benefit_pp` within `tol_pp`. The
// harm-side effect is reported, not targeted.
inline CalibrationResult calibrate_lambda(const SimConfig& cfg, double target_benefit_pp, double target_harm_pp,
                                          double tol_pp, const CalibrationOptions& opt = {}) {
    if (!std::isfinite(target_benefit_pp) || !std::isfinite(target_harm_pp))
        throw ConfigError("calibration targets must be finite");
    if (!(tol_pp > 0.0)) throw ConfigError("calibration tolerance must be > 0");
    if (!(opt.lambda_max > 0.0)) throw ConfigError("lambda_max must be > 0");

    const PairedEffectSample sample(cfg, opt.threads);
    CalibrationResult res;
    res.target_benefit_pp = target_benefit_pp;
    res.target_harm_pp = target_harm_pp;
    res.sample_size = sample.size();

    auto evaluate = [&](double lambda) {
        const auto [b, h] = sample.effects(lambda);
        res.lambda = lambda;
        res.achieved_benefit_pp = b;
        res.achieved_harm_pp = h;
    };

    evaluate(0.0);
    if (std::abs(res.achieved_benefit_pp - target_benefit_pp) <= tol_pp) return res;
    if (target_benefit_pp < res.achieved_benefit_pp)
        throw CalibrationError("target benefit is below the lambda = 0 effect", res);
    evaluate(opt.lambda_max);
    if (res.achieved_benefit_pp < target_benefit_pp - tol_pp)
        throw CalibrationError("target benefit unattainable for lambda <= " + std::to_string(opt.lambda_max), res);

    double lo = 0.0, hi = opt.lambda_max;
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        evaluate(mid);
        res.iterations = it;
        const double gap = res.achieved_benefit_pp - target_benefit_pp;
        if (std::abs(gap) <= 0.01 * tol_pp || hi - lo < 1e-10) break;
        (gap < 0.0 ? lo : hi) = mid;
    }
    if (std::abs(res.achieved_benefit_pp - target_benefit_pp) > tol_pp)
        throw CalibrationError("bisection did not reach the target tolerance", res);
    return res;
}

}  // namespace paradoxsim
