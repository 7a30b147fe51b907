#pragma once

// Run configuration document (JSON). Every section is optional and falls
// back to defaults; unknown keys anywhere are rejected with their full path.
//
// {
//   "seed": 42,
//   "simulation":  { "n_trials", "scenarios_per_subject", "mu", "lambda",
//                    "format_trust_bump", "q_dist", "population", "arms" },
//   "analysis":    { "mu_true", "weights", "bootstrap_resamples" },
//   "calibration": { "target_benefit_pp", "target_harm_pp", "tol_pp", "lambda_max" },
//   "welfare":     { "mode", "first_best_convention", "valuation", "effects",
//                    "policies", "dataset" },
//   "paths":       { "input", "output" }
// }

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "paradoxsim/analysis.hpp"
#include "paradoxsim/report.hpp"
#include "paradoxsim/simulate.hpp"
#include "paradoxsim/welfare.hpp"

namespace paradoxsim {

enum class WelfareMode { paper, sim };

struct PolicySpec {
    PolicyKind kind = PolicyKind::status_quo;
    std::string name;
    double threshold_percentile = 85.0;
    RuleSpec rule{};
};

struct RunConfig {
    std::uint64_t seed = 20250101;
    SimConfig sim{};

    double mu_true = kDefaultAiAccuracy;
    ShareWeights weights = ShareWeights::empirical();
    std::size_t bootstrap_resamples = 0;  // 0 disables intervals

    double target_benefit_pp = 6.3;
    double target_harm_pp = -4.9;
    double tol_pp = 0.1;
    double lambda_max = 20.0;

    WelfareMode welfare_mode = WelfareMode::paper;
    FirstBestConvention convention = FirstBestConvention::table;
    Valuation valuation{};
    EffectInputs effects = EffectInputs::published();
    std::vector<PolicySpec> policies;  // empty -> the five-policy menu
    bool policies_given = false;
    std::string welfare_dataset;

    std::string input_path;
    std::string output_path;

    json document = json::object();  // as supplied, for echo and hashing

    std::vector<TransparencyPolicy> transparency_policies() const {
        std::vector<TransparencyPolicy> out;
        if (!policies_given) {
            out = published_policy_menu();
        } else {
            for (const auto& s : policies) {
                TransparencyPolicy p = TransparencyPolicy::of(s.kind, s.name);
                p.threshold_percentile = s.threshold_percentile;
                if (s.kind == PolicyKind::custom) p.rule = s.rule;
                out.push_back(std::move(p));
            }
        }
        for (auto& p : out) p.convention = convention;
        return out;
    }
};

namespace detail {

struct ConfigReader {
    static void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) throw ConfigError("config: '" + path + "' must be an object");
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items())
            if (!ok.count(k)) throw ConfigError("config: unknown key '" + (path.empty() ? k : path + "." + k) + "'");
    }

    template <typename T>
    static void read(const json& obj, const std::string& path, const char* key, T& out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: '" + (path.empty() ? std::string(key) : path + "." + key) +
                              "' has the wrong type");
        }
    }
};

inline BetaDist parse_beta(const json& j, const std::string& path) {
    ConfigReader::check_keys(j, path, {"alpha", "beta", "point"});
    BetaDist d;
    ConfigReader::read(j, path, "alpha", d.alpha);
    ConfigReader::read(j, path, "beta", d.beta);
    if (j.contains("point")) {
        double p = 0.0;
        ConfigReader::read(j, path, "point", p);
        d.point = p;
    }
    d.validate();
    return d;
}

inline TreatmentEffects parse_effects(const json& j, const std::string& path) {
    ConfigReader::check_keys(j, path, {"delta_plus", "delta_minus", "mu_eff", "baseline_accuracy"});
    TreatmentEffects e;
    ConfigReader::read(j, path, "delta_plus", e.delta_plus);
    ConfigReader::read(j, path, "delta_minus", e.delta_minus);
    ConfigReader::read(j, path, "mu_eff", e.mu_eff);
    ConfigReader::read(j, path, "baseline_accuracy", e.baseline_accuracy);
    e.validate();
    return e;
}

}  // namespace detail

inline RunConfig parse_run_config(const json& doc) {
    using detail::ConfigReader;
    RunConfig cfg;
    cfg.document = doc;
    ConfigReader::check_keys(doc, "", {"seed", "simulation", "analysis", "calibration", "welfare", "paths"});
    ConfigReader::read(doc, "", "seed", cfg.seed);

    if (doc.contains("simulation")) {
        const auto& s = doc["simulation"];
        const std::string p = "simulation";
        ConfigReader::check_keys(s, p,
                                 {"n_trials", "scenarios_per_subject", "mu", "lambda", "format_trust_bump", "q_dist",
                                  "population", "arms"});
        ConfigReader::read(s, p, "n_trials", cfg.sim.n_trials);
        ConfigReader::read(s, p, "scenarios_per_subject", cfg.sim.scenarios_per_subject);
        double mu = cfg.sim.model.mu;
        ConfigReader::read(s, p, "mu", mu);
        cfg.sim.model = SignalModel(mu, DiagnosisSpace(5));
        ConfigReader::read(s, p, "lambda", cfg.sim.behavior.lambda);
        ConfigReader::read(s, p, "format_trust_bump", cfg.sim.behavior.format_trust_bump);
        if (s.contains("q_dist")) cfg.sim.q_dist = detail::parse_beta(s["q_dist"], p + ".q_dist");
        if (s.contains("population")) {
            const auto& pop = s["population"];
            const std::string pp = p + ".population";
            ConfigReader::check_keys(pop, pp, {"weights", "profiles"});
            if (pop.contains("weights")) {
                std::vector<double> w;
                ConfigReader::read(pop, pp, "weights", w);
                if (w.size() != 4) throw ConfigError("config: '" + pp + ".weights' needs 4 entries");
                std::copy(w.begin(), w.end(), cfg.sim.population.weights.begin());
            }
            if (pop.contains("profiles")) {
                const auto& profs = pop["profiles"];
                if (!profs.is_array() || profs.size() != 4)
                    throw ConfigError("config: '" + pp + ".profiles' needs 4 entries");
                for (std::size_t i = 0; i < 4; ++i) {
                    const std::string ip = pp + ".profiles[" + std::to_string(i) + "]";
                    ConfigReader::check_keys(profs[i], ip, {"competence", "confidence", "anticipation_bump"});
                    auto& prof = cfg.sim.population.profiles[i];
                    ConfigReader::read(profs[i], ip, "competence", prof.competence);
                    ConfigReader::read(profs[i], ip, "anticipation_bump", prof.anticipation_bump);
                    if (profs[i].contains("confidence"))
                        prof.confidence = detail::parse_beta(profs[i]["confidence"], ip + ".confidence");
                }
            }
        }
        if (s.contains("arms")) {
            std::vector<std::string> labels;
            ConfigReader::read(s, p, "arms", labels);
            cfg.sim.arms.clear();
            for (const auto& l : labels) cfg.sim.arms.push_back(Arm::parse(l));
        }
    }
    cfg.sim.seed = cfg.seed;

    if (doc.contains("analysis")) {
        const auto& a = doc["analysis"];
        ConfigReader::check_keys(a, "analysis", {"mu_true", "weights", "bootstrap_resamples"});
        ConfigReader::read(a, "analysis", "mu_true", cfg.mu_true);
        ConfigReader::read(a, "analysis", "bootstrap_resamples", cfg.bootstrap_resamples);
        if (a.contains("weights")) {
            const auto& w = a["weights"];
            if (w.is_string() && w == "empirical")
                cfg.weights = ShareWeights::empirical();
            else if (w.is_string() && w == "published")
                cfg.weights = ShareWeights::published();
            else if (w.is_number())
                cfg.weights = ShareWeights::fixed(w.get<double>());
            else
                throw ConfigError("config: 'analysis.weights' must be \"empirical\", \"published\" or a number");
        }
    }

    if (doc.contains("calibration")) {
        const auto& c = doc["calibration"];
        ConfigReader::check_keys(c, "calibration", {"target_benefit_pp", "target_harm_pp", "tol_pp", "lambda_max"});
        ConfigReader::read(c, "calibration", "target_benefit_pp", cfg.target_benefit_pp);
        ConfigReader::read(c, "calibration", "target_harm_pp", cfg.target_harm_pp);
        ConfigReader::read(c, "calibration", "tol_pp", cfg.tol_pp);
        ConfigReader::read(c, "calibration", "lambda_max", cfg.lambda_max);
    }

    if (doc.contains("welfare")) {
        const auto& w = doc["welfare"];
        const std::string p = "welfare";
        ConfigReader::check_keys(w, p, {"mode", "first_best_convention", "valuation", "effects", "policies", "dataset"});
        if (w.contains("mode")) {
            std::string m;
            ConfigReader::read(w, p, "mode", m);
            if (m == "paper")
                cfg.welfare_mode = WelfareMode::paper;
            else if (m == "sim")
                cfg.welfare_mode = WelfareMode::sim;
            else
                throw ConfigError("config: 'welfare.mode' must be \"paper\" or \"sim\"");
        }
        if (w.contains("first_best_convention")) {
            std::string c;
            ConfigReader::read(w, p, "first_best_convention", c);
            if (c == "table")
                cfg.convention = FirstBestConvention::table;
            else if (c == "equation")
                cfg.convention = FirstBestConvention::equation;
            else
                throw ConfigError("config: 'welfare.first_best_convention' must be \"table\" or \"equation\"");
        }
        if (w.contains("valuation")) {
            const auto& v = w["valuation"];
            const std::string vp = p + ".valuation";
            ConfigReader::check_keys(v, vp, {"n_diagnoses", "cost_per_error", "mode", "value_per_pp"});
            ConfigReader::read(v, vp, "n_diagnoses", cfg.valuation.n_diagnoses);
            ConfigReader::read(v, vp, "cost_per_error", cfg.valuation.cost_per_error);
            ConfigReader::read(v, vp, "value_per_pp", cfg.valuation.value_per_pp);
            if (v.contains("mode")) {
                std::string m;
                ConfigReader::read(v, vp, "mode", m);
                if (m == "literal")
                    cfg.valuation.mode = Valuation::Mode::literal;
                else if (m == "calibrated")
                    cfg.valuation.mode = Valuation::Mode::calibrated;
                else
                    throw ConfigError("config: '" + vp + ".mode' must be \"literal\" or \"calibrated\"");
            }
            try {
                cfg.valuation.validate();
            } catch (const DomainError& e) {
                throw ConfigError(std::string("config: ") + e.what());
            }
        }
        if (w.contains("effects")) {
            const auto& e = w["effects"];
            const std::string ep = p + ".effects";
            ConfigReader::check_keys(e, ep, {"pooled", "confident", "low_competence", "high_competence",
                                             "low_competence_share"});
            cfg.effects = EffectInputs{};
            if (e.contains("pooled")) cfg.effects.pooled = detail::parse_effects(e["pooled"], ep + ".pooled");
            if (e.contains("confident"))
                cfg.effects.confident = detail::parse_effects(e["confident"], ep + ".confident");
            if (e.contains("low_competence"))
                cfg.effects.low_competence = detail::parse_effects(e["low_competence"], ep + ".low_competence");
            if (e.contains("high_competence"))
                cfg.effects.high_competence = detail::parse_effects(e["high_competence"], ep + ".high_competence");
            ConfigReader::read(e, ep, "low_competence_share", cfg.effects.low_competence_share);
        }
        if (w.contains("policies")) {
            const auto& list = w["policies"];
            if (!list.is_array()) throw ConfigError("config: 'welfare.policies' must be an array");
            cfg.policies_given = true;
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string ip = p + ".policies[" + std::to_string(i) + "]";
                ConfigReader::check_keys(list[i], ip, {"kind", "name", "threshold_percentile", "rule"});
                PolicySpec spec;
                std::string kind;
                ConfigReader::read(list[i], ip, "kind", kind);
                if (kind.empty()) throw ConfigError("config: '" + ip + ".kind' is required");
                spec.kind = parse_policy_kind(kind);
                ConfigReader::read(list[i], ip, "name", spec.name);
                ConfigReader::read(list[i], ip, "threshold_percentile", spec.threshold_percentile);
                if (list[i].contains("rule")) {
                    const auto& r = list[i]["rule"];
                    const std::string rp = ip + ".rule";
                    ConfigReader::check_keys(r, rp, {"explain_low_competence", "explain_high_competence",
                                                     "min_percentile"});
                    ConfigReader::read(r, rp, "explain_low_competence", spec.rule.explain_low_competence);
                    ConfigReader::read(r, rp, "explain_high_competence", spec.rule.explain_high_competence);
                    ConfigReader::read(r, rp, "min_percentile", spec.rule.min_percentile);
                }
                cfg.policies.push_back(spec);
            }
        }
        ConfigReader::read(w, p, "dataset", cfg.welfare_dataset);
    }

    if (doc.contains("paths")) {
        const auto& pa = doc["paths"];
        ConfigReader::check_keys(pa, "paths", {"input", "output"});
        ConfigReader::read(pa, "paths", "input", cfg.input_path);
        ConfigReader::read(pa, "paths", "output", cfg.output_path);
    }

    cfg.sim.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc);
}

// Effective configuration after defaults and overrides, as echoed into
// sidecars and reports.
inline json effective_config(const RunConfig& c) {
    json pop = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& p = c.sim.population.profiles[i];
        json conf = p.confidence.point ? json{{"point", *p.confidence.point}}
                                       : json{{"alpha", p.confidence.alpha}, {"beta", p.confidence.beta}};
        pop.push_back(json{{"type", kPhysicianTypeNames[i]},
                           {"weight", c.sim.population.weights[i]},
                           {"competence", p.competence},
                           {"confidence", conf},
                           {"anticipation_bump", p.anticipation_bump}});
    }
    json arms = json::array();
    for (const auto& a : c.sim.arms) arms.push_back(a.label());
    json q = c.sim.q_dist.point ? json{{"point", *c.sim.q_dist.point}}
                                : json{{"alpha", c.sim.q_dist.alpha}, {"beta", c.sim.q_dist.beta}};
    return json{{"seed", c.seed},
                {"simulation",
                 {{"n_trials", c.sim.n_trials},
                  {"scenarios_per_subject", c.sim.scenarios_per_subject},
                  {"mu", c.sim.model.mu},
                  {"lambda", c.sim.behavior.lambda},
                  {"format_trust_bump", c.sim.behavior.format_trust_bump},
                  {"q_dist", q},
                  {"population", pop},
                  {"arms", arms}}},
                {"analysis",
                 {{"mu_true", c.mu_true},
                  {"weights", c.weights.kind == ShareWeights::Kind::empirical ? json("empirical")
                                                                               : json(c.weights.share_correct)},
                  {"bootstrap_resamples", c.bootstrap_resamples}}},
                {"calibration",
                 {{"target_benefit_pp", c.target_benefit_pp},
                  {"target_harm_pp", c.target_harm_pp},
                  {"tol_pp", c.tol_pp},
                  {"lambda_max", c.lambda_max}}}};
}

}  // namespace paradoxsim
