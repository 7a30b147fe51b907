#pragma once

// Machine-readable reports. The structured form is a JSON document with a
// schema-versioned header (tool version, seed, config hash, config echo)
// followed by whichever tables were produced. The csv form flattens the same
// tables to long-format `table,key,value` rows for plotting.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paradoxsim/analysis.hpp"
#include "paradoxsim/simulate.hpp"
#include "paradoxsim/welfare.hpp"

#ifndef PARADOXSIM_VERSION
#define PARADOXSIM_VERSION "0.0.0"
#endif

namespace paradoxsim {

using json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "paradoxsim.report";
inline constexpr int kReportSchemaVersion = 1;

inline std::string tool_version() { return PARADOXSIM_VERSION; }

// FNV-1a over the compact JSON dump; stable across platforms.
inline std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

// JSON has no NaN/inf; they are written as null and read back as NaN.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double num(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline void to_json(json& j, const CellStat& c) {
    j = json{{"mean", detail::num(c.mean)}, {"std_error", detail::num(c.std_error)}, {"count", c.count}};
}
inline void from_json(const json& j, CellStat& c) {
    c.mean = detail::num(j.at("mean"));
    c.std_error = detail::num(j.at("std_error"));
    c.count = j.at("count").get<std::size_t>();
}

inline void to_json(json& j, const ParadoxTable& t) {
    j = json{{"cells", t.cells},
             {"delta_plus", detail::num(t.delta_plus)},
             {"delta_minus", detail::num(t.delta_minus)},
             {"share_correct", detail::num(t.share_correct)},
             {"net_benefit", detail::num(t.net_benefit)},
             {"paradox_magnitude", detail::num(t.paradox_magnitude)}};
}
inline void from_json(const json& j, ParadoxTable& t) {
    t.cells = j.at("cells").get<std::array<CellStat, 4>>();
    t.delta_plus = detail::num(j.at("delta_plus"));
    t.delta_minus = detail::num(j.at("delta_minus"));
    t.share_correct = detail::num(j.at("share_correct"));
    t.net_benefit = detail::num(j.at("net_benefit"));
    t.paradox_magnitude = detail::num(j.at("paradox_magnitude"));
}

inline void to_json(json& j, const OverrelianceCell& c) {
    j = json{{"alpha", c.alpha},
             {"mu_implied", c.mu_implied},
             {"deviation", detail::num(c.deviation)},
             {"prevalence", detail::num(c.prevalence)},
             {"count", c.count},
             {"indeterminate", c.indeterminate}};
}
inline void from_json(const json& j, OverrelianceCell& c) {
    c.alpha = j.at("alpha").get<CellStat>();
    c.mu_implied = j.at("mu_implied").get<CellStat>();
    c.deviation = detail::num(j.at("deviation"));
    c.prevalence = detail::num(j.at("prevalence"));
    c.count = j.at("count").get<std::size_t>();
    c.indeterminate = j.at("indeterminate").get<std::size_t>();
}

inline void to_json(json& j, const OverrelianceTable& t) {
    j = json{{"mu_true", t.mu_true},
             {"cells", t.cells},
             {"delta_alpha_correct", detail::num(t.delta_alpha_correct)},
             {"delta_alpha_incorrect", detail::num(t.delta_alpha_incorrect)},
             {"delta_mu_implied_correct", detail::num(t.delta_mu_implied_correct)},
             {"delta_mu_implied_incorrect", detail::num(t.delta_mu_implied_incorrect)}};
}
inline void from_json(const json& j, OverrelianceTable& t) {
    t.mu_true = j.at("mu_true").get<double>();
    t.cells = j.at("cells").get<std::array<OverrelianceCell, 4>>();
    t.delta_alpha_correct = detail::num(j.at("delta_alpha_correct"));
    t.delta_alpha_incorrect = detail::num(j.at("delta_alpha_incorrect"));
    t.delta_mu_implied_correct = detail::num(j.at("delta_mu_implied_correct"));
    t.delta_mu_implied_incorrect = detail::num(j.at("delta_mu_implied_incorrect"));
}

inline void to_json(json& j, const DiscernmentResult& d) {
    j = json{{"revision", d.revision},
             {"shift_to_rec", d.shift},
             {"gap_no_explanation", detail::num(d.gap_no_explanation)},
             {"gap_explanation", detail::num(d.gap_explanation)},
             {"change", detail::num(d.change)}};
}
inline void from_json(const json& j, DiscernmentResult& d) {
    d.revision = j.at("revision").get<std::array<CellStat, 4>>();
    d.shift = j.at("shift_to_rec").get<std::array<CellStat, 4>>();
    d.gap_no_explanation = detail::num(j.at("gap_no_explanation"));
    d.gap_explanation = detail::num(j.at("gap_explanation"));
    d.change = detail::num(j.at("change"));
}

inline void to_json(json& j, const TypologyRow& r) {
    j = json{{"label", r.label},
             {"complete", r.complete},
             {"cells", r.cells},
             {"benefit", detail::num(r.benefit)},
             {"harm", detail::num(r.harm)},
             {"ratio", detail::num(r.ratio)},
             {"ratio_infinite", r.ratio_infinite},
             {"net", detail::num(r.net)},
             {"subjects", r.subjects}};
}
inline void from_json(const json& j, TypologyRow& r) {
    r.label = j.at("label").get<std::string>();
    r.complete = j.at("complete").get<bool>();
    r.cells = j.at("cells").get<std::array<CellStat, 4>>();
    r.benefit = detail::num(j.at("benefit"));
    r.harm = detail::num(j.at("harm"));
    r.ratio_infinite = j.at("ratio_infinite").get<bool>();
    r.ratio = r.ratio_infinite ? std::numeric_limits<double>::infinity() : detail::num(j.at("ratio"));
    r.net = detail::num(j.at("net"));
    r.subjects = j.at("subjects").get<std::size_t>();
}

inline void to_json(json& j, const TypologyTable& t) {
    j = json{{"rows", t.rows},
             {"share_correct", detail::num(t.share_correct)},
             {"competence_median", detail::num(t.competence_median)},
             {"confidence_median", detail::num(t.confidence_median)},
             {"degenerate_split", t.degenerate_split}};
}
inline void from_json(const json& j, TypologyTable& t) {
    t.rows = j.at("rows").get<std::array<TypologyRow, 4>>();
    t.share_correct = detail::num(j.at("share_correct"));
    t.competence_median = detail::num(j.at("competence_median"));
    t.confidence_median = detail::num(j.at("confidence_median"));
    t.degenerate_split = j.at("degenerate_split").get<bool>();
}

inline void to_json(json& j, const AccuracyDecomposition& a) {
    j = json{{"share_correct_signal", a.share_correct_signal},
             {"acc_given_correct", a.acc_given_correct},
             {"acc_given_incorrect", a.acc_given_incorrect},
             {"total", a.total}};
}
inline void from_json(const json& j, AccuracyDecomposition& a) {
    a.share_correct_signal = j.at("share_correct_signal").get<double>();
    a.acc_given_correct = j.at("acc_given_correct").get<double>();
    a.acc_given_incorrect = j.at("acc_given_incorrect").get<double>();
    a.total = j.at("total").get<double>();
}

inline void to_json(json& j, const TreatmentEffects& e) {
    j = json{{"delta_plus", e.delta_plus},
             {"delta_minus", e.delta_minus},
             {"mu_eff", e.mu_eff},
             {"baseline_accuracy", e.baseline_accuracy}};
}
inline void from_json(const json& j, TreatmentEffects& e) {
    e.delta_plus = j.at("delta_plus").get<double>();
    e.delta_minus = j.at("delta_minus").get<double>();
    e.mu_eff = j.at("mu_eff").get<double>();
    e.baseline_accuracy = j.value("baseline_accuracy", 0.0);
}

inline void to_json(json& j, const WelfareReport& r) {
    j = json{{"policy", r.policy},
             {"kind", to_string(r.kind)},
             {"W_pp", r.W},
             {"dollar_value", r.dollar_value},
             {"efficiency", r.efficiency},
             {"first_best_W_pp", r.first_best_W}};
    j["effects"] = r.effects ? json(*r.effects) : json(nullptr);
}
inline void from_json(const json& j, WelfareReport& r) {
    r.policy = j.at("policy").get<std::string>();
    r.kind = parse_policy_kind(j.at("kind").get<std::string>());
    r.W = j.at("W_pp").get<double>();
    r.dollar_value = j.at("dollar_value").get<double>();
    r.efficiency = j.at("efficiency").get<double>();
    r.first_best_W = j.at("first_best_W_pp").get<double>();
    if (j.at("effects").is_null())
        r.effects.reset();
    else
        r.effects = j.at("effects").get<TreatmentEffects>();
}

inline void to_json(json& j, const CalibrationResult& c) {
    j = json{{"lambda", c.lambda},
             {"achieved_benefit_pp", c.achieved_benefit_pp},
             {"achieved_harm_pp", c.achieved_harm_pp},
             {"target_benefit_pp", c.target_benefit_pp},
             {"target_harm_pp", c.target_harm_pp},
             {"iterations", c.iterations},
             {"sample_size", c.sample_size}};
}
inline void from_json(const json& j, CalibrationResult& c) {
    c.lambda = j.at("lambda").get<double>();
    c.achieved_benefit_pp = j.at("achieved_benefit_pp").get<double>();
    c.achieved_harm_pp = j.at("achieved_harm_pp").get<double>();
    c.target_benefit_pp = j.at("target_benefit_pp").get<double>();
    c.target_harm_pp = j.at("target_harm_pp").get<double>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.sample_size = j.at("sample_size").get<std::size_t>();
}

struct Report {
    std::string tool_version = paradoxsim::tool_version();
    std::uint64_t seed = 0;
    std::string config_hash;
    json config = json::object();

    std::optional<ParadoxTable> paradox;
    std::optional<OverrelianceTable> overreliance;
    std::optional<DiscernmentResult> belief_updating;
    std::optional<TypologyTable> typology;
    std::optional<AccuracyDecomposition> decomposition;
    std::map<std::string, double> interactions;
    std::vector<WelfareReport> welfare;
    std::optional<CalibrationResult> calibration;
    std::map<std::string, Interval> intervals;
};

inline json report_to_json(const Report& r) {
    json j;
    j["schema"] = kReportSchema;
    j["schema_version"] = kReportSchemaVersion;
    j["tool_version"] = r.tool_version;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["config"] = r.config;
    json tables = json::object();
    if (r.paradox) tables["paradox"] = *r.paradox;
    if (r.overreliance) tables["overreliance"] = *r.overreliance;
    if (r.belief_updating) tables["belief_updating"] = *r.belief_updating;
    if (r.typology) tables["typology"] = *r.typology;
    if (r.decomposition) tables["accuracy_decomposition"] = *r.decomposition;
    if (!r.interactions.empty()) {
        json m = json::object();
        for (const auto& [k, v] : r.interactions) m[k] = detail::num(v);
        tables["interactions"] = m;
    }
    if (!r.welfare.empty()) tables["welfare"] = r.welfare;
    if (r.calibration) tables["calibration"] = *r.calibration;
    if (!r.intervals.empty()) {
        json m = json::object();
        for (const auto& [k, iv] : r.intervals)
            m[k] = json{{"estimate", detail::num(iv.estimate)},
                        {"lower", detail::num(iv.lower)},
                        {"upper", detail::num(iv.upper)},
                        {"resamples", iv.resamples},
                        {"clusters", iv.clusters}};
        tables["bootstrap_95ci"] = m;
    }
    j["tables"] = tables;
    return j;
}

inline Report report_from_json(const json& j) {
    if (j.value("schema", std::string{}) != kReportSchema) throw SchemaError("not a paradoxsim report");
    const int version = j.at("schema_version").get<int>();
    if (version != kReportSchemaVersion)
        throw SchemaError("unsupported report schema version " + std::to_string(version));
    Report r;
    r.tool_version = j.at("tool_version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.config = j.at("config");
    const auto& t = j.at("tables");
    if (t.contains("paradox")) r.paradox = t["paradox"].get<ParadoxTable>();
    if (t.contains("overreliance")) r.overreliance = t["overreliance"].get<OverrelianceTable>();
    if (t.contains("belief_updating")) r.belief_updating = t["belief_updating"].get<DiscernmentResult>();
    if (t.contains("typology")) r.typology = t["typology"].get<TypologyTable>();
    if (t.contains("accuracy_decomposition"))
        r.decomposition = t["accuracy_decomposition"].get<AccuracyDecomposition>();
    if (t.contains("interactions"))
        for (const auto& [k, v] : t["interactions"].items()) r.interactions[k] = detail::num(v);
    if (t.contains("welfare")) r.welfare = t["welfare"].get<std::vector<WelfareReport>>();
    if (t.contains("calibration")) r.calibration = t["calibration"].get<CalibrationResult>();
    if (t.contains("bootstrap_95ci"))
        for (const auto& [k, v] : t["bootstrap_95ci"].items())
            r.intervals[k] = Interval{detail::num(v.at("lower")), detail::num(v.at("upper")),
                                      detail::num(v.at("estimate")), v.at("resamples").get<std::size_t>(),
                                      v.at("clusters").get<std::size_t>()};
    return r;
}

enum class ReportFormat { structured, csv };

inline ReportFormat parse_report_format(const std::string& s) {
    if (s == "structured" || s == "json") return ReportFormat::structured;
    if (s == "csv") return ReportFormat::csv;
    throw ConfigError("report format must be 'structured' or 'csv'");
}

namespace detail {

inline void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    } else if (j.is_string()) {
        out.emplace_back(prefix, j.get<std::string>());
    } else {
        out.emplace_back(prefix, j.dump());
    }
}

}  // namespace detail

// Long-format rows "table,key,value"; the header block carries the report
// metadata as table "meta".
inline std::string report_to_csv(const Report& r) {
    const json j = report_to_json(r);
    std::ostringstream os;
    os << "table,key,value\n";
    os << "meta,schema," << kReportSchema << '\n';
    os << "meta,schema_version," << kReportSchemaVersion << '\n';
    os << "meta,tool_version," << r.tool_version << '\n';
    os << "meta,seed," << r.seed << '\n';
    os << "meta,config_hash," << r.config_hash << '\n';
    for (const auto& [name, table] : j.at("tables").items()) {
        std::vector<std::pair<std::string, std::string>> rows;
        detail::flatten(table, "", rows);
        for (const auto& [k, v] : rows) os << name << ',' << k << ',' << v << '\n';
    }
    return os.str();
}

inline void export_report(const Report& r, const std::string& path, ReportFormat format = ReportFormat::structured) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    if (format == ReportFormat::structured)
        out << report_to_json(r).dump(2) << '\n';
    else
        out << report_to_csv(r);
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

inline Report read_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("report is not valid JSON: ") + e.what());
    }
    return report_from_json(j);
}

}  // namespace paradoxsim
