#pragma once

// Trial CSV schema: UTF-8, comma-separated, header row required, columns
//
//   subject_id, scenario_id, arm_explanation (0|1), arm_format (det|prob),
//   truth (A-E), ai_rec (A-E), q (decimal or empty),
//   prior_pA..prior_pE, expected_ssq, post_pA..post_pE
//
// Probabilities are written in shortest round-trip form, so export followed
// by ingest reproduces every double exactly.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "paradoxsim/belief.hpp"
#include "paradoxsim/errors.hpp"
#include "paradoxsim/measures.hpp"

namespace paradoxsim {

inline constexpr std::size_t kCsvOptions = 5;
inline constexpr double kIngestRenormTolerance = 1e-6;

inline const std::vector<std::string>& trial_csv_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{"subject_id", "scenario_id", "arm_explanation", "arm_format", "truth", "ai_rec", "q"};
        for (char o = 'A'; o < 'A' + static_cast<char>(kCsvOptions); ++o) c.push_back(std::string("prior_p") + o);
        c.push_back("expected_ssq");
        for (char o = 'A'; o < 'A' + static_cast<char>(kCsvOptions); ++o) c.push_back(std::string("post_p") + o);
        return c;
    }();
    return cols;
}

inline std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{}) throw std::runtime_error("failed to format number");
    return std::string(buf.data(), end);
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& column, std::size_t row) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
        throw SchemaError("column '" + column + "': invalid number '" + std::string(s) + "'", row);
    return v;
}

inline Option parse_option(std::string_view s, const std::string& column, std::size_t row) {
    if (s.size() != 1 || s[0] < 'A' || s[0] >= 'A' + static_cast<char>(kCsvOptions))
        throw SchemaError("column '" + column + "': expected an option label A-E, got '" + std::string(s) + "'", row);
    return static_cast<Option>(s[0] - 'A');
}

inline BeliefVector parse_simplex(const std::vector<std::string_view>& fields, std::size_t first,
                                  const std::string& group, std::size_t row) {
    const auto& cols = trial_csv_columns();
    std::vector<double> p(kCsvOptions);
    double sum = 0.0;
    for (std::size_t j = 0; j < kCsvOptions; ++j) {
        p[j] = parse_double(fields[first + j], cols[first + j], row);
        if (p[j] < 0.0 || p[j] > 1.0)
            throw SchemaError("column '" + cols[first + j] + "': probability outside [0,1]", row);
        sum += p[j];
    }
    const double err = std::abs(sum - 1.0);
    if (err > kIngestRenormTolerance)
        throw SchemaError(group + " probabilities sum to " + format_double(sum) + " (must be 1 +/- 1e-6)", row);
    if (err > kSimplexTolerance) return BeliefVector::from_mass(std::move(p));
    return BeliefVector(std::move(p));
}

inline void check_identifier(const std::string& s, const char* what) {
    if (s.empty()) throw SchemaError(std::string(what) + " must not be empty");
    if (s.find_first_of(",\"\r\n") != std::string::npos)
        throw SchemaError(std::string(what) + " '" + s + "' contains a comma, quote or newline");
}

}  // namespace detail

inline void write_trials_csv(std::ostream& os, std::span<const TrialRecord> dataset) {
    const auto& cols = trial_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& r : dataset) {
        if (r.n() != kCsvOptions) throw SchemaError("trial CSV supports exactly 5 options");
        detail::check_identifier(r.subject_id, "subject_id");
        detail::check_identifier(r.scenario_id, "scenario_id");
        os << r.subject_id << ',' << r.scenario_id << ',' << (r.arm_explanation ? 1 : 0) << ','
           << to_string(r.arm_format) << ',' << static_cast<char>('A' + r.truth) << ','
           << static_cast<char>('A' + r.advice.recommended) << ',';
        if (r.advice.explanation) os << format_double(r.advice.explanation->quality);
        for (double p : r.prior) os << ',' << format_double(p);
        os << ',' << format_double(r.expected_ssq);
        for (double p : r.posterior) os << ',' << format_double(p);
        os << '\n';
    }
}

// `model` supplies the accuracy used to rebuild each advice's announced
// distribution, which the CSV does not carry.
inline std::vector<TrialRecord> read_trials_csv(std::istream& is, const SignalModel& model = {}) {
    const auto& cols = trial_csv_columns();
    std::string line;
    if (!std::getline(is, line)) throw SchemaError("missing header row", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM

    const auto header = detail::split_commas(line);
    std::vector<std::size_t> pos(cols.size(), SIZE_MAX);
    for (std::size_t h = 0; h < header.size(); ++h) {
        const std::string name(header[h]);
        auto it = std::find(cols.begin(), cols.end(), name);
        if (it == cols.end()) throw SchemaError("unknown column '" + name + "'", 1);
        const auto c = static_cast<std::size_t>(it - cols.begin());
        if (pos[c] != SIZE_MAX) throw SchemaError("duplicate column '" + name + "'", 1);
        pos[c] = h;
    }
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (pos[c] == SIZE_MAX) throw SchemaError("missing column '" + cols[c] + "'", 1);

    std::vector<TrialRecord> out;
    std::size_t row = 1;
    std::vector<std::string_view> fields(cols.size());
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto raw = detail::split_commas(line);
        if (raw.size() != header.size())
            throw SchemaError("expected " + std::to_string(header.size()) + " fields, found " +
                                  std::to_string(raw.size()),
                              row);
        for (std::size_t c = 0; c < cols.size(); ++c) fields[c] = raw[pos[c]];

        TrialRecord r;
        r.subject_id = std::string(fields[0]);
        r.scenario_id = std::string(fields[1]);
        if (r.subject_id.empty()) throw SchemaError("column 'subject_id': empty", row);
        if (r.scenario_id.empty()) throw SchemaError("column 'scenario_id': empty", row);
        if (fields[2] == "1")
            r.arm_explanation = true;
        else if (fields[2] == "0")
            r.arm_explanation = false;
        else
            throw SchemaError("column 'arm_explanation': expected 0 or 1", row);
        if (fields[3] == "det")
            r.arm_format = Format::deterministic;
        else if (fields[3] == "prob")
            r.arm_format = Format::probabilistic;
        else
            throw SchemaError("column 'arm_format': expected det or prob", row);
        r.truth = detail::parse_option(fields[4], cols[4], row);
        const Option rec = detail::parse_option(fields[5], cols[5], row);

        std::optional<Explanation> expl;
        if (!fields[6].empty()) {
            const double q = detail::parse_double(fields[6], cols[6], row);
            if (q < 0.0 || q > 1.0) throw SchemaError("column 'q': quality outside [0,1]", row);
            expl = Explanation(q);
        }
        if (r.arm_explanation && !expl) throw SchemaError("column 'q': required in explanation arms", row);
        if (!r.arm_explanation && expl) throw SchemaError("column 'q': must be empty without explanation", row);

        r.prior = detail::parse_simplex(fields, 7, "prior", row);
        r.expected_ssq = detail::parse_double(fields[7 + kCsvOptions], cols[7 + kCsvOptions], row);
        r.posterior = detail::parse_simplex(fields, 8 + kCsvOptions, "posterior", row);
        const SignalModel m(model.mu, DiagnosisSpace(kCsvOptions));
        r.advice = AdviceEvent::canonical(m, rec, r.arm_format, expl);
        try {
            r.validate();
        } catch (const DomainError& e) {
            throw SchemaError(e.what(), row);
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<TrialRecord> ingest_csv(const std::string& path, const SignalModel& model = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
    return read_trials_csv(in, model);
}

inline void export_csv(const std::string& path, std::span<const TrialRecord> dataset) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_trials_csv(out, dataset);
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace paradoxsim
