// paradoxsim: simulate, measure, calibrate and evaluate transparency policies.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 input/output or schema error, 4 calibration failure, 5 aggregation error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "paradoxsim/paradoxsim.hpp"

namespace ps = paradoxsim;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kCalibration = 4, kAggregation = 5 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string in;
    std::string mode;
    std::string format = "structured";
    std::optional<double> mu_true;
    std::optional<double> target_benefit;
    std::optional<double> target_harm;
    std::optional<double> tol;
};

std::size_t thread_cap() {
    const char* env = std::getenv("PARADOXSIM_THREADS");
    if (!env || !*env) return 0;
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(env, &pos);
        if (pos != std::string(env).size() || v < 0) throw std::invalid_argument(env);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ps::ConfigError(std::string("PARADOXSIM_THREADS must be a nonnegative integer, got '") + env + "'");
    }
}

ps::RunConfig load(const Options& o) {
    ps::RunConfig cfg = o.config.empty() ? ps::parse_run_config(ps::json::object()) : ps::load_run_config(o.config);
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.sim.seed = *o.seed;
    }
    if (!o.mode.empty()) {
        if (o.mode == "paper")
            cfg.welfare_mode = ps::WelfareMode::paper;
        else if (o.mode == "sim")
            cfg.welfare_mode = ps::WelfareMode::sim;
        else
            throw ps::ConfigError("--mode must be 'paper' or 'sim'");
    }
    if (o.mu_true) cfg.mu_true = *o.mu_true;
    if (o.target_benefit) cfg.target_benefit_pp = *o.target_benefit;
    if (o.target_harm) cfg.target_harm_pp = *o.target_harm;
    if (o.tol) cfg.tol_pp = *o.tol;
    if (!o.in.empty()) cfg.input_path = o.in;
    if (!o.out.empty()) cfg.output_path = o.out;
    // The echoed document reflects overrides so the hash pins every output.
    cfg.document = ps::effective_config(cfg);
    cfg.document["welfare_mode"] = cfg.welfare_mode == ps::WelfareMode::paper ? "paper" : "sim";
    if (!o.config.empty()) cfg.document["source"] = ps::load_run_config(o.config).document;
    return cfg;
}

std::string require_out(const ps::RunConfig& cfg) {
    if (cfg.output_path.empty()) throw ps::ConfigError("no output path (use --out or paths.output)");
    return cfg.output_path;
}

std::string require_in(const ps::RunConfig& cfg) {
    if (cfg.input_path.empty()) throw ps::ConfigError("no input dataset (use --in or paths.input)");
    return cfg.input_path;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_report(const ps::Report& rep, const std::string& path, const std::string& format) {
    const auto fmt = ps::parse_report_format(format);
    ps::export_report(rep, path, fmt);
    if (fmt == ps::ReportFormat::structured) (void)ps::read_report(path);
}

int cmd_simulate(const Options& o) {
    const auto cfg = load(o);
    const auto out = require_out(cfg);
    const auto data = ps::run_experiment(cfg.sim, thread_cap());
    ps::export_csv(out, data);

    const auto back = ps::ingest_csv(out, cfg.sim.model);
    if (back.size() != data.size()) throw std::runtime_error("written dataset failed validation");

    ps::json meta{{"schema", "paradoxsim.dataset"},
                  {"schema_version", ps::kReportSchemaVersion},
                  {"tool_version", ps::tool_version()},
                  {"seed", cfg.seed},
                  {"config_hash", ps::config_hash(cfg.document)},
                  {"records", data.size()},
                  {"config", cfg.document}};
    write_text(out + ".meta.json", meta.dump(2) + "\n");
    std::cerr << "wrote " << data.size() << " trials to " << out << "\n";
    return kOk;
}

int cmd_measure(const Options& o) {
    const auto cfg = load(o);
    const auto in = require_in(cfg);
    const auto out = require_out(cfg);
    ps::SignalModel model(cfg.mu_true, ps::DiagnosisSpace(5));
    const auto data = ps::ingest_csv(in, model);
    const auto measured = ps::measure_all(data, cfg.mu_true);

    std::ostringstream metrics;
    ps::write_metrics_csv(metrics, measured);
    write_text(out, metrics.str());

    const auto rep = ps::build_measure_report(measured, cfg);
    const std::string report_path = out + (o.format == "csv" ? ".report.csv" : ".report.json");
    write_report(rep, report_path, o.format);

    const auto& p = *rep.paradox;
    std::cout << "delta_plus_pp=" << p.delta_plus << " delta_minus_pp=" << p.delta_minus
              << " net_pp=" << p.net_benefit << "\n";
    return kOk;
}

int cmd_welfare(const Options& o) {
    const auto cfg = load(o);
    const auto out = require_out(cfg);
    std::vector<ps::MeasuredTrial> measured;
    if (cfg.welfare_mode == ps::WelfareMode::sim) {
        std::string path = cfg.input_path.empty() ? cfg.welfare_dataset : cfg.input_path;
        if (path.empty()) throw ps::ConfigError("sim-mode welfare needs a dataset (welfare.dataset or --in)");
        measured = ps::measure_all(ps::ingest_csv(path, ps::SignalModel(cfg.mu_true, ps::DiagnosisSpace(5))),
                                   cfg.mu_true);
    }
    const auto inputs = ps::welfare_inputs(cfg, measured);
    ps::Report rep;
    rep.seed = cfg.seed;
    rep.config = cfg.document;
    rep.config_hash = ps::config_hash(cfg.document);
    rep.welfare = ps::run_welfare(cfg, inputs);
    write_report(rep, out, o.format);
    for (const auto& r : rep.welfare)
        std::cout << r.policy << " W_pp=" << r.W << " value_usd_bn=" << r.dollar_value / 1e9
                  << " efficiency=" << r.efficiency << "\n";
    return kOk;
}

int cmd_calibrate(const Options& o) {
    auto cfg = load(o);
    const auto out = require_out(cfg);
    ps::CalibrationOptions opt;
    opt.lambda_max = cfg.lambda_max;
    opt.threads = thread_cap();
    ps::Report rep;
    rep.seed = cfg.seed;
    rep.config = cfg.document;
    rep.config_hash = ps::config_hash(cfg.document);
    try {
        rep.calibration = ps::calibrate_lambda(cfg.sim, cfg.target_benefit_pp, cfg.target_harm_pp, cfg.tol_pp, opt);
    } catch (const ps::CalibrationError& e) {
        rep.calibration = e.best();
        write_report(rep, out, o.format);
        std::cerr << "paradoxsim: calibration failed: " << e.what() << " (best lambda=" << e.best().lambda
                  << ", benefit=" << e.best().achieved_benefit_pp << "pp)\n";
        return kCalibration;
    }
    write_report(rep, out, o.format);
    const auto& c = *rep.calibration;
    std::cout << "lambda=" << c.lambda << " benefit_pp=" << c.achieved_benefit_pp
              << " harm_pp=" << c.achieved_harm_pp << "\n";
    return kOk;
}

int cmd_report(const Options& o) {
    const auto cfg = load(o);
    const auto in = require_in(cfg);
    const auto out = require_out(cfg);
    const auto measured =
        ps::measure_all(ps::ingest_csv(in, ps::SignalModel(cfg.mu_true, ps::DiagnosisSpace(5))), cfg.mu_true);
    auto rep = ps::build_measure_report(measured, cfg);
    rep.welfare = ps::run_welfare(cfg, ps::welfare_inputs(cfg, measured));
    write_report(rep, out, o.format);
    return kOk;
}

template <typename F>
int guarded(F&& f) {
    try {
        return f();
    } catch (const ps::ConfigError& e) {
        std::cerr << "paradoxsim: configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const ps::DomainError& e) {
        std::cerr << "paradoxsim: configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const ps::SchemaError& e) {
        std::cerr << "paradoxsim: input error: " << e.what() << "\n";
        return kIo;
    } catch (const ps::AggregationError& e) {
        std::cerr << "paradoxsim: aggregation error: " << e.what() << "\n";
        return kAggregation;
    } catch (const std::exception& e) {
        std::cerr << "paradoxsim: " << e.what() << "\n";
        return kIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explanation-augmented advice-taking simulator and welfare toolkit"};
    app.set_version_flag("--version", ps::tool_version());
    app.require_subcommand(1);

    Options o;
    auto common = [&o](CLI::App* sub) {
        sub->add_option("--config", o.config, "Run configuration (JSON)");
        sub->add_option("--seed", o.seed, "Override the configured seed");
        sub->add_option("--out", o.out, "Output path");
        sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"structured", "csv"}));
    };

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic trial dataset (CSV)");
    common(sim);

    auto* measure = app.add_subcommand("measure", "Per-trial metrics and aggregate tables for a dataset");
    common(measure);
    measure->add_option("--in", o.in, "Trial CSV");
    measure->add_option("--mu-true", o.mu_true, "True AI accuracy");

    auto* welfare = app.add_subcommand("welfare", "Evaluate and rank transparency policies");
    common(welfare);
    welfare->add_option("--mode", o.mode, "paper: published effects; sim: effects from a dataset")
        ->check(CLI::IsMember({"paper", "sim"}));
    welfare->add_option("--in", o.in, "Trial CSV for sim mode");

    auto* calibrate = app.add_subcommand("calibrate", "Fit lambda to a target explanation effect");
    common(calibrate);
    calibrate->add_option("--target-benefit", o.target_benefit, "Target effect when the AI is correct (pp)");
    calibrate->add_option("--target-harm", o.target_harm, "Reference effect when the AI is incorrect (pp)");
    calibrate->add_option("--tol", o.tol, "Tolerance on the benefit target (pp)");

    auto* report = app.add_subcommand("report", "Measure a dataset and evaluate policies into one report");
    common(report);
    report->add_option("--in", o.in, "Trial CSV");
    report->add_option("--mode", o.mode, "Welfare mode")->check(CLI::IsMember({"paper", "sim"}));
    report->add_option("--mu-true", o.mu_true, "True AI accuracy");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return guarded([&] { return cmd_simulate(o); });
    if (measure->parsed()) return guarded([&] { return cmd_measure(o); });
    if (welfare->parsed()) return guarded([&] { return cmd_welfare(o); });
    if (calibrate->parsed()) return guarded([&] { return cmd_calibrate(o); });
    if (report->parsed()) return guarded([&] { return cmd_report(o); });
    return kFailure;
}
