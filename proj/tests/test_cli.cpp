#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "paradoxsim/paradoxsim.hpp"

namespace fs = std::filesystem;
using namespace paradoxsim;
using Catch::Approx;

namespace {

struct Run {
    int status = -1;
    std::string output;
};

// Runs the tool with the given arguments; stdout and stderr are merged.
Run cli(const std::string& args, const std::string& env = {}) {
    const std::string cmd = env + " \"" + PARADOXSIM_CLI + "\" " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) r.output += buf;
    const int raw = pclose(p);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("paradoxsim_cli_" + std::to_string(std::rand()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content = {}) const {
        const auto p = path / name;
        if (!content.empty()) std::ofstream(p) << content;
        return p.string();
    }
};

const std::string kSmall = R"({"seed": 3, "simulation": {"n_trials": 300, "lambda": 0.8}})";

}  // namespace

TEST_CASE("simulate writes a dataset and a metadata sidecar") {
    TempDir t;
    const auto cfg = t.file("c.json", kSmall);
    const auto out = t.file("d.csv");
    const auto r = cli("simulate --config " + cfg + " --out " + out);
    REQUIRE(r.status == 0);
    CHECK(ingest_csv(out).size() == 1200);
    const auto meta = json::parse(slurp(out + ".meta.json"));
    CHECK(meta["seed"] == 3);
    CHECK(meta["tool_version"] == tool_version());
    CHECK(meta["config_hash"].get<std::string>().size() == 16);
    CHECK(meta["config"]["simulation"]["n_trials"] == 300);
}

TEST_CASE("simulate is deterministic and honors the seed flag") {
    TempDir t;
    const auto cfg = t.file("c.json", kSmall);
    REQUIRE(cli("simulate --config " + cfg + " --out " + t.file("a.csv")).status == 0);
    REQUIRE(cli("simulate --config " + cfg + " --out " + t.file("b.csv"), "PARADOXSIM_THREADS=4").status == 0);
    REQUIRE(cli("simulate --config " + cfg + " --seed 4 --out " + t.file("c.csv")).status == 0);
    CHECK(slurp(t.path / "a.csv") == slurp(t.path / "b.csv"));
    CHECK(slurp(t.path / "a.csv") != slurp(t.path / "c.csv"));
}

TEST_CASE("simulate edge cases") {
    TempDir t;
    SECTION("no arms gives a header-only file") {
        const auto cfg = t.file("c.json", R"({"simulation": {"arms": []}})");
        const auto out = t.file("d.csv");
        REQUIRE(cli("simulate --config " + cfg + " --out " + out).status == 0);
        const auto text = slurp(out);
        CHECK(text.rfind("subject_id,", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    }
    SECTION("unknown config key") {
        const auto cfg = t.file("c.json", R"({"simulation": {"trials": 5}})");
        const auto r = cli("simulate --config " + cfg + " --out " + t.file("d.csv"));
        CHECK(r.status != 0);
        CHECK(r.output.find("simulation.trials") != std::string::npos);
    }
    SECTION("invalid thread cap") {
        const auto r = cli("simulate --out " + t.file("d.csv"), "PARADOXSIM_THREADS=lots");
        CHECK(r.status != 0);
        CHECK(r.output.find("PARADOXSIM_THREADS") != std::string::npos);
    }
    SECTION("missing output path") {
        CHECK(cli("simulate").status != 0);
    }
}

TEST_CASE("measure produces metrics and a report") {
    TempDir t;
    const auto cfg = t.file("c.json", kSmall);
    const auto data = t.file("d.csv");
    REQUIRE(cli("simulate --config " + cfg + " --out " + data).status == 0);
    const auto out = t.file("m.csv");
    const auto r = cli("measure --config " + cfg + " --in " + data + " --out " + out);
    REQUIRE(r.status == 0);
    const auto metrics = slurp(out);
    CHECK(metrics.rfind("subject_id,scenario_id,arm_explanation", 0) == 0);
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1201);
    const auto rep = read_report(out + ".report.json");
    REQUIRE(rep.paradox);
    CHECK(rep.overreliance.has_value());
    CHECK(rep.typology.has_value());
    CHECK(rep.seed == 3);

    REQUIRE(cli("measure --config " + cfg + " --in " + data + " --out " + out + " --format csv").status == 0);
    CHECK(slurp(out + ".report.csv").rfind("table,key,value", 0) == 0);
}

TEST_CASE("measure on the published cell means") {
    TempDir t;
    // Deterministic posteriors whose mass on the truth hits each cell mean.
    std::ostringstream csv;
    csv << "subject_id,scenario_id,arm_explanation,arm_format,truth,ai_rec,q,prior_pA,prior_pB,prior_pC,"
           "prior_pD,prior_pE,expected_ssq,post_pA,post_pB,post_pC,post_pD,post_pE\n";
    const double means[4] = {0.874, 0.937, 0.143, 0.094};
    for (int c = 0; c < 4; ++c) {
        const bool correct = c < 2;
        const bool expl = c % 2 == 1;
        const double a = means[c];
        const double rest = (1.0 - a) / 4.0;
        for (int k = 0; k < 2; ++k) {
            csv << "S" << c << k << ",Q01," << (expl ? 1 : 0) << ",det,A," << (correct ? "A" : "B") << ","
                << (expl ? "0.7" : "") << ",0.2,0.2,0.2,0.2,0.2,0.3," << a << "," << rest << "," << rest << ","
                << rest << "," << rest << "\n";
        }
    }
    const auto in = t.file("published.csv", csv.str());
    const auto cfg = t.file("c.json", R"({"analysis": {"weights": "published"}})");
    const auto out = t.file("m.csv");
    REQUIRE(cli("measure --config " + cfg + " --in " + in + " --out " + out).status == 0);
    const auto rep = read_report(out + ".report.json");
    CHECK(rep.paradox->delta_plus == Approx(6.3).margin(1e-9));
    CHECK(rep.paradox->delta_minus == Approx(-4.9).margin(1e-9));
    CHECK(rep.paradox->net_benefit == Approx(3.3).margin(0.05));
}

TEST_CASE("measure rejects malformed input") {
    TempDir t;
    const auto in = t.file("bad.csv",
                           "subject_id,scenario_id,arm_explanation,arm_format,truth,ai_rec,q,prior_pA,prior_pB,"
                           "prior_pC,prior_pD,prior_pE,post_pA,post_pB,post_pC,post_pD,post_pE\n");
    const auto r = cli("measure --in " + in + " --out " + t.file("m.csv"));
    CHECK(r.status != 0);
    CHECK(r.output.find("expected_ssq") != std::string::npos);

    const auto missing = cli("measure --in " + t.file("nothing.csv") + " --out " + t.file("m.csv"));
    CHECK(missing.status != 0);
}

TEST_CASE("welfare with published effects") {
    TempDir t;
    const auto out = t.file("w.json");
    REQUIRE(cli("welfare --mode paper --out " + out).status == 0);
    const auto rep = read_report(out);
    REQUIRE(rep.welfare.size() == 5);
    CHECK(rep.welfare[0].policy == "first_best");
    CHECK(rep.welfare[3].W == Approx(3.276));
    CHECK(rep.welfare[3].efficiency == Approx(0.52));

    const auto cfg = t.file("c.json", R"({"welfare": {"policies": []}})");
    const auto r = cli("welfare --config " + cfg + " --out " + t.file("x.json"));
    CHECK(r.status != 0);
    CHECK(r.output.find("policy") != std::string::npos);
}

TEST_CASE("welfare in sim mode on a calibrated dataset") {
    TempDir t;
    const auto cfg = t.file("c.json", R"({"seed": 8, "simulation": {"n_trials": 30000, "lambda": 0.78}})");
    const auto data = t.file("d.csv");
    REQUIRE(cli("simulate --config " + cfg + " --out " + data).status == 0);
    const auto out = t.file("w.json");
    REQUIRE(cli("welfare --config " + cfg + " --mode sim --in " + data + " --out " + out).status == 0);
    const auto rep = read_report(out);
    const auto it = std::find_if(rep.welfare.begin(), rep.welfare.end(),
                                 [](const WelfareReport& w) { return w.kind == PolicyKind::universal; });
    REQUIRE(it != rep.welfare.end());
    CHECK(it->W == Approx(3.3).margin(1.0));

    CHECK(cli("welfare --mode sim --out " + t.file("y.json")).status != 0);
}

TEST_CASE("calibrate command") {
    TempDir t;
    const auto cfg = t.file("c.json", R"({"simulation": {"n_trials": 20000}})");
    const auto out = t.file("cal.json");

    REQUIRE(cli("calibrate --config " + cfg + " --target-benefit 0 --out " + out).status == 0);
    CHECK(read_report(out).calibration->lambda == Approx(0.0));

    REQUIRE(cli("calibrate --config " + cfg + " --out " + out).status == 0);
    const auto c = *read_report(out).calibration;
    CHECK(c.achieved_benefit_pp == Approx(6.3).margin(1.0));
    CHECK(c.achieved_harm_pp == Approx(-4.9).margin(1.0));

    const auto neg = cli("calibrate --config " + cfg + " --tol -1 --out " + out);
    CHECK(neg.status == 2);
    CHECK(neg.output.find("tolerance") != std::string::npos);

    const auto fail = cli("calibrate --config " + cfg + " --target-benefit 99 --out " + out);
    CHECK(fail.status == 4);
    CHECK(read_report(out).calibration.has_value());
}

TEST_CASE("report command combines tables and welfare") {
    TempDir t;
    const auto cfg = t.file("c.json", kSmall);
    const auto data = t.file("d.csv");
    REQUIRE(cli("simulate --config " + cfg + " --out " + data).status == 0);
    const auto out = t.file("r.json");
    REQUIRE(cli("report --config " + cfg + " --in " + data + " --out " + out).status == 0);
    const auto rep = read_report(out);
    CHECK(rep.paradox.has_value());
    CHECK(rep.welfare.size() == 5);
}
