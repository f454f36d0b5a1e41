#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "smst/cli/cli.hpp"

namespace fs = std::filesystem;
using smst::cli::Json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args, const std::string& env_out = "") {
    args.insert(args.begin(), "smst");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = smst::cli::run(static_cast<int>(argv.size()), argv.data(), out, err, env_out);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("smst_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("numbers are written with 17 significant digits and round trip") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        const auto s = smst::cli::format_number(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
    CHECK(smst::cli::format_number(0.1) == "0.10000000000000001");
    CHECK(smst::cli::format_number(NAN) == "nan");
    CHECK(smst::cli::format_number(-INFINITY) == "-inf");
}

TEST_CASE("CSV layout") {
    smst::experiments::Table t("t", {"x [1]", "time [slow time]"});
    t.add({1.0, 0.5});
    t.add({2.0, 0.25});
    CHECK(smst::cli::table_csv(t) == "x [1],time [slow time]\n1,0.5\n2,0.25\n");
}

TEST_CASE("list prints both registries") {
    const auto ex = cli({"list", "experiments"});
    CHECK(ex.code == 0);
    for (const auto* n : {"linear_benchmark", "bracketing_test", "manifold_sweep", "section_scan", "return_map",
                          "fhn_homoclinic", "ri_canard"})
        CHECK(ex.out.find(n) != std::string::npos);
    CHECK(ex.out.find("figure:") != std::string::npos);
    const auto pr = cli({"list", "presets"});
    CHECK(pr.code == 0);
    for (const auto* n : {"terman_test", "terman_umfld", "fhn_fast_wave", "fhn_slow_wave", "ri_section52"})
        CHECK(pr.out.find(n) != std::string::npos);
    CHECK(!pr.out.empty());
    CHECK(cli({"list", "things"}).code == 2);
}

TEST_CASE("unknown preset and experiment exit 2 with candidates") {
    const auto r = cli({"linear-benchmark", "--preset", "nope"});
    CHECK(r.code == 2);
    const auto j = Json::parse(r.err);
    CHECK(j["error"]["kind"] == "unknown_preset");
    CHECK(j["error"]["candidates"].size() >= 5);
    const auto e = Json::parse(cli({"no-such-thing"}).err);
    CHECK(e["error"]["kind"] == "unknown_experiment");
    CHECK(e["error"]["candidates"].size() == 7);
}

TEST_CASE("override errors exit 2 with the path list") {
    const auto r = cli({"linear-benchmark", "--set", "linear.mesh_sizes=1.5"});
    CHECK(r.code == 2);
    CHECK(Json::parse(r.err)["error"]["candidates"].size() > 3);
    CHECK(cli({"linear-benchmark", "--set", "nonsense"}).code == 2);
    CHECK(cli({"linear-benchmark", "--format", "xml"}).code == 2);
}

TEST_CASE("a run writes one CSV per table and a summary") {
    const auto dir = scratch("lin");
    const auto r = cli({"linear-benchmark", "--preset", "default", "--out", dir.string()});
    REQUIRE(r.code == 0);
    for (const auto* f : {"errors.csv", "orders.csv", "ratios.csv", "rho.csv", "summary.json"})
        CHECK(fs::exists(dir / f));
    const auto summary = Json::parse(slurp(dir / "summary.json"));
    CHECK(summary["artifact_version"] == smst::cli::kArtifactVersion);
    CHECK(summary["experiment"] == "linear_benchmark");
    CHECK(summary["metrics"].contains("order_min"));
    CHECK(summary["tables"].size() == 4);
    CHECK(summary["provenance"].contains("recurrence_solve"));
    const auto header = slurp(dir / "errors.csv").substr(0, slurp(dir / "errors.csv").find('\n'));
    CHECK(header == "intervals [1],h [slow time],max_error [1],iterations [1],converged [bool],final_residual [1]");
}

TEST_CASE("format selection") {
    const auto dir = scratch("json_only");
    REQUIRE(cli({"linear-benchmark", "--format", "json", "--out", dir.string()}).code == 0);
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(!fs::exists(dir / "errors.csv"));
}

TEST_CASE("re-running an echoed configuration reproduces every CSV byte for byte") {
    const auto first = scratch("round1");
    const auto second = scratch("round2");
    REQUIRE(cli({"bracketing-test", "--set", "distances=1e-4,1e-6", "--out", first.string()}).code == 0);
    REQUIRE(cli({"bracketing-test", "--config", (first / "summary.json").string(), "--out", second.string()}).code == 0);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(first)) {
        if (entry.path().extension() != ".csv") continue;
        CHECK(slurp(entry.path()) == slurp(second / entry.path().filename()));
        ++compared;
    }
    CHECK(compared >= 3);
    const auto s = Json::parse(slurp(second / "summary.json"));
    CHECK(s["config"] == Json::parse(slurp(first / "summary.json"))["config"]);
}

TEST_CASE("--preset and --config are exclusive") {
    const auto dir = scratch("exclusive");
    REQUIRE(cli({"linear-benchmark", "--out", dir.string()}).code == 0);
    CHECK(cli({"linear-benchmark", "--preset", "default", "--config", (dir / "summary.json").string()}).code == 2);
}

TEST_CASE("SMST_OUT sets the default output root") {
    const auto root = scratch("env");
    REQUIRE(cli({"linear-benchmark"}, root.string()).code == 0);
    CHECK(fs::exists(root / "linear_benchmark" / "summary.json"));
}

TEST_CASE("experiment failures exit nonzero and leave an error file") {
    const auto dir = scratch("failure");
    const auto r = cli({"fhn-homoclinic", "--set", "fhn.s=0", "--out", dir.string()});
    CHECK(r.code == 2);
    const auto j = Json::parse(r.err);
    CHECK(j["error"]["kind"] == "precondition");
    CHECK(j["error"]["experiment"] == "fhn_homoclinic");
    CHECK(fs::exists(dir / "error.json"));
}
