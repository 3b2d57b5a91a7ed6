#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpatch/cli.hpp"

using namespace vpatch;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "vpatch");
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    return runCli(static_cast<int>(argv.size()), argv.data());
}

fs::path tmpDir(const char* name) {
    const fs::path d = fs::path(VPATCH_TEST_TMP) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

nlohmann::json readJson(const fs::path& p) {
    nlohmann::json j;
    std::ifstream(p) >> j;
    return j;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(cli({"--help"}) == 0);
    CHECK(cli({}) == 2);
    CHECK(cli({"no-such-command"}) == 2);
    CHECK(cli({"rearrange-test", "--bogus", "1"}) == 2);
    CHECK(cli({"resume", "--checkpoint", "/nonexistent/checkpoint.json"}) == 2);
}

TEST_CASE("out of range parameters exit with 2") {
    const fs::path d = tmpDir("range");
    CHECK(cli({"steady-check", "--dt", "-1", "--out", d.string()}) == 2);
    CHECK(cli({"stability", "--h", "0.5", "--out", d.string()}) == 2);
}

TEST_CASE("rearrange-test writes a passing report") {
    const fs::path d = tmpDir("rearrange");
    CHECK(cli({"rearrange-test", "--cases", "5", "--seed", "3", "--out", d.string()}) == 0);
    const auto j = readJson(d / "report.json");
    CHECK(j["passed"] == true);
    CHECK(j["config"]["seed"] == 3);
    CHECK(fs::exists(d / "config.echo"));
}

TEST_CASE("config file sections set subcommand options") {
    const fs::path d = tmpDir("config");
    {
        std::ofstream ini(d / "run.ini");
        ini << "[rearrange-test]\nseed = 9\ncases = 4\nout = " << (d / "out").string() << "\n";
    }
    CHECK(cli({"--config", (d / "run.ini").string(), "rearrange-test"}) == 0);
    const auto j = readJson(d / "out" / "report.json");
    CHECK(j["config"]["seed"] == 9);
    CHECK(j["config"]["cases"] == 4);
    {
        std::ofstream ini(d / "bad.ini");
        ini << "[rearrange-test]\nsead = 9\n";
    }
    CHECK(cli({"--config", (d / "bad.ini").string(), "rearrange-test"}) == 2);
}

TEST_CASE("output directory falls back to the environment") {
    const fs::path d = tmpDir("env");
    ::setenv("VPATCH_OUTDIR", d.string().c_str(), 1);
    const int rc = cli({"rearrange-test", "--cases", "2"});
    ::unsetenv("VPATCH_OUTDIR");
    CHECK(rc == 0);
    CHECK(fs::exists(d / "report.json"));
}

TEST_CASE("steady-check and resume round trip") {
    const fs::path d = tmpDir("steady");
    CHECK(cli({"steady-check", "--T", "0.5", "--nodes", "256", "--raster-res", "1024", "--output-every", "5",
               "--checkpoint-every", "5", "--out", d.string()}) == 0);
    CHECK(readJson(d / "report.json")["passed"] == true);
    CHECK(cli({"resume", "--checkpoint", (d / "final.json").string(), "--T", "1.0"}) == 0);
    const auto j = readJson(d / "report.json");
    CHECK(j["passed"] == true);
    CHECK(j["metrics"]["t_final"].get<double>() == doctest::Approx(1.0));
}
