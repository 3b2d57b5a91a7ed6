#include "vpatch/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpatch/experiments.hpp"

namespace vpatch {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutDirEnv = "VPATCH_OUTDIR";

void addRunOptions(CLI::App* sub, ExperimentConfig& c) {
    sub->add_option("--dt", c.dt, "time step")->capture_default_str();
    sub->add_option("--T", c.T, "final time")->capture_default_str();
    sub->add_option("--nodes", c.nodes0, "initial marker count")->capture_default_str();
    sub->add_option("--dmax", c.dmax, "split segments longer than this (0: automatic)")->capture_default_str();
    sub->add_option("--dmin", c.dmin, "thin segments shorter than this (0: dmax/4)")->capture_default_str();
    sub->add_option("--raster-res", c.rasterRes, "rows for symmetric-difference diagnostics")->capture_default_str();
    sub->add_option("--output-every", c.outputEvery, "steps between diagnostics")->capture_default_str();
    sub->add_option("--checkpoint-every", c.checkpointEvery, "steps between checkpoints (0: final only)")
        ->capture_default_str();
    sub->add_option("--max-turn", c.maxTurn, "turning angle that triggers refinement")->capture_default_str();
    sub->add_option("--split-floor", c.splitFloor, "dmax / shortest refined segment")->capture_default_str();
    sub->add_option("--loop-window", c.loopWindow, "node span of removable folds (0: off)")->capture_default_str();
    sub->add_option("--singular-factor", c.singularFactor, "near-segment radius in segment lengths")
        ->capture_default_str();
}

fs::path outDirFor(const CLI::App* sub, const std::string& given) {
    if (sub->count("--out") > 0) return given;
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
    return fs::path("vpatch_out") / sub->get_name();
}

void printReport(const Report& r, const fs::path& where) {
    for (const Check& c : r.checks) {
        std::printf("  %-34s %-14.6g %s %-10.4g %s\n", c.name.c_str(), c.value, c.relation.c_str(), c.limit,
                    c.pass ? "ok" : "FAILED");
    }
    if (r.aborted) std::printf("  run aborted: %s\n", r.abortReason.c_str());
    std::printf("%s: %s (%s)\n", r.experiment.c_str(), r.passed() ? "PASS" : "FAIL", where.string().c_str());
}

int finish(const Report& r, const fs::path& dir) {
    fs::create_directories(dir);
    writeReport(r, dir / "report.json");
    printReport(r, dir / "report.json");
    return r.passed() ? 0 : 1;
}

void echoSimple(const fs::path& dir, const std::string& name, const std::vector<std::pair<std::string, std::string>>& kv) {
    fs::create_directories(dir);
    std::ofstream out(dir / "config.echo");
    out << "# resolved configuration\n[" << name << "]\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

Report runAndEvaluate(const std::string& experiment, const ExperimentConfig& cfg) {
    std::printf("%s: running to T = %g in %s\n", experiment.c_str(), cfg.T, cfg.outDir.string().c_str());
    std::fflush(stdout);
    const RunArtifacts a = runExperiment(experiment, cfg);
    if (a.outcome.aborted) {
        std::printf("numerical abort at t = %g: %s (%s)\n", a.outcome.state.t(), a.outcome.reason.c_str(),
                    a.outcome.message.c_str());
    }
    Report r = evaluateRun(experiment, cfg.outDir, a.config);
    r.metrics["runtime_seconds"] = a.seconds;
    return r;
}

std::string formatH(double h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "h_%g", h);
    return buf;
}

}  // namespace

int runCli(int argc, char** argv) {
    CLI::App app{"Vortex patch experiments on the half cylinder"};
    app.name("vpatch");
    // -h would clash with the slit half-width option --h.
    app.set_help_flag("--help", "print this help and exit");
    app.set_config("--config", "", "sectioned key = value file; [subcommand] sections set its options");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    ExperimentConfig steady;
    steady.T = 5.0;
    ExperimentConfig stab;
    ExperimentConfig growth;
    std::vector<double> hs{0.05};
    std::string outSteady, outStab, outGrowth, outRearr, outKernel, outResume;
    std::uint64_t rearrSeed = 7, kernelSeed = 11;
    std::size_t cases = 100;
    std::string checkpoint;
    std::optional<double> resumeT;

    auto* s1 = app.add_subcommand("steady-check", "strip run: edge drift and velocity profile");
    addRunOptions(s1, steady);
    s1->add_option("--samples", steady.samples, "velocity profile points")->capture_default_str();
    s1->add_option("--out", outSteady, "output directory");

    auto* s2 = app.add_subcommand("stability", "J1 stability of the rounded rectangle (one run per --h)");
    addRunOptions(s2, stab);
    s2->add_option("--h", hs, "slit half-width; repeat for a sweep")->capture_default_str();
    s2->add_option("--r", stab.r, "fillet radius (0: h/2.5)")->capture_default_str();
    s2->add_option("--out", outStab, "output directory");

    auto* s3 = app.add_subcommand("perimeter-growth", "perimeter, wall point and center of mass growth");
    addRunOptions(s3, growth);
    s3->add_option("--h", growth.h, "slit half-width")->capture_default_str();
    s3->add_option("--r", growth.r, "fillet radius (0: h/2.5)")->capture_default_str();
    s3->add_option("--out", outGrowth, "output directory");

    auto* s4 = app.add_subcommand("rearrange-test", "rearrangement inequalities on random fields");
    s4->add_option("--seed", rearrSeed, "random seed")->capture_default_str();
    s4->add_option("--cases", cases, "random cases per property")->capture_default_str();
    s4->add_option("--out", outRearr, "output directory");

    auto* s5 = app.add_subcommand("kernel-table", "kernel identities, table and contour-versus-grid oracle");
    s5->add_option("--seed", kernelSeed, "random seed")->capture_default_str();
    s5->add_option("--out", outKernel, "output directory");

    auto* s6 = app.add_subcommand("resume", "continue a run from a checkpoint");
    s6->add_option("--checkpoint", checkpoint, "checkpoint .json or .csv")->required()->check(CLI::ExistingFile);
    s6->add_option("--T", resumeT, "new final time");
    s6->add_option("--out", outResume, "output directory (default: the checkpoint's directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (s1->parsed()) {
            steady.outDir = outDirFor(s1, outSteady);
            return finish(runAndEvaluate("steady", steady), steady.outDir);
        }
        if (s2->parsed()) {
            const fs::path base = outDirFor(s2, outStab);
            std::vector<Report> reports;
            for (double h : hs) {
                ExperimentConfig c = stab;
                c.h = h;
                c.outDir = hs.size() == 1 ? base : base / formatH(h);
                reports.push_back(runAndEvaluate("stability", c));
                if (hs.size() > 1) finish(reports.back(), c.outDir);
            }
            if (hs.size() == 1) return finish(reports.front(), base);
            return finish(compareStability(reports), base);
        }
        if (s3->parsed()) {
            growth.outDir = outDirFor(s3, outGrowth);
            return finish(runAndEvaluate("perimeter-growth", growth), growth.outDir);
        }
        if (s4->parsed()) {
            const fs::path dir = outDirFor(s4, outRearr);
            echoSimple(dir, "rearrange-test", {{"seed", std::to_string(rearrSeed)}, {"cases", std::to_string(cases)}});
            return finish(rearrangementSuite(rearrSeed, cases), dir);
        }
        if (s5->parsed()) {
            const fs::path dir = outDirFor(s5, outKernel);
            echoSimple(dir, "kernel-table", {{"seed", std::to_string(kernelSeed)}});
            return finish(kernelSuite(kernelSeed, dir), dir);
        }
        if (s6->parsed()) {
            const fs::path dir = s6->count("--out") > 0 ? fs::path(outResume) : fs::path(checkpoint).parent_path();
            const RunArtifacts a = resumeExperiment(checkpoint, dir, resumeT);
            if (a.outcome.aborted) {
                std::printf("numerical abort at t = %g: %s (%s)\n", a.outcome.state.t(), a.outcome.reason.c_str(),
                            a.outcome.message.c_str());
            }
            const std::string experiment = readCheckpoint(checkpoint).sidecar.at("experiment");
            Report r = evaluateRun(experiment, a.config.outDir, a.config);
            r.metrics["runtime_seconds"] = a.seconds;
            return finish(r, a.config.outDir);
        }
    } catch (const ParameterRangeError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace vpatch
