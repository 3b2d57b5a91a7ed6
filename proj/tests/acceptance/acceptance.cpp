// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 when any
// criterion fails.  Usage: acceptance [output directory]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vpatch/biot_savart.hpp"
#include "vpatch/experiments.hpp"
#include "vpatch/patch_geometry.hpp"

using namespace vpatch;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int n, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d %-26s %s  %s\n", n, name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const Check& check(const Report& r, const std::string& name) {
    for (const Check& c : r.checks) {
        if (c.name == name) return c;
    }
    throw Error("report " + r.experiment + " has no check " + name);
}

bool allPass(const Report& r, const std::vector<std::string>& names) {
    bool ok = !r.aborted;
    for (const auto& n : names) ok = ok && check(r, n).pass;
    return ok;
}

struct RectRun {
    Report stability;
    Report growth;
    double seconds = 0.0;
};

RectRun rectangleRun(double h, const fs::path& dir) {
    ExperimentConfig c;
    c.h = h;
    c.outDir = dir;
    const RunArtifacts a = runExperiment("stability", c);
    RectRun out;
    out.seconds = a.seconds;
    out.stability = evaluateStability(dir, a.config);
    out.growth = evaluateGrowth(dir, a.config);
    writeReport(out.stability, dir / "report_stability.json");
    writeReport(out.growth, dir / "report_growth.json");
    return out;
}

void criterion1() {
    const auto t0 = Clock::now();
    const Patch strip = makeStrip(512);
    const auto pts = profileSamples(20);
    const auto u = ContourVelocityEvaluator(strip).evaluate(pts);
    double err = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        err = std::max(err, std::abs(u[i].u1));
        err = std::max(err, std::abs(u[i].u2 - std::max(1.0 - pts[i].x1, 0.0)));
    }
    const double secs = since(t0);
    verdict(1, "steady-strip-velocity", err <= 1e-3 && secs < 5.0,
            fmt("max error %.3g (<= 1e-3), %.3f s (< 5 s), 512 nodes, 20 points", err, secs));
}

void criterion2() {
    const Patch strip = makeStrip(512);
    const double em = std::abs(patchArea(strip) - kTwoPi);
    const double eh = std::abs(patchImpulse(strip) - kPi);
    const double ek = std::abs(verticalCenter(strip));
    verdict(2, "strip-mass-moments", em <= 1e-6 && eh <= 1e-6 && ek <= 1e-6,
            fmt("|mass-2pi| %.2g, |h-pi| %.2g, |k| %.2g (each <= 1e-6)", em, eh, ek));
}

void criterion3(const RectRun& run) {
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.5, 5.0, 10.0, 20.0}) {
        Patch p = makeStrip(512);
        for (Contour& c : p.contours) {
            for (CoverPoint& m : c.markers) m.x2 += std::max(1.0 - m.x1, 0.0) * t;
        }
        worst = std::max(worst, std::abs(verticalCenter(p) - 0.5 * t));
    }
    const bool slopeOk = allPass(run.growth, {"k_slope_low", "k_slope_high"});
    verdict(3, "center-rate", worst <= 1e-10 && slopeOk,
            fmt("sheared strip |k - t/2| %.2g (<= 1e-10); h = 0.05 k-slope %.4f in [0.4, 0.6]", worst,
                check(run.growth, "k_slope_low").value));
}

void criterion4(const RectRun& run) {
    const Report& g = run.growth;
    const bool ok = allPass(g, {"mass_drift", "impulse_drift", "wsymdiff_drift"}) && run.seconds <= 900.0;
    verdict(4, "conservation", ok,
            fmt("area drift %.3g (<= 0.005), impulse drift %.3g (<= 0.01), wSymDiff drift %.3g (<= 0.02), "
                "run %.0f s (<= 900 s)",
                check(g, "mass_drift").value, check(g, "impulse_drift").value, check(g, "wsymdiff_drift").value,
                run.seconds));
}

void criterion5(const RectRun& run) {
    const Report& g = run.growth;
    const bool ok = allPass(g, {"perimeter_increase_over_t", "wall_height_over_t", "wall_minus_k_over_t"});
    verdict(5, "perimeter-growth", ok,
            fmt("min over t in [5,20]: (P(t)-P(0))/t %.3f (>= 0.25), wall/t %.3f (>= 0.5), (wall-k)/t %.3f (>= 0.25)",
                check(g, "perimeter_increase_over_t").value, check(g, "wall_height_over_t").value,
                check(g, "wall_minus_k_over_t").value));
}

void criterion6(const std::map<double, RectRun>& runs) {
    // The bound and the trend test apply to the h = 0.05 run; the other widths
    // are reported alongside it.
    const Report& s = runs.at(0.05).stability;
    const bool ok = allPass(s, {"rho", "last_half_increase"});
    std::string detail = fmt("h = 0.05: rho %.3f (<= 20), last-half increase %.4f (<= 0.05)",
                             check(s, "rho").value, check(s, "last_half_increase").value);
    for (const auto& [h, run] : runs) {
        if (h == 0.05) continue;
        const Report& o = run.stability;
        detail += fmt("; h = %g: rho %.3f, last-half increase %.4f%s", h, check(o, "rho").value,
                      check(o, "last_half_increase").value, o.passed() ? "" : " (not flat)");
    }
    verdict(6, "j1-stability", ok, detail);
}

void criterion7(const fs::path& dir) {
    const auto t0 = Clock::now();
    const Report r = rearrangementSuite(7, 100);
    const double secs = since(t0);
    fs::create_directories(dir);
    writeReport(r, dir / "report.json");
    std::string failed;
    for (const Check& c : r.checks) {
        if (!c.pass) failed += " " + c.name;
    }
    verdict(7, "rearrangement", r.passed() && secs < 30.0,
            fmt("%zu checks on 100 random fields%s%s, %.2f s (< 30 s)", r.checks.size(),
                failed.empty() ? " all hold" : ", failed:", failed.c_str(), secs));
}

void criterion8(const fs::path& dir) {
    const auto t0 = Clock::now();
    fs::create_directories(dir);
    const Report r = kernelSuite(11, dir);
    const double secs = since(t0);
    writeReport(r, dir / "report.json");
    std::string failed;
    for (const Check& c : r.checks) {
        if (!c.pass) failed += " " + c.name;
    }
    verdict(8, "kernel-identities", r.passed() && secs < 60.0,
            fmt("%zu checks%s%s, %.2f s (< 60 s)", r.checks.size(), failed.empty() ? " all hold" : ", failed:",
                failed.c_str(), secs));
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    try {
        criterion1();
        criterion2();
        criterion7(out / "rearrange");
        criterion8(out / "kernel");
        std::map<double, RectRun> runs;
        for (double h : {0.05, 0.1, 0.2}) {
            std::printf("running the h = %g rectangle to T = 20\n", h);
            std::fflush(stdout);
            runs[h] = rectangleRun(h, out / fmt("rectangle_h_%g", h));
        }
        const RectRun& main = runs.at(0.05);
        criterion3(main);
        criterion4(main);
        criterion5(main);
        criterion6(runs);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
