#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "vpatch/dynamics.hpp"
#include "vpatch/patch_geometry.hpp"

using namespace vpatch;
namespace fs = std::filesystem;

namespace {

Patch square(double side, bool pinCorners) {
    Patch p;
    p.contours.emplace_back(std::vector<CoverPoint>{{0.5, -side / 2}, {0.5 + side, -side / 2}, {0.5 + side, side / 2},
                                                    {0.5, side / 2}},
                            1);
    if (pinCorners) p.pinned = {0, 1, 2, 3};
    return p;
}

Patch polygonCircle(double radius, std::size_t n) {
    std::vector<CoverPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
        pts[i] = {1.0 + radius * std::cos(th), radius * std::sin(th)};
    }
    Patch p;
    p.contours.emplace_back(std::move(pts), 1);
    return p;
}

double longestSegment(const Patch& p) {
    double m = 0.0;
    for (const Contour& c : p.contours) {
        for (std::size_t i = 0; i < c.size(); ++i) m = std::max(m, distance(c[i], c[c.next(i)]));
    }
    return m;
}

fs::path tmpDir(const char* name) {
    const fs::path d = fs::path(VPATCH_TEST_TMP) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("one RK4 step moves strip markers with the shear") {
    FlowState s{makeStrip(512), 0, 0.1};
    const Patch before = s.patch;
    rk4Step(s, {}, 100.0);
    CHECK(s.stepCount == 1);
    CHECK(s.t() == doctest::Approx(0.1));
    const Contour &a = before.contours[0], &b = s.patch.contours[0];
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); i += 7) {
        CHECK(std::abs(b[i].x1 - a[i].x1) < 1e-4);
        CHECK(std::abs(b[i].x2 - a[i].x2 - 0.1 * (1.0 - a[i].x1)) < 1e-4);
    }
}

TEST_CASE("rk4Step aborts on excessive speed") {
    FlowState s{makeStrip(128), 0, 0.1};
    try {
        rk4Step(s, {}, 0.5);
        FAIL("expected an abort");
    } catch (const NumericalAbort& e) {
        CHECK(e.reason() == "blowup");
    }
}

TEST_CASE("remesh parameter validation") {
    Patch p = square(1.0, false);
    CHECK_THROWS_AS(remesh(p, {.dmax = 0.0}), ParameterRangeError);
    CHECK_THROWS_AS(remesh(p, {.dmax = 0.1, .dmin = 0.06}), ParameterRangeError);
    CHECK_THROWS_AS(remesh(p, {.dmax = 0.1, .dmin = 0.02, .maxTurn = 0.0}), ParameterRangeError);
    CHECK_NOTHROW(remesh(p, {.dmax = 0.1, .dmin = 0.05}));
}

TEST_CASE("remesh splits long segments and keeps pinned corners") {
    Patch p = square(1.0, true);
    const RemeshStats st = remesh(p, {.dmax = 0.1, .dmin = 0.025});
    CHECK(st.inserted > 0);
    CHECK(longestSegment(p) <= 0.1);
    // Corners are pinned, so the edges split linearly and the area is exact.
    CHECK(patchArea(p) == doctest::Approx(1.0).epsilon(1e-12));
    for (MarkerId id : {0, 1, 2, 3}) CHECK(p.find(id));
    const Contour& c = p.contours[0];
    std::set<MarkerId> ids(c.ids.begin(), c.ids.end());
    CHECK(ids.size() == c.size());
    CHECK(c.nextId > *ids.rbegin());
}

TEST_CASE("remesh refines a coarse circle toward the curve") {
    Patch p = polygonCircle(0.5, 24);
    const double a0 = patchArea(p);
    remesh(p, {.dmax = 0.05, .dmin = 0.0125, .areaTolerance = 0.1});
    CHECK(longestSegment(p) <= 0.05);
    // Interpolated midpoints bulge outward, toward the circle area pi/4.
    CHECK(patchArea(p) > a0);
    CHECK(patchArea(p) < kPi * 0.25);
}

TEST_CASE("remesh thins over-resolved runs") {
    Patch p = polygonCircle(0.5, 2000);
    const std::size_t n0 = p.markerCount();
    const RemeshStats st = remesh(p, {.dmax = 0.1, .dmin = 0.025});
    CHECK(st.deleted > 0);
    CHECK(p.markerCount() < n0);
    CHECK(patchArea(p) == doctest::Approx(kPi * 0.25).epsilon(1e-3));
}

TEST_CASE("remesh cuts a small fold") {
    // Swapping two neighbours of a fine circle leaves a small bow tie.
    Patch p = polygonCircle(0.5, 64);
    Contour& c = p.contours[0];
    std::swap(c.markers[10], c.markers[11]);
    REQUIRE(hasSelfIntersection(p));
    // A huge maxTurn keeps the fold from being refined before it is cut.
    const RemeshStats st = remesh(p, {.dmax = 0.2, .dmin = 0.0, .areaTolerance = 0.1, .maxTurn = 100.0});
    CHECK(st.loopsCut >= 1);
    CHECK_FALSE(hasSelfIntersection(p));
}

TEST_CASE("configHash is stable and sensitive") {
    const nlohmann::json a = {{"dt", 0.05}, {"T", 20}};
    const std::string h = configHash(a);
    CHECK(h.size() == 16);
    CHECK(h == configHash(nlohmann::json::parse(a.dump())));
    CHECK(h != configHash({{"dt", 0.05}, {"T", 21}}));
}

TEST_CASE("run calls the hook on schedule and writes checkpoints") {
    const fs::path dir = tmpDir("run");
    RunConfig cfg;
    cfg.dt = 0.05;
    cfg.tEnd = 0.5;
    cfg.diagEvery = 4;
    cfg.checkpointEvery = 5;
    cfg.remesh.dmax = 0.1;
    cfg.remesh.dmin = 0.025;
    cfg.outDir = dir;
    cfg.experiment = "steady";
    cfg.meta = {{"note", "unit"}};
    std::vector<std::int64_t> seen;
    const RunOutcome out = run(FlowState{makeStrip(256), 0, 0.05}, cfg, [&](const FlowState& s) {
        seen.push_back(s.stepCount);
        CHECK(s.t() == static_cast<double>(s.stepCount) * 0.05);
    });
    CHECK_FALSE(out.aborted);
    CHECK(out.state.stepCount == 10);
    CHECK(seen == std::vector<std::int64_t>{0, 4, 8, 10});
    CHECK(fs::exists(dir / "checkpoint_000005.json"));
    CHECK(fs::exists(dir / "checkpoint_000010.csv"));
    CHECK_FALSE(fs::exists(dir / "failure.json"));

    const Checkpoint cp = readCheckpoint(dir / "checkpoint_000005.csv");
    CHECK(cp.state.stepCount == 5);
    CHECK(cp.state.dt == 0.05);
    CHECK(cp.sidecar["experiment"] == "steady");
    CHECK(cp.sidecar["config"] == cfg.meta);

    // A tampered config no longer matches its hash.
    nlohmann::json side;
    std::ifstream(dir / "checkpoint_000005.json") >> side;
    side["config"]["note"] = "edited";
    std::ofstream(dir / "checkpoint_000005.json") << side.dump();
    CHECK_THROWS_AS(readCheckpoint(dir / "checkpoint_000005.json"), Error);
}

TEST_CASE("aborted run writes a failure manifest") {
    const fs::path dir = tmpDir("abort");
    RunConfig cfg;
    cfg.dt = 0.05;
    cfg.tEnd = 1.0;
    cfg.maxSpeed = 0.5;
    cfg.remesh.dmax = 0.1;
    cfg.remesh.dmin = 0.025;
    cfg.outDir = dir;
    const RunOutcome out = run(FlowState{makeStrip(128), 0, 0.05}, cfg, {});
    CHECK(out.aborted);
    CHECK(out.reason == "blowup");
    REQUIRE(fs::exists(dir / "failure.json"));
    nlohmann::json m;
    std::ifstream(dir / "failure.json") >> m;
    CHECK(m["reason"] == "blowup");
    CHECK(m["stepCount"] == 0);
    CHECK(fs::exists(dir / "failure_state.csv"));
    CHECK_THROWS_AS(run(FlowState{}, RunConfig{.dt = 0.0}, {}), ParameterRangeError);
}
