#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "vpatch/patch_geometry.hpp"

using namespace vpatch;

namespace {

Patch single(std::vector<CoverPoint> pts, int s = 1) {
    Patch p;
    p.contours.emplace_back(std::move(pts), s);
    return p;
}

// Polygon through the corners with every edge cut into pieces of at most 0.05.
Patch subdivided(const std::vector<CoverPoint>& corners) {
    std::vector<CoverPoint> pts;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const CoverPoint a = corners[i], b = corners[(i + 1) % corners.size()];
        const auto n = static_cast<int>(std::ceil(distance(a, b) / 0.05));
        for (int k = 0; k < n; ++k) pts.push_back(a + (static_cast<double>(k) / n) * (b - a));
    }
    return single(std::move(pts));
}

Patch shearedStrip(double t, std::size_t nodes = 512) {
    Patch p = makeStrip(nodes);
    for (Contour& c : p.contours) {
        for (CoverPoint& m : c.markers) m.x2 += (1.0 - m.x1) * t;
    }
    return p;
}

}  // namespace

TEST_CASE("polygon functionals of a square and a triangle") {
    const Contour sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 1);
    CHECK(polygonArea(sq) == doctest::Approx(1.0));
    CHECK(polygonPerimeter(sq) == doctest::Approx(4.0));
    CHECK(polygonMomentX1(sq) == doctest::Approx(0.5));
    CHECK(polygonMomentX2(sq) == doctest::Approx(0.5));
    const Contour cw({{0, 1}, {1, 1}, {1, 0}, {0, 0}}, 1);
    CHECK(polygonArea(cw) == doctest::Approx(-1.0));
    // Triangle (0,0), (2,0), (0,3): area 3, centroid (2/3, 1).
    const Contour tri({{0, 0}, {2, 0}, {0, 3}}, 1);
    CHECK(polygonArea(tri) == doctest::Approx(3.0));
    CHECK(polygonMomentX1(tri) == doctest::Approx(2.0));
    CHECK(polygonMomentX2(tri) == doctest::Approx(3.0));
    // Moments do not depend on where the cover copy sits, apart from the shift.
    Contour up = tri;
    up.translate({0.0, 100.0});
    CHECK(polygonMomentX2(up) == doctest::Approx(3.0 + 300.0));
    CHECK_THROWS_AS(polygonArea(Contour({{0, 0}, {1, 1}}, 1)), DegeneratePolygonError);
}

TEST_CASE("strip mass and moments") {
    const Patch s = makeStrip(512);
    CHECK(s.markerCount() == 512);
    CHECK(s.pinned.size() == 4);
    CHECK(std::abs(patchArea(s) - kTwoPi) < 1e-6);
    CHECK(std::abs(patchImpulse(s) - kPi) < 1e-6);
    CHECK(std::abs(verticalCenter(s)) < 1e-6);
    CHECK_THROWS_AS(makeStrip(4), ParameterRangeError);
}

TEST_CASE("sheared strip moves its center of mass at half speed") {
    for (double t : {0.5, 1.0, 4.0, 20.0}) {
        const Patch p = shearedStrip(t);
        CHECK(std::abs(verticalCenter(p) - 0.5 * t) < 1e-10);
        CHECK(std::abs(patchArea(p) - kTwoPi) < 1e-10);
    }
}

TEST_CASE("rounded rectangle") {
    const RectangleInfo info = makeRectangle(0.05, 0.02, 512);
    const Patch& p = info.patch;
    CHECK(std::abs(patchArea(p) - kTwoPi) < 1e-12);
    CHECK(info.a == doctest::Approx(info.aSmooth).epsilon(1e-3));
    CHECK(info.a > 1.0);
    CHECK(p.isPinned(info.wallPoint));
    const auto at = p.find(info.wallPoint);
    REQUIRE(at);
    const CoverPoint w = p.contours[at->first][at->second];
    CHECK(w.x1 == 0.0);
    CHECK(w.x2 == 0.0);
    // Mirror symmetric in x2, so the vertical center sits at 0.
    CHECK(std::abs(verticalCenter(p)) < 1e-12);
    // The analytic symmetric difference of the smooth shape against a fine
    // row sampling of the marker polygon.
    const SymDiffResult sd = symDiffFunctionals(p, 32768);
    CHECK(sd.area == doctest::Approx(info.deltaSmooth).epsilon(2e-3));
    // j1 of the four thin slabs: about |sym diff| times (1 + mean x1) = 0.2 * 2.
    CHECK(sd.j1 == doctest::Approx(0.4).epsilon(0.2));
    CHECK_THROWS_AS(makeRectangle(0.05, 0.03), ParameterRangeError);
    CHECK_THROWS_AS(makeRectangle(0.0, 0.0), ParameterRangeError);
    CHECK_THROWS_AS(makeRectangle(0.05, 0.02, 32), ParameterRangeError);
}

TEST_CASE("projection onto the cylinder") {
    const CylPoint q = projectQ({0.3, 7.0});
    CHECK(q.x1 == 0.3);
    CHECK(q.x2 == doctest::Approx(7.0 - kTwoPi));
    CHECK(projectQ({0.0, kPi}).x2 == doctest::Approx(-kPi));
    CHECK(projectQ({0.0, -kPi}).x2 == doctest::Approx(-kPi));
}

TEST_CASE("membership and row intervals") {
    const Patch strip = makeStrip(256);
    const auto m = projectToCylinder(strip);
    CHECK(m.contains({0.5, 3.0}));
    CHECK(m.contains({0.5, -3.1}));
    CHECK_FALSE(m.contains({1.5, 0.0}));
    const auto rows = rowIntervals(strip, 0.3);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].first == doctest::Approx(0.0));
    CHECK(rows[0].second == doctest::Approx(1.0));

    Patch rect = makeRectangle(0.05, 0.02, 512).patch;
    const auto mr = projectToCylinder(rect);
    CHECK(mr.contains({0.5, 0.0}));
    CHECK_FALSE(mr.contains({0.5, kPi - 0.01}));
    CHECK(mr.contains({1.005, 1.0}));
    // A copy shifted by whole periods projects to the same set.
    for (Contour& c : rect.contours) c.translate({0.0, 3.0 * kTwoPi});
    const auto ms = projectToCylinder(rect);
    CHECK(ms.contains({0.5, 0.0}));
    CHECK_FALSE(ms.contains({0.5, kPi - 0.01}));
}

TEST_CASE("symmetric difference functionals") {
    const SymDiffResult zero = symDiffFunctionals(makeStrip(256), 1024);
    CHECK(zero.area <= zero.errorBound);
    CHECK(zero.j1 <= 2.0 * zero.errorBound);
    // The strip moved out to 1 < x1 < 2: the symmetric difference is both
    // strips, with j1 = 2 pi (3/2 + 5/2) and w = 2 pi (1/2 + 1/2).
    Patch moved = makeStrip(256);
    for (Contour& c : moved.contours) c.translate({1.0, 0.0});
    const SymDiffResult sd = symDiffFunctionals(moved, 1024);
    CHECK(sd.area == doctest::Approx(4.0 * kPi).epsilon(1e-9));
    CHECK(sd.j1 == doctest::Approx(8.0 * kPi).epsilon(1e-9));
    CHECK(sd.w == doctest::Approx(kTwoPi).epsilon(1e-9));
}

TEST_CASE("rasterized strip covers 2 pi") {
    const GridField g = rasterizePatch(makeStrip(256), 40, 64, 4.0);
    double area = 0.0;
    for (double v : g.values()) area += v;
    CHECK(area * g.cellArea() == doctest::Approx(kTwoPi).epsilon(1e-9));
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("self intersection") {
    CHECK_FALSE(hasSelfIntersection(single({{0, 0}, {1, 0}, {1, 1}, {0, 1}})));
    CHECK(hasSelfIntersection(single({{0, 0}, {1, 1}, {1, 0}, {0, 1}})));
    CHECK_FALSE(hasSelfIntersection(makeStrip(256)));
    CHECK_FALSE(hasSelfIntersection(shearedStrip(3.0)));
    // Taller than one period: its left side crosses the shifted copy of its
    // bottom edge.
    CHECK(hasSelfIntersection(subdivided({{0.5, -4}, {1, -4}, {1.2, 4}, {0.7, 4}})));
    CHECK_FALSE(hasSelfIntersection(subdivided({{0.5, -3}, {1, -3}, {1.2, 3}, {0.7, 3}})));
}

TEST_CASE("contour csv round trip") {
    RectangleInfo info = makeRectangle(0.1, 0.04, 128);
    info.patch.label = "rect";
    info.patch.contours[0].nextId = 500;
    const auto dir = std::filesystem::path(VPATCH_TEST_TMP);
    std::filesystem::create_directories(dir);
    writeContoursCsv(info.patch, dir / "p.csv");
    const Patch q = readContoursCsv(dir / "p.csv");
    CHECK(q.label == "rect");
    CHECK(q.pinned == info.patch.pinned);
    REQUIRE(q.contours.size() == 1);
    CHECK(q.contours[0].nextId == 500);
    CHECK(q.contours[0].ids == info.patch.contours[0].ids);
    CHECK(q.contours[0].markers == info.patch.contours[0].markers);
    CHECK(q.contours[0].strength == 1);
}
