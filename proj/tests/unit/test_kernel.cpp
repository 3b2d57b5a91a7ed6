#include <doctest.h>

#include <cmath>
#include <random>

#include "vpatch/kernel.hpp"

using namespace vpatch;

namespace {

// Direct long double evaluation of the textbook formulas.
long double gammaRef(long double d1, long double d2) {
    return -std::log(std::cosh(d1) - std::cos(d2)) / (4.0L * 3.141592653589793238462643383279L);
}

Vec2 perpGrad(auto&& f, CoverPoint x, double h = 1e-5) {
    const double d1 = (f(CoverPoint{x.x1 + h, x.x2}) - f(CoverPoint{x.x1 - h, x.x2})) / (2 * h);
    const double d2 = (f(CoverPoint{x.x1, x.x2 + h}) - f(CoverPoint{x.x1, x.x2 - h})) / (2 * h);
    return {-d2, d1};
}

}  // namespace

TEST_CASE("coshMinusCos matches direct evaluation away from the singularity") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng);
        const long double ref = std::cosh(static_cast<long double>(a)) - std::cos(static_cast<long double>(b));
        if (ref < 1e-3) continue;
        CHECK(coshMinusCos(a, b) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
    }
    // Near the origin cosh a - cos b = (a^2 + b^2)/2 to relative order a^2.
    CHECK(coshMinusCos(1e-8, 2e-8) == doctest::Approx(2.5e-16).epsilon(1e-14));
}

TEST_CASE("gammaS spot values") {
    CHECK(gammaS({0.0, kPi}) == doctest::Approx(-std::log(2.0) / (4.0 * kPi)).epsilon(1e-15));
    CHECK(gammaS({0.0, kPi}) == doctest::Approx(-0.0551589).epsilon(1e-6));
    CHECK(std::abs(gammaS({10.0, 0.3}) - static_cast<double>(gammaRef(10.0L, 0.3L))) < 1e-12);
    // The large-x1 form -(x1 - ln 2)/(4 pi) is only leading order; the gap is
    // the next term 2 cos(x2) e^-x1 / (4 pi), about 7e-6 here.
    const double lead = -(10.0 - std::log(2.0)) / (4.0 * kPi);
    CHECK(gammaS({10.0, 0.3}) - lead == doctest::Approx(2.0 * std::cos(0.3) * std::exp(-10.0) / (4.0 * kPi)).epsilon(1e-3));
}

TEST_CASE("gammaS symmetries") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const CoverPoint d{u(rng), u(rng)};
        if (coshMinusCos(d.x1, d.x2) < 1e-6) continue;
        CHECK(gammaS(d) == gammaS({-d.x1, d.x2}));
        CHECK(gammaS(d) == gammaS({d.x1, -d.x2}));
        CHECK(gammaS(d) == doctest::Approx(gammaS({d.x1, d.x2 + kTwoPi})).epsilon(1e-12));
    }
}

TEST_CASE("kernel evaluated at the singularity throws") {
    CHECK_THROWS_AS(gammaS({0.0, 0.0}), SingularInputError);
    CHECK_THROWS_AS(kernelS({0.0, 0.0}), SingularInputError);
    CHECK_THROWS_AS(greenHalf({0.3, 0.1}, {0.3, 0.1}), SingularInputError);
}

TEST_CASE("kernelS spot values and limits") {
    const Vec2 k = kernelS({0.0, kPi});
    CHECK(std::abs(k.u1) < 1e-16);
    CHECK(k.u2 == 0.0);
    for (double x1 : {0.1, 0.7, 2.0, 6.0}) {
        const Vec2 a = kernelS({x1, 0.0});
        CHECK(a.u1 == 0.0);
        CHECK(a.u2 == doctest::Approx(-1.0 / (std::tanh(0.5 * x1) * 4.0 * kPi)).epsilon(1e-13));
    }
    CHECK(std::abs(kernelS({20.0, 1.1}).u2 + 1.0 / (4.0 * kPi)) < 1e-8);
}

TEST_CASE("kernels are the perpendicular gradients of the Green's functions") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const CoverPoint x{0.05 + 2.5 * u(rng), kPi * (2 * u(rng) - 1)};
        const CoverPoint y{2.5 * u(rng), kPi * (2 * u(rng) - 1)};
        if (wrappedDistance(x, y) < 0.2) continue;
        const CoverPoint d = x - y;
        CHECK((kernelS(d) - perpGrad([&](CoverPoint p) { return gammaS(p - y); }, x)).norm() < 1e-6);
        CHECK((kernelHalf(x, y) - perpGrad([&](CoverPoint p) { return greenHalf(p, y); }, x)).norm() < 1e-6);
    }
}

TEST_CASE("greenHalf wall values") {
    CHECK(std::abs(greenHalf({0.0, 0.7}, {0.4, -0.2})) < 1e-15);
    CHECK(std::abs(greenHalf({1.3, 0.7}, {0.0, -0.2})) < 1e-15);
    const double ref = static_cast<double>(gammaRef(-1.0L, 0.0L) - gammaRef(2.0L, 0.0L));
    CHECK(greenHalf({0.5, 0.0}, {1.5, 0.0}) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("kernelHalf wall behaviour and near-field bound") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const CoverPoint x{3.0 * u(rng), kPi * (2 * u(rng) - 1)};
        const CoverPoint y{3.0 * u(rng), kPi * (2 * u(rng) - 1)};
        if (i < 200) {
            CHECK(std::abs(kernelHalf({0.0, x.x2}, y).u1) < 1e-14);
            CHECK(kernelHalf(x, {0.0, y.x2}).norm() == 0.0);
        }
        const double d = wrappedDistance(x, y);
        if (d > 1e-9) worst = std::max(worst, kernelHalf(x, y).norm() * d);
    }
    // |K| d stays bounded; near coincidence it tends to 1/(2 pi).
    CHECK(worst < 1.0);
    CHECK(worst > 1.0 / (2.0 * kPi) * 0.9);
}

TEST_CASE("wrappedDistance reduces x2 into one period") {
    CHECK(wrappedDistance({0.0, 3.0}, {0.0, -3.0}) == doctest::Approx(kTwoPi - 6.0));
    CHECK(wrappedDistance({1.0, 0.0}, {0.0, 4.0 * kPi}) == doctest::Approx(1.0));
}
