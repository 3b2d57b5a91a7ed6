#include "vpatch/kernel.hpp"

#include <cmath>

namespace vpatch {

namespace {

constexpr double kSingularFloor = 1e-300;

double checkedDenominator(double d1, double d2) {
    const double den = coshMinusCos(d1, d2);
    if (!(den >= kSingularFloor)) {
        throw SingularInputError("kernel evaluated at a coincident point (mod 2pi)");
    }
    return den;
}

}  // namespace

double coshMinusCos(double d1, double d2) {
    const double a = std::sinh(0.5 * d1);
    const double b = std::sin(0.5 * d2);
    return 2.0 * (a * a + b * b);
}

double gammaS(CoverPoint d) {
    return -kInv4Pi * std::log(checkedDenominator(d.x1, d.x2));
}

Vec2 kernelS(CoverPoint d) {
    const double den = checkedDenominator(d.x1, d.x2);
    const double scale = kInv4Pi / den;
    return {scale * std::sin(d.x2), -scale * std::sinh(d.x1)};
}

double greenHalf(CoverPoint x, CoverPoint y) {
    const CoverPoint direct{x.x1 - y.x1, x.x2 - y.x2};
    const CoverPoint image{x.x1 + y.x1, x.x2 - y.x2};
    return gammaS(direct) - gammaS(image);
}

Vec2 kernelHalf(CoverPoint x, CoverPoint y) {
    const CoverPoint direct{x.x1 - y.x1, x.x2 - y.x2};
    const CoverPoint image{x.x1 + y.x1, x.x2 - y.x2};
    return kernelS(direct) - kernelS(image);
}

double wrappedDistance(CoverPoint x, CoverPoint y) {
    const double d1 = x.x1 - y.x1;
    double d2 = std::remainder(x.x2 - y.x2, kTwoPi);
    if (d2 >= kPi) d2 -= kTwoPi;
    return std::hypot(d1, d2);
}

}  // namespace vpatch
