#pragma once

// Closed-form Green's function and Biot-Savart kernel of the half cylinder
// R+ x T with an impermeable wall at x1 = 0.
//
//   Gamma_S(x) = -(1/4pi) ln(cosh x1 - cos x2)
//   K_S(x)     = (sin x2, -sinh x1) / (4pi (cosh x1 - cos x2))
//   Gamma(x,y) = Gamma_S(x - y) - Gamma_S(x + ybar),  ybar = (y1, -y2)
//   K(x,y)     = K_S(x - y) - K_S(x + ybar)
//
// cosh a - cos b is evaluated as 2 (sinh^2(a/2) + sin^2(b/2)), which avoids
// the cancellation near the singularity.

#include "vpatch/types.hpp"

namespace vpatch {

inline constexpr double kInv4Pi = 1.0 / (4.0 * kPi);

/// cosh(d1) - cos(d2), computed without cancellation.
double coshMinusCos(double d1, double d2);

double gammaS(CoverPoint d);
Vec2 kernelS(CoverPoint d);
double greenHalf(CoverPoint x, CoverPoint y);
Vec2 kernelHalf(CoverPoint x, CoverPoint y);

/// Distance in the cover after reducing x2 - y2 into [-pi, pi).
double wrappedDistance(CoverPoint x, CoverPoint y);

}  // namespace vpatch
