#pragma once

// Velocity of a patch (piecewise constant vorticity bounded by marker
// polygons) and of a gridded vorticity field.
//
// Contour form: u(x) = -sum_c s_c * oint_c Gamma(x, y) dy, where the wall term
// of Gamma is the mirror image of each segment.  Segments use a two-point
// Gauss rule evaluated in product form (cosh/sinh/cos/sin tabulated per
// node).  Segments within a few segment lengths of x, or of its wall image,
// get the log singularity integrated in closed form plus a three-point Gauss
// rule for the smooth remainder.

#include <span>
#include <vector>

#include "vpatch/contour.hpp"
#include "vpatch/grid_field.hpp"
#include "vpatch/types.hpp"

namespace vpatch {

struct QuadratureOptions {
    /// Singular treatment when the distance to the segment midpoint is below
    /// this many segment lengths.
    double singularFactor = 3.0;
};

/// Precomputed segment data for repeated evaluation against one patch state.
class ContourVelocityEvaluator {
public:
    explicit ContourVelocityEvaluator(const Patch& patch, QuadratureOptions opts = {});

    Vec2 operator()(CoverPoint x) const;
    /// Evaluates at many points; parallel over points when OpenMP is enabled.
    std::vector<Vec2> evaluate(std::span<const CoverPoint> xs) const;

private:
    struct Segment {
        CoverPoint a;
        CoverPoint b;
        double len;
        double s;  // strength
    };
    Vec2 refined(const Segment& seg, CoverPoint x) const;

    struct GaussData {
        std::vector<double> ch, sh, c, s;
    };

    QuadratureOptions opts_;
    std::vector<Segment> segs_;
    GaussData gauss_[2];
    std::vector<double> near_;  // per-segment D threshold for singular treatment
    std::vector<double> e1_, e2_;
};

Vec2 velocityFromContours(const Patch& patch, CoverPoint x, QuadratureOptions opts = {});

/// Cell-midpoint quadrature of the kernel against a grid field.  Cells near x
/// (or near its wall image) are subdivided so the integrable singularity is
/// resolved.
Vec2 velocityFromGrid(const GridField& w, CoverPoint x);

}  // namespace vpatch
