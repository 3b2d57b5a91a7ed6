#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "vpatch/contour.hpp"
#include "vpatch/grid_field.hpp"
#include "vpatch/types.hpp"

namespace vpatch {

/// Quotient map of the cover onto the cylinder: x2 -> x2 - 2 n pi with the
/// result in [-pi, pi).
CylPoint projectQ(CoverPoint p);

// Polygon functionals of a closed contour, in cover coordinates.  All of them
// integrate along dx2 only (Green's theorem with the x1 dx2 form), which is
// algebraically the shoelace formula but keeps large x2 offsets out of the
// products.
double polygonArea(const Contour& c);       ///< signed area
double polygonPerimeter(const Contour& c);
double polygonMomentX1(const Contour& c);   ///< integral of x1 dA
double polygonMomentX2(const Contour& c);   ///< integral of x2 dA

// Strength-weighted sums over the contours of a patch.
double patchArea(const Patch& p);
double patchImpulse(const Patch& p);
double patchPerimeter(const Patch& p);
/// k = (integral of x2) / mass, in the cover.
double verticalCenter(const Patch& p);

/// The steady strip {0 < x1 < 1} as one closed contour in the cover: the
/// fundamental rectangle [0,1] x [-pi,pi].  Its right side is the circle
/// x1 = 1 and its left side the wall circle; the top and bottom edges are the
/// same cut seen from both sides, so their contributions cancel in every
/// periodic integral.  The four corners are pinned.
Patch makeStrip(std::size_t nodes = 512);

struct RectangleInfo {
    Patch patch;
    double h = 0.0;
    double r = 0.0;
    double a = 0.0;          ///< width used by the marker polygon (area exactly 2 pi)
    double aSmooth = 0.0;    ///< (2 pi + (4 - pi) r^2) / (2 pi - 2 h)
    double deltaSmooth = 0.0;  ///< |Omega0 sym-diff strip| of the smooth rounded rectangle
    MarkerId wallPoint = 0;  ///< id of the marker seeded at (0, 0)
};

/// Rounded rectangle {0 < x1 < a, -pi + h < x2 < pi - h} with quarter-circle
/// fillets of radius r at all four corners.  Markers are equally spaced in arc
/// length (denser on the fillets) starting from the wall point (0, 0), so the
/// polygon is symmetric in
/// x2.  a is tuned so that the marker polygon has area exactly 2 pi.
/// Requires 0 < r <= h/2 < pi/8 and nodes >= 64.
RectangleInfo makeRectangle(double h, double r, std::size_t nodes = 512);

/// Membership of a cylinder point in Q(patch): the winding number of some
/// contour about (x1, x2 + 2 k pi) is nonzero.  Crossings use a half-open
/// rule so points on the boundary get a deterministic answer.
class CylinderMembership {
public:
    explicit CylinderMembership(const Patch& patch);
    bool contains(CylPoint p) const;

private:
    const Patch* patch_;
};

CylinderMembership projectToCylinder(const Patch& patch);

/// Horizontal chord of Q(patch) at cylinder height y: sorted disjoint
/// intervals [l, r) in x1.
std::vector<std::pair<double, double>> rowIntervals(const Patch& patch, double y);

struct SymDiffResult {
    double area = 0.0;   ///< |Q(patch) sym-diff strip|
    double j1 = 0.0;     ///< integral of (1 + x1) over the symmetric difference
    double w = 0.0;      ///< integral of |1 - x1| over the symmetric difference
    double errorBound = 0.0;  ///< perimeter * row height
};

/// Rows are sampled at the centers of `resolution` equal bands in x2; along
/// each row the x1 extent is exact.
SymDiffResult symDiffFunctionals(const Patch& patch, std::size_t resolution);

/// Cell values are the covered fraction of each cell's center row.
GridField rasterizePatch(const Patch& patch, std::size_t nx, std::size_t ny, double xmax);

/// True when two non-adjacent segments cross properly, modulo 2 pi in x2.
bool hasSelfIntersection(const Patch& patch);

// Checkpoint format (text):
//   # vpatch contours v1
//   label,<text>
//   pinned,<id>,<id>,...
//   contour,<strength>,<next_id>,<count>
//   id,x1,x2
//   <count rows of id,x1,x2 with 17 significant digits>
//   ... further contour blocks ...
void writeContoursCsv(const Patch& p, const std::filesystem::path& path);
Patch readContoursCsv(const std::filesystem::path& path);

}  // namespace vpatch
