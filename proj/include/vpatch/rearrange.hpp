#pragma once

// Decreasing rearrangement on the half cylinder and the functionals that go
// with it: level-set measure, horizontal impulse, J1 distance, the cut-off
// operator, and the two rearrangement inequalities (impulse-gap estimate and
// nonexpansivity against a non-increasing strip profile).

#include <utility>

#include "vpatch/grid_field.hpp"

namespace vpatch {

/// |{f > alpha}|.
double levelMeasure(const GridField& f, double alpha);

/// Discrete decreasing rearrangement f*.
///
/// All cell values are sorted in descending order (ties by row-major cell
/// index) and written column by column starting at the wall, so the k-th
/// largest value lands in column k / ny.  The output is non-increasing in
/// column-major order: every value in column i is >= every value in column
/// i + 1, and f* is x2-independent except inside the single column where a
/// level set ends.  The multiset of values is preserved exactly.
GridField rearrange(const GridField& f);

/// Gamma_alpha f = min(f, alpha), cellwise.
GridField cutoff(const GridField& f, double alpha);

double mass(const GridField& f);
double impulse(const GridField& f);
double l1Distance(const GridField& f, const GridField& g);
double j1Distance(const GridField& f, const GridField& g);

struct InequalitySides {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = ||f - f*||_1^2, rhs = 8 pi ||f||_inf (h(f) - h(f*)).
InequalitySides mpGap(const GridField& f);

/// lhs = ||f* - g||_1, rhs = ||f - g||_1 with g the rasterized profile.
InequalitySides nonexpansivityCheck(const GridField& f, const StripProfile& g);

}  // namespace vpatch
