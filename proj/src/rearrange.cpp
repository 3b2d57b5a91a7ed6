#include "vpatch/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vpatch {

namespace {

void requireSameGeometry(const GridField& f, const GridField& g) {
    if (!f.sameGeometry(g)) throw GridMismatchError("grid fields have different geometry");
}

}  // namespace

double levelMeasure(const GridField& f, double alpha) {
    if (!(alpha > 0.0)) throw ParameterRangeError("level must be positive");
    const auto count = std::count_if(f.values().begin(), f.values().end(),
                                     [alpha](double v) { return v > alpha; });
    return static_cast<double>(count) * f.cellArea();
}

GridField rearrange(const GridField& f) {
    const auto vals = f.values();
    std::vector<std::size_t> order(vals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&vals](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });

    GridField out(f.nx(), f.ny(), f.xmax());
    const std::size_t ny = f.ny();
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.at(k / ny, k % ny) = vals[order[k]];
    }
    return out;
}

GridField cutoff(const GridField& f, double alpha) {
    if (!(alpha > 0.0)) throw ParameterRangeError("cut-off level must be positive");
    GridField out = f;
    for (double& v : out.values()) v = std::min(v, alpha);
    return out;
}

double mass(const GridField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s * f.cellArea();
}

double impulse(const GridField& f) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.ny(); ++j) {
        for (std::size_t i = 0; i < f.nx(); ++i) s += f.at(i, j) * f.x1Center(i);
    }
    return s * f.cellArea();
}

double l1Distance(const GridField& f, const GridField& g) {
    requireSameGeometry(f, g);
    double s = 0.0;
    const auto a = f.values();
    const auto b = g.values();
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s * f.cellArea();
}

double j1Distance(const GridField& f, const GridField& g) {
    requireSameGeometry(f, g);
    double s = 0.0;
    for (std::size_t j = 0; j < f.ny(); ++j) {
        for (std::size_t i = 0; i < f.nx(); ++i) {
            s += std::abs(f.at(i, j) - g.at(i, j)) * (1.0 + f.x1Center(i));
        }
    }
    return s * f.cellArea();
}

InequalitySides mpGap(const GridField& f) {
    const GridField star = rearrange(f);
    const double l1 = l1Distance(f, star);
    return {l1 * l1, 8.0 * kPi * f.maxValue() * (impulse(f) - impulse(star))};
}

InequalitySides nonexpansivityCheck(const GridField& f, const StripProfile& g) {
    const GridField gg = g.rasterize(f.nx(), f.ny(), f.xmax());
    return {l1Distance(rearrange(f), gg), l1Distance(f, gg)};
}

}  // namespace vpatch
