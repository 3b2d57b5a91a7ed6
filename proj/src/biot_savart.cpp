#include "vpatch/biot_savart.hpp"

#include <algorithm>
#include <cmath>

#include "vpatch/kernel.hpp"

#if defined(VPATCH_SIMD_LOG)
// Lets the vectorizer call the glibc vector log in the far-field sweep
// without turning on -ffast-math for the whole file.
extern "C" double log(double) __attribute__((simd("notinbranch")));
#endif

namespace vpatch {

namespace {

constexpr double kGauss2 = 0.57735026918962576451;  // 1/sqrt(3)
constexpr double kGauss3 = 0.77459666924148337704;  // sqrt(3/5)

// Antiderivative of ln(u^2 + b^2).
double logAntiderivative(double u, double b) {
    if (b == 0.0) return u == 0.0 ? 0.0 : u * std::log(u * u) - 2.0 * u;
    return u * std::log(u * u + b * b) - 2.0 * u + 2.0 * b * std::atan(u / b);
}

double reduceAngle(double d) {
    double r = std::remainder(d, kTwoPi);
    if (r >= kPi) r -= kTwoPi;
    return r;
}

// Integral over s in [0, L] of Gamma_S(p + s v), |v| = 1.
double segmentGamma(CoverPoint p, CoverPoint v, double len, double factor) {
    p.x2 = reduceAngle(p.x2 + 0.5 * len * v.x2) - 0.5 * len * v.x2;
    const CoverPoint mid{p.x1 + 0.5 * len * v.x1, p.x2 + 0.5 * len * v.x2};
    const double dm = std::hypot(mid.x1, mid.x2);
    if (dm >= factor * len) {
        double sum = 0.0;
        for (double g : {-kGauss2, kGauss2}) {
            const double s = 0.5 * len * (1.0 + g);
            sum += std::log(coshMinusCos(p.x1 + s * v.x1, p.x2 + s * v.x2));
        }
        return -kInv4Pi * 0.5 * len * sum;
    }
    // ln D = ln|d|^2 - ln 2 + ln(2 D / |d|^2); the last term is smooth.
    const double proj = p.x1 * v.x1 + p.x2 * v.x2;
    const double a = -proj;
    const double b = std::sqrt(std::max(0.0, p.x1 * p.x1 + p.x2 * p.x2 - proj * proj));
    const double singular = logAntiderivative(len - a, b) - logAntiderivative(-a, b) - len * std::log(2.0);
    double smooth = 0.0;
    constexpr double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    constexpr double g[3] = {-kGauss3, 0.0, kGauss3};
    for (int k = 0; k < 3; ++k) {
        const double s = 0.5 * len * (1.0 + g[k]);
        const double d1 = p.x1 + s * v.x1;
        const double d2 = p.x2 + s * v.x2;
        const double r2 = d1 * d1 + d2 * d2;
        if (r2 > 1e-30) smooth += w[k] * std::log(2.0 * coshMinusCos(d1, d2) / r2);
    }
    return -kInv4Pi * (singular + 0.5 * len * smooth);
}

}  // namespace

ContourVelocityEvaluator::ContourVelocityEvaluator(const Patch& patch, QuadratureOptions opts)
    : opts_(opts) {
    for (const auto& c : patch.contours) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            const CoverPoint a = c[i];
            const CoverPoint b = c[c.next(i)];
            const double len = distance(a, b);
            if (!(len >= 1e-12)) throw DegenerateSegmentError("contour segment shorter than 1e-12");
            segs_.push_back({a, b, len, static_cast<double>(c.strength)});
            for (int g = 0; g < 2; ++g) {
                const double w = 0.5 * (1.0 + (g == 0 ? -kGauss2 : kGauss2));
                const CoverPoint m{a.x1 + w * (b.x1 - a.x1), a.x2 + w * (b.x2 - a.x2)};
                gauss_[g].ch.push_back(std::cosh(m.x1));
                gauss_[g].sh.push_back(std::sinh(m.x1));
                gauss_[g].c.push_back(std::cos(m.x2));
                gauss_[g].s.push_back(std::sin(m.x2));
            }
            // D ~ |d|^2 / 2 near the segment.
            const double rs = opts_.singularFactor * len;
            near_.push_back(0.5 * rs * rs);
            e1_.push_back(0.5 * c.strength * (b.x1 - a.x1) * kInv4Pi);
            e2_.push_back(0.5 * c.strength * (b.x2 - a.x2) * kInv4Pi);
        }
    }
}

Vec2 ContourVelocityEvaluator::refined(const Segment& seg, CoverPoint x) const {
    const CoverPoint t{(seg.b.x1 - seg.a.x1) / seg.len, (seg.b.x2 - seg.a.x2) / seg.len};
    const double direct = segmentGamma({x.x1 - seg.a.x1, x.x2 - seg.a.x2}, {-t.x1, -t.x2}, seg.len,
                                       opts_.singularFactor);
    const double image = segmentGamma({x.x1 + seg.a.x1, x.x2 - seg.a.x2}, {t.x1, -t.x2}, seg.len,
                                      opts_.singularFactor);
    return {-seg.s * t.x1 * (direct - image), -seg.s * t.x2 * (direct + image)};
}

Vec2 ContourVelocityEvaluator::operator()(CoverPoint x) const {
    const double chx = std::cosh(x.x1);
    const double shx = std::sinh(x.x1);
    const double cx = std::cos(x.x2);
    const double sx = std::sin(x.x2);
    const std::size_t n = segs_.size();
    thread_local std::vector<double> dm;
    thread_local std::vector<double> dp;
    dm.resize(n);
    dp.resize(n);
    double* pm = dm.data();
    double* pp = dp.data();
    const GaussData& g0 = gauss_[0];
    const GaussData& g1 = gauss_[1];
    const double* ch0 = g0.ch.data();
    const double* sh0 = g0.sh.data();
    const double* c0 = g0.c.data();
    const double* s0 = g0.s.data();
    const double* ch1 = g1.ch.data();
    const double* sh1 = g1.sh.data();
    const double* c1 = g1.c.data();
    const double* s1 = g1.s.data();
    // cosh(x1 -+ y1) - cos(x2 - y2) at both Gauss points, in product form.
    // The direct and image values share every term except the sinh product.
#pragma omp simd
    for (std::size_t k = 0; k < n; ++k) {
        const double cc0 = cx * c0[k] + sx * s0[k];
        const double ch0k = chx * ch0[k];
        const double sh0k = shx * sh0[k];
        const double cc1 = cx * c1[k] + sx * s1[k];
        const double ch1k = chx * ch1[k];
        const double sh1k = shx * sh1[k];
        const double m0 = ch0k - sh0k - cc0;
        const double m1 = ch1k - sh1k - cc1;
        const double p0 = ch0k + sh0k - cc0;
        const double p1 = ch1k + sh1k - cc1;
        pm[k] = std::min(m0, m1) < near_[k] ? -1.0 : m0 * m1;
        pp[k] = std::min(p0, p1) < near_[k] ? -1.0 : p0 * p1;
    }
    // Segments within a few lengths of x (or of its wall image) are done
    // separately; neutralize them in the sweep (log 1 = 0).
    Vec2 near;
    for (std::size_t k = 0; k < n; ++k) {
        if (pm[k] < 0.0 || pp[k] < 0.0) {
            near += refined(segs_[k], x);
            pm[k] = 1.0;
            pp[k] = 1.0;
        }
    }
    const double* e1 = e1_.data();
    const double* e2 = e2_.data();
    double u1 = 0.0;
    double u2 = 0.0;
#pragma omp simd reduction(+ : u1, u2)
    for (std::size_t k = 0; k < n; ++k) {
        const double lm = std::log(pm[k]);
        const double lp = std::log(pp[k]);
        u1 += e1[k] * (lm - lp);
        u2 += e2[k] * (lm + lp);
    }
    return {u1 + near.u1, u2 + near.u2};
}

std::vector<Vec2> ContourVelocityEvaluator::evaluate(std::span<const CoverPoint> xs) const {
    std::vector<Vec2> out(xs.size());
    const auto n = static_cast<long>(xs.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (*this)(xs[static_cast<std::size_t>(i)]);
    return out;
}

Vec2 velocityFromContours(const Patch& patch, CoverPoint x, QuadratureOptions opts) {
    return ContourVelocityEvaluator(patch, opts)(x);
}

namespace {

// Midpoint rule on a rectangle, subdivided 4 x 4 while it is close to either
// singular point.
Vec2 cellIntegral(CoverPoint x, double x1lo, double x2lo, double w1, double w2, int depth) {
    const CoverPoint c{x1lo + 0.5 * w1, x2lo + 0.5 * w2};
    const double size = std::max(w1, w2);
    const CoverPoint image{-x.x1, x.x2};
    const bool near = wrappedDistance(x, c) < 1.5 * size || wrappedDistance(image, c) < 1.5 * size;
    if (!near || depth == 0) {
        CoverPoint y = c;
        if (wrappedDistance(x, y) < 1e-14) y.x1 += 0.25 * w1;
        return (w1 * w2) * kernelHalf(x, y);
    }
    Vec2 sum;
    const double s1 = 0.25 * w1;
    const double s2 = 0.25 * w2;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) sum += cellIntegral(x, x1lo + a * s1, x2lo + b * s2, s1, s2, depth - 1);
    }
    return sum;
}

}  // namespace

Vec2 velocityFromGrid(const GridField& w, CoverPoint x) {
    const double dx = w.dx();
    const double dy = w.dy();
    Vec2 u;
    for (std::size_t j = 0; j < w.ny(); ++j) {
        for (std::size_t i = 0; i < w.nx(); ++i) {
            const double v = w.at(i, j);
            if (v == 0.0) continue;
            u += v * cellIntegral(x, static_cast<double>(i) * dx, -kPi + static_cast<double>(j) * dy, dx, dy, 3);
        }
    }
    return u;
}

}  // namespace vpatch
