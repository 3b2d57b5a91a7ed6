#include "vpatch/patch_geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

namespace vpatch {

namespace {

void requirePolygon(const Contour& c) {
    if (c.size() < 3) throw DegeneratePolygonError("contour needs at least 3 markers");
}

}  // namespace

CylPoint projectQ(CoverPoint p) {
    double y = std::remainder(p.x2, kTwoPi);
    if (y >= kPi) y -= kTwoPi;
    if (y < -kPi) y += kTwoPi;
    return {p.x1, y};
}

double polygonArea(const Contour& c) {
    requirePolygon(c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const CoverPoint a = c[i];
        const CoverPoint b = c[c.next(i)];
        s += (a.x1 + b.x1) * (b.x2 - a.x2);
    }
    return 0.5 * s;
}

double polygonPerimeter(const Contour& c) {
    requirePolygon(c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += distance(c[i], c[c.next(i)]);
    return s;
}

double polygonMomentX1(const Contour& c) {
    requirePolygon(c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const CoverPoint a = c[i];
        const CoverPoint b = c[c.next(i)];
        s += (a.x1 * a.x1 + a.x1 * b.x1 + b.x1 * b.x1) * (b.x2 - a.x2);
    }
    return s / 6.0;
}

double polygonMomentX2(const Contour& c) {
    requirePolygon(c);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const CoverPoint a = c[i];
        const CoverPoint b = c[c.next(i)];
        s += (2.0 * (a.x1 * a.x2 + b.x1 * b.x2) + a.x1 * b.x2 + b.x1 * a.x2) * (b.x2 - a.x2);
    }
    return s / 6.0;
}

double patchArea(const Patch& p) {
    double s = 0.0;
    for (const auto& c : p.contours) s += c.strength * polygonArea(c);
    return s;
}

double patchImpulse(const Patch& p) {
    double s = 0.0;
    for (const auto& c : p.contours) s += c.strength * polygonMomentX1(c);
    return s;
}

double patchPerimeter(const Patch& p) {
    double s = 0.0;
    for (const auto& c : p.contours) s += polygonPerimeter(c);
    return s;
}

double verticalCenter(const Patch& p) {
    const double m = patchArea(p);
    if (std::abs(m) < 1e-12) throw DegeneratePolygonError("patch has zero mass");
    double s = 0.0;
    for (const auto& c : p.contours) s += c.strength * polygonMomentX2(c);
    return s / m;
}

Patch makeStrip(std::size_t nodes) {
    if (nodes < 8) throw ParameterRangeError("strip needs at least 8 nodes");
    const double per = 2.0 + 2.0 * kTwoPi;
    const auto nh = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(nodes / per)));
    const auto nv = std::max<std::size_t>(2, (nodes - 2 * nh) / 2);
    const double fh = static_cast<double>(nh);
    const double fv = static_cast<double>(nv);
    std::vector<CoverPoint> pts;
    pts.reserve(2 * (nh + nv));
    for (std::size_t i = 0; i < nh; ++i) pts.push_back({static_cast<double>(i) / fh, -kPi});
    for (std::size_t i = 0; i < nv; ++i) pts.push_back({1.0, -kPi + kTwoPi * static_cast<double>(i) / fv});
    for (std::size_t i = 0; i < nh; ++i) pts.push_back({static_cast<double>(nh - i) / fh, kPi});
    for (std::size_t i = 0; i < nv; ++i) pts.push_back({0.0, kPi - kTwoPi * static_cast<double>(i) / fv});
    Patch p;
    p.contours.emplace_back(std::move(pts), 1);
    p.label = "strip";
    const auto corner = [](std::size_t i) { return static_cast<MarkerId>(i); };
    p.pinned = {corner(0), corner(nh), corner(nh + nv), corner(2 * nh + nv)};
    return p;
}

namespace {

// One piece of the rounded-rectangle boundary: a segment, or an arc when
// radius > 0 (angles t0 -> t1, counter-clockwise about center).
struct Piece {
    CoverPoint p0;
    CoverPoint p1;
    CoverPoint center;
    double radius = 0.0;
    double t0 = 0.0;
    double t1 = 0.0;

    double length() const { return radius > 0.0 ? radius * (t1 - t0) : distance(p0, p1); }
    CoverPoint at(double s) const {
        if (radius > 0.0) {
            const double t = t0 + s / radius;
            return {center.x1 + radius * std::cos(t), center.x2 + radius * std::sin(t)};
        }
        const double w = s / length();
        return {p0.x1 + w * (p1.x1 - p0.x1), p0.x2 + w * (p1.x2 - p0.x2)};
    }
};

Piece line(CoverPoint a, CoverPoint b) { return {a, b, {}, 0.0, 0.0, 0.0}; }
Piece arc(CoverPoint c, double r, double t0, double t1) { return {{}, {}, c, r, t0, t1}; }

// Fillets get a higher marker density (at least kFilletNodes per quarter
// circle) so the corners stay resolved once the shear sharpens them.
constexpr double kFilletNodes = 8.0;

std::vector<CoverPoint> roundedRectangle(double a, double h, double r, std::size_t nodes) {
    const double lo = -kPi + h;
    const double hi = kPi - h;
    const std::array<Piece, 9> pieces = {
        line({0.0, 0.0}, {0.0, lo + r}),
        arc({r, lo + r}, r, kPi, 1.5 * kPi),
        line({r, lo}, {a - r, lo}),
        arc({a - r, lo + r}, r, -0.5 * kPi, 0.0),
        line({a, lo + r}, {a, hi - r}),
        arc({a - r, hi - r}, r, 0.0, 0.5 * kPi),
        line({a - r, hi}, {r, hi}),
        arc({r, hi - r}, r, 0.5 * kPi, kPi),
        line({0.0, hi - r}, {0.0, 0.0}),
    };
    // Markers are uniform in a weighted arc length; arcs count weight times.
    double lines = 0.0;
    double arcs = 0.0;
    for (const auto& pc : pieces) (pc.radius > 0.0 ? arcs : lines) += pc.length();
    const double quarter = 0.25 * arcs;
    const double n = static_cast<double>(nodes);
    const double weight = std::max(1.0, kFilletNodes * lines / (n * quarter - kFilletNodes * arcs));
    const auto weighted = [weight](const Piece& pc) { return pc.radius > 0.0 ? weight * pc.length() : pc.length(); };
    double total = 0.0;
    for (const auto& pc : pieces) total += weighted(pc);

    std::vector<CoverPoint> pts;
    pts.reserve(nodes);
    std::size_t k = 0;
    double start = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double s = total * static_cast<double>(i) / n;
        while (k + 1 < pieces.size() && s >= start + weighted(pieces[k])) {
            start += weighted(pieces[k]);
            ++k;
        }
        const double local = (s - start) * pieces[k].length() / weighted(pieces[k]);
        CoverPoint q = pieces[k].at(local);
        if (pieces[k].radius == 0.0 && pieces[k].p0.x1 == 0.0 && pieces[k].p1.x1 == 0.0) q.x1 = 0.0;
        q.x1 = std::max(q.x1, 0.0);
        pts.push_back(q);
    }
    return pts;
}

double polygonAreaOf(std::vector<CoverPoint> pts) {
    return polygonArea(Contour(std::move(pts), 1));
}

}  // namespace

RectangleInfo makeRectangle(double h, double r, std::size_t nodes) {
    if (!(r > 0.0) || !(r <= 0.5 * h) || !(0.5 * h < kPi / 8.0)) {
        throw ParameterRangeError("rounded rectangle needs 0 < r <= h/2 < pi/8");
    }
    if (nodes < 64) throw ParameterRangeError("rounded rectangle needs at least 64 nodes");

    RectangleInfo info;
    info.h = h;
    info.r = r;
    const double height = kTwoPi - 2.0 * h;
    info.aSmooth = (kTwoPi + (4.0 - kPi) * r * r) / height;

    // Secant iteration on the polygon area; the slope is close to the height.
    double a0 = info.aSmooth;
    double f0 = polygonAreaOf(roundedRectangle(a0, h, r, nodes)) - kTwoPi;
    double a1 = a0 - f0 / height;
    for (int it = 0; it < 20; ++it) {
        const double f1 = polygonAreaOf(roundedRectangle(a1, h, r, nodes)) - kTwoPi;
        if (std::abs(f1) <= 1e-14 * kTwoPi || f1 == f0) break;
        const double a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = a2;
    }
    info.a = a1;

    // Smooth shape: Omega0 \ strip is the part beyond x1 = 1; with equal areas
    // the symmetric difference is twice that.
    const double c = info.aSmooth - r;
    const double u0 = std::max(0.0, 1.0 - c);
    const auto g = [r](double u) { return u * std::sqrt(std::max(0.0, r * r - u * u)) + r * r * std::asin(std::min(1.0, u / r)); };
    double beyond = (height - 2.0 * r) * (r - u0) + g(r) - g(u0);
    if (c > 1.0) beyond += height * (c - 1.0);
    info.deltaSmooth = 2.0 * beyond;

    info.patch.contours.emplace_back(roundedRectangle(info.a, h, r, nodes), 1);
    info.patch.label = "rectangle";
    info.wallPoint = info.patch.contours[0].ids[0];
    info.patch.pinned.push_back(info.wallPoint);
    return info;
}

namespace {

struct Crossing {
    long k;
    double x;
    int dir;
};

void collectCrossings(const Contour& c, double y, std::vector<Crossing>& out) {
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i) {
        const CoverPoint a = c[i];
        const CoverPoint b = c[c.next(i)];
        if (a.x2 == b.x2) continue;
        const double lo = std::min(a.x2, b.x2);
        const double hi = std::max(a.x2, b.x2);
        const long kmin = static_cast<long>(std::ceil((lo - y) / kTwoPi)) - 1;
        const long kmax = static_cast<long>(std::floor((hi - y) / kTwoPi)) + 1;
        for (long k = kmin; k <= kmax; ++k) {
            const double yy = y + kTwoPi * static_cast<double>(k);
            if (!(lo <= yy && yy < hi)) continue;
            const double x = a.x1 + (yy - a.x2) * (b.x1 - a.x1) / (b.x2 - a.x2);
            out.push_back({k, x, b.x2 > a.x2 ? 1 : -1});
        }
    }
}

using Intervals = std::vector<std::pair<double, double>>;

// Union of weighted intervals: inside where the running weight is positive.
Intervals sweepUnion(std::vector<std::pair<double, int>>& events) {
    std::sort(events.begin(), events.end());
    Intervals out;
    int level = 0;
    double open = 0.0;
    for (const auto& [x, d] : events) {
        const int before = level;
        level += d;
        if (before <= 0 && level > 0) {
            open = x;
        } else if (before > 0 && level <= 0 && x > open) {
            if (!out.empty() && out.back().second >= open) {
                out.back().second = x;
            } else {
                out.emplace_back(open, x);
            }
        }
    }
    return out;
}

Intervals contourRow(const Contour& c, double y) {
    std::vector<Crossing> cr;
    collectCrossings(c, y, cr);
    std::sort(cr.begin(), cr.end(), [](const Crossing& p, const Crossing& q) {
        return p.k != q.k ? p.k < q.k : p.x < q.x;
    });
    std::vector<std::pair<double, int>> events;
    for (std::size_t s = 0; s < cr.size();) {
        std::size_t e = s;
        int total = 0;
        while (e < cr.size() && cr[e].k == cr[s].k) total += cr[e++].dir;
        int w = total;
        for (std::size_t i = s; i < e; ++i) {
            const int before = w;
            w -= cr[i].dir;
            if (before == 0 && w != 0) events.emplace_back(cr[i].x, 1);
            if (before != 0 && w == 0) events.emplace_back(cr[i].x, -1);
        }
        s = e;
    }
    return sweepUnion(events);
}

bool insideContour(const Contour& c, CylPoint p) {
    std::vector<Crossing> cr;
    collectCrossings(c, p.x2, cr);
    std::unordered_map<long, int> winding;
    for (const auto& x : cr) {
        if (x.x > p.x1) winding[x.k] += x.dir;
    }
    for (const auto& [k, w] : winding) {
        if (w != 0) return true;
    }
    return false;
}

}  // namespace

CylinderMembership::CylinderMembership(const Patch& patch) : patch_(&patch) {}

bool CylinderMembership::contains(CylPoint p) const {
    int level = 0;
    for (const auto& c : patch_->contours) {
        if (insideContour(c, p)) level += c.strength;
    }
    return level > 0;
}

CylinderMembership projectToCylinder(const Patch& patch) { return CylinderMembership(patch); }

std::vector<std::pair<double, double>> rowIntervals(const Patch& patch, double y) {
    if (patch.contours.size() == 1 && patch.contours[0].strength > 0) {
        return contourRow(patch.contours[0], y);
    }
    std::vector<std::pair<double, int>> events;
    for (const auto& c : patch.contours) {
        for (const auto& [l, r] : contourRow(c, y)) {
            events.emplace_back(l, c.strength);
            events.emplace_back(r, -c.strength);
        }
    }
    return sweepUnion(events);
}

SymDiffResult symDiffFunctionals(const Patch& patch, std::size_t resolution) {
    if (resolution == 0) throw ParameterRangeError("resolution must be positive");
    const double dy = kTwoPi / static_cast<double>(resolution);
    SymDiffResult res;
    std::vector<double> cuts;
    for (std::size_t j = 0; j < resolution; ++j) {
        const double y = -kPi + (static_cast<double>(j) + 0.5) * dy;
        const auto iv = rowIntervals(patch, y);
        cuts.clear();
        cuts.push_back(0.0);
        cuts.push_back(1.0);
        for (const auto& [l, r] : iv) {
            cuts.push_back(l);
            cuts.push_back(r);
        }
        std::sort(cuts.begin(), cuts.end());
        std::size_t k = 0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double p = cuts[c];
            const double q = cuts[c + 1];
            if (!(q > p)) continue;
            const double m = 0.5 * (p + q);
            while (k < iv.size() && iv[k].second <= m) ++k;
            const bool inPatch = k < iv.size() && iv[k].first <= m;
            const bool inStrip = m >= 0.0 && m < 1.0;
            if (inPatch == inStrip) continue;
            const double len = q - p;
            res.area += len;
            res.j1 += len * (1.0 + m);
            res.w += len * std::abs(1.0 - m);
        }
    }
    res.area *= dy;
    res.j1 *= dy;
    res.w *= dy;
    res.errorBound = patchPerimeter(patch) * dy;
    return res;
}

GridField rasterizePatch(const Patch& patch, std::size_t nx, std::size_t ny, double xmax) {
    GridField g(nx, ny, xmax);
    const double dx = g.dx();
    for (std::size_t j = 0; j < ny; ++j) {
        for (auto [l, r] : rowIntervals(patch, g.x2Center(j))) {
            l = std::max(l, 0.0);
            r = std::min(r, xmax);
            if (!(r > l)) continue;
            const auto i0 = static_cast<std::size_t>(l / dx);
            for (std::size_t i = i0; i < nx; ++i) {
                const double cl = static_cast<double>(i) * dx;
                const double cr = cl + dx;
                if (cl >= r) break;
                g.at(i, j) += (std::min(r, cr) - std::max(l, cl)) / dx;
            }
        }
    }
    for (double& v : g.values()) v = std::clamp(v, 0.0, 1.0);
    return g;
}

namespace {

struct Seg {
    std::size_t contour;
    std::size_t index;
    CoverPoint a;
    CoverPoint b;
};

double orient(CoverPoint a, CoverPoint b, CoverPoint c) {
    return (b.x1 - a.x1) * (c.x2 - a.x2) - (b.x2 - a.x2) * (c.x1 - a.x1);
}

// Endpoints within this distance of the other segment's line count as
// touching, not crossing; periodic images of one edge are collinear only up
// to rounding.
constexpr double kCrossTolerance = 1e-8;

bool properCrossing(const Seg& s, const Seg& t) {
    const double eps = kCrossTolerance * std::max(distance(s.a, s.b), distance(t.a, t.b));
    const double o1 = orient(s.a, s.b, t.a);
    const double o2 = orient(s.a, s.b, t.b);
    const double o3 = orient(t.a, t.b, s.a);
    const double o4 = orient(t.a, t.b, s.b);
    const auto strictOpposite = [eps](double p, double q) {
        return std::abs(p) > eps && std::abs(q) > eps && (p > 0) != (q > 0);
    };
    return strictOpposite(o1, o2) && strictOpposite(o3, o4);
}

}  // namespace

bool hasSelfIntersection(const Patch& patch) {
    std::vector<Seg> segs;
    double maxLen = 0.0;
    double xmax = 0.0;
    for (std::size_t c = 0; c < patch.contours.size(); ++c) {
        const auto& ct = patch.contours[c];
        for (std::size_t i = 0; i < ct.size(); ++i) {
            segs.push_back({c, i, ct[i], ct[ct.next(i)]});
            maxLen = std::max(maxLen, distance(ct[i], ct[ct.next(i)]));
            xmax = std::max(xmax, ct[i].x1);
        }
    }
    if (segs.empty()) return false;
    const double cell = std::max(maxLen, 1e-6);
    const auto n2 = std::max<long>(1, static_cast<long>(kTwoPi / cell));
    const double w2 = kTwoPi / static_cast<double>(n2);
    const auto n1 = static_cast<long>(xmax / cell) + 2;

    std::unordered_map<long, std::vector<std::size_t>> buckets;
    std::vector<std::pair<long, long>> where(segs.size());
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const CoverPoint m = 0.5 * (segs[s].a + segs[s].b);
        const CylPoint q = projectQ(m);
        const long b1 = std::clamp<long>(static_cast<long>(q.x1 / cell), 0, n1 - 1);
        const long b2 = std::clamp<long>(static_cast<long>((q.x2 + kPi) / w2), 0, n2 - 1);
        where[s] = {b1, b2};
        buckets[b1 * n2 + b2].push_back(s);
    }

    for (std::size_t s = 0; s < segs.size(); ++s) {
        const auto [b1, b2] = where[s];
        std::vector<long> keys;
        for (long d1 = -1; d1 <= 1; ++d1) {
            const long c1 = b1 + d1;
            if (c1 < 0 || c1 >= n1) continue;
            for (long d2 = -1; d2 <= 1; ++d2) keys.push_back(c1 * n2 + ((b2 + d2) % n2 + n2) % n2);
        }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        const CoverPoint ms = 0.5 * (segs[s].a + segs[s].b);
        for (long key : keys) {
            const auto it = buckets.find(key);
            if (it == buckets.end()) continue;
            for (std::size_t t : it->second) {
                if (t <= s) continue;
                const Seg& st = segs[t];
                if (st.contour == segs[s].contour) {
                    const auto& ct = patch.contours[st.contour];
                    if (ct.next(segs[s].index) == st.index || ct.next(st.index) == segs[s].index) continue;
                }
                const CoverPoint mt = 0.5 * (st.a + st.b);
                const double shift = kTwoPi * std::round((ms.x2 - mt.x2) / kTwoPi);
                const Seg moved{st.contour, st.index, {st.a.x1, st.a.x2 + shift}, {st.b.x1, st.b.x2 + shift}};
                if (properCrossing(segs[s], moved)) return true;
            }
        }
    }
    return false;
}

void writeContoursCsv(const Patch& p, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    std::fprintf(f, "# vpatch contours v1\nlabel,%s\npinned", p.label.c_str());
    for (MarkerId id : p.pinned) std::fprintf(f, ",%lld", static_cast<long long>(id));
    std::fprintf(f, "\n");
    for (const auto& c : p.contours) {
        std::fprintf(f, "contour,%d,%lld,%zu\nid,x1,x2\n", c.strength, static_cast<long long>(c.nextId), c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::fprintf(f, "%lld,%.17g,%.17g\n", static_cast<long long>(c.ids[i]), c[i].x1, c[i].x2);
        }
    }
    const bool ok = std::fclose(f) == 0;
    if (!ok) throw Error("failed writing " + path.string());
}

namespace {

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Patch readContoursCsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    const auto bad = [&path](const std::string& why) { return Error("contour csv " + path.string() + ": " + why); };
    std::string line;
    if (!std::getline(in, line) || line.rfind("# vpatch contours", 0) != 0) throw bad("missing header");
    Patch p;
    if (!std::getline(in, line) || line.rfind("label,", 0) != 0) throw bad("missing label line");
    p.label = line.substr(6);
    if (!std::getline(in, line) || line.rfind("pinned", 0) != 0) throw bad("missing pinned line");
    const auto pins = splitCsv(line);
    for (std::size_t i = 1; i < pins.size(); ++i) p.pinned.push_back(std::stoll(pins[i]));
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto head = splitCsv(line);
            if (head.size() != 4 || head[0] != "contour") throw bad("expected contour block");
            Contour c;
            c.strength = std::stoi(head[1]);
            c.nextId = std::stoll(head[2]);
            const auto count = static_cast<std::size_t>(std::stoull(head[3]));
            if (!std::getline(in, line) || line != "id,x1,x2") throw bad("expected column header");
            c.markers.reserve(count);
            c.ids.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                if (!std::getline(in, line)) throw bad("truncated contour block");
                const auto v = splitCsv(line);
                if (v.size() != 3) throw bad("malformed marker row");
                c.ids.push_back(std::stoll(v[0]));
                c.markers.push_back({std::stod(v[1]), std::stod(v[2])});
            }
            p.contours.push_back(std::move(c));
        }
    } catch (const std::logic_error&) {
        throw bad("malformed number");
    }
    return p;
}

}  // namespace vpatch
