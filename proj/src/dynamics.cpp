#include "vpatch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "vpatch/patch_geometry.hpp"

namespace vpatch {

namespace {

constexpr std::size_t kMinNodes = 8;

// cos 60 deg: corners sharper than this at either end of the segment get a
// linear midpoint instead of the cubic one, which would overshoot.
constexpr double kSmoothTurnCos = 0.5;

double turnCos(CoverPoint a, CoverPoint b, CoverPoint c) {
    const CoverPoint u = b - a;
    const CoverPoint v = c - b;
    const double den = std::hypot(u.x1, u.x2) * std::hypot(v.x1, v.x2);
    return den > 0.0 ? (u.x1 * v.x1 + u.x2 * v.x2) / den : -1.0;
}

CoverPoint catmullRomMid(CoverPoint p0, CoverPoint p1, CoverPoint p2, CoverPoint p3, bool corner) {
    if (corner || turnCos(p0, p1, p2) < kSmoothTurnCos || turnCos(p1, p2, p3) < kSmoothTurnCos) {
        return {0.5 * (p1.x1 + p2.x1), 0.5 * (p1.x2 + p2.x2)};
    }
    return {(-p0.x1 + 9.0 * p1.x1 + 9.0 * p2.x1 - p3.x1) / 16.0,
            (-p0.x2 + 9.0 * p1.x2 + 9.0 * p2.x2 - p3.x2) / 16.0};
}

double turnAngle(const Contour& c, std::size_t i) {
    return std::acos(std::clamp(turnCos(c[c.prev(i)], c[i], c[c.next(i)]), -1.0, 1.0));
}

std::size_t refine(Contour& c, const RemeshOptions& o, const Patch& owner) {
    const double floorLen = o.dmax / o.splitFloor;
    std::size_t inserted = 0;
    for (int pass = 0; pass < 32; ++pass) {
        const std::size_t n = c.size();
        std::vector<double> turn(n);
        for (std::size_t i = 0; i < n; ++i) turn[i] = turnAngle(c, i);
        std::vector<CoverPoint> pts;
        std::vector<MarkerId> ids;
        pts.reserve(n + n / 4);
        ids.reserve(n + n / 4);
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(c[i]);
            ids.push_back(c.ids[i]);
            const std::size_t j = c.next(i);
            const double len = distance(c[i], c[j]);
            const bool sharp = std::max(turn[i], turn[j]) > o.maxTurn && len > floorLen;
            if (len > o.dmax || sharp) {
                const bool corner = owner.isPinned(c.ids[i]) || owner.isPinned(c.ids[j]);
                CoverPoint m = catmullRomMid(c[c.prev(i)], c[i], c[j], c[c.next(j)], corner);
                m.x1 = std::max(m.x1, 0.0);
                pts.push_back(m);
                ids.push_back(c.nextId++);
                ++inserted;
                changed = true;
            }
        }
        c.markers = std::move(pts);
        c.ids = std::move(ids);
        if (!changed) break;
    }
    return inserted;
}

// A node may go only if the boundary stays smooth there: neither it nor the
// neighbours it leaves behind may turn by more than half the split limit.
bool removable(const Contour& c, std::size_t i, const RemeshOptions& o) {
    const double limit = 0.5 * o.maxTurn;
    const auto angle = [](CoverPoint a, CoverPoint b, CoverPoint d) {
        return std::acos(std::clamp(turnCos(a, b, d), -1.0, 1.0));
    };
    const std::size_t p = c.prev(i);
    const std::size_t n = c.next(i);
    return turnAngle(c, i) <= limit && angle(c[c.prev(p)], c[p], c[n]) <= limit &&
           angle(c[p], c[n], c[c.next(n)]) <= limit;
}

// Markers that pile up (compression towards a stagnation point) are merged
// regardless of turning: their directions are rounding noise.
std::size_t dropPiles(Contour& c, double tiny, const Patch& owner) {
    const std::size_t n = c.size();
    std::vector<CoverPoint> pts;
    std::vector<MarkerId> ids;
    pts.reserve(n);
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool close = !pts.empty() && distance(pts.back(), c[i]) < tiny;
        const bool closeToFirst = i + 1 == n && distance(c[i], c[0]) < tiny;
        if ((close || closeToFirst) && !owner.isPinned(c.ids[i]) && n - (i - pts.size()) > kMinNodes) continue;
        pts.push_back(c[i]);
        ids.push_back(c.ids[i]);
    }
    const std::size_t dropped = n - pts.size();
    c.markers = std::move(pts);
    c.ids = std::move(ids);
    return dropped;
}

std::size_t coarsen(Contour& c, const RemeshOptions& o, const Patch& owner) {
    std::size_t piles = dropPiles(c, 0.25 * o.dmax / o.splitFloor, owner);
    const std::size_t n = c.size();
    if (n <= kMinNodes) return piles;
    std::vector<char> shortSeg(n);
    for (std::size_t i = 0; i < n; ++i) shortSeg[i] = distance(c[i], c[c.next(i)]) < o.dmin;
    // Start the cyclic scan right after a long segment, if there is one.
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!shortSeg[c.prev(i)]) {
            start = i;
            break;
        }
    }

    std::vector<char> drop(n, 0);
    std::size_t k = 0;
    while (k < n) {
        const std::size_t i = (start + k) % n;
        if (!shortSeg[i]) {
            ++k;
            continue;
        }
        std::size_t m = 0;
        while (k + m < n && shortSeg[(start + k + m) % n]) ++m;
        if (m >= 3) {
            for (std::size_t q = 1; q < m; q += 2) {
                const std::size_t node = (i + q) % n;
                if (owner.isPinned(c.ids[node]) || !removable(c, node, o)) continue;
                drop[node] = 1;
            }
        }
        k += m;
    }
    const auto count = static_cast<std::size_t>(std::count(drop.begin(), drop.end(), 1));
    if (count == 0 || n - count < kMinNodes) return piles;
    std::vector<CoverPoint> pts;
    std::vector<MarkerId> ids;
    pts.reserve(n - count);
    ids.reserve(n - count);
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i]) continue;
        pts.push_back(c[i]);
        ids.push_back(c.ids[i]);
    }
    c.markers = std::move(pts);
    c.ids = std::move(ids);
    return piles + count;
}

double cross(CoverPoint a, CoverPoint b, CoverPoint c) {
    return (b.x1 - a.x1) * (c.x2 - a.x2) - (b.x2 - a.x2) * (c.x1 - a.x1);
}

// Proper crossing of [a,b] and [c,d]; returns the parameter along [a,b].
std::optional<double> crossingParam(CoverPoint a, CoverPoint b, CoverPoint c, CoverPoint d) {
    const double o1 = cross(a, b, c);
    const double o2 = cross(a, b, d);
    const double o3 = cross(c, d, a);
    const double o4 = cross(c, d, b);
    if ((o1 > 0) == (o2 > 0) || (o3 > 0) == (o4 > 0) || o1 == 0 || o2 == 0 || o3 == 0 || o4 == 0) {
        return std::nullopt;
    }
    return o3 / (o3 - o4);
}

std::size_t cutLoops(Contour& c, std::size_t window, const Patch& owner) {
    std::size_t cuts = 0;
    for (std::size_t i = 0; i < c.size() && c.size() > kMinNodes + window; ++i) {
        const std::size_t n = c.size();
        for (std::size_t k = 2; k <= window && k + 1 < n; ++k) {
            const std::size_t j = (i + k) % n;
            const auto s = crossingParam(c[i], c[c.next(i)], c[j], c[c.next(j)]);
            if (!s) continue;
            bool pinned = false;
            for (std::size_t q = 1; q <= k; ++q) pinned = pinned || owner.isPinned(c.ids[(i + q) % n]);
            if (pinned) continue;
            const CoverPoint a = c[i];
            const CoverPoint b = c[c.next(i)];
            const CoverPoint x{a.x1 + *s * (b.x1 - a.x1), a.x2 + *s * (b.x2 - a.x2)};
            // Nodes i+1 .. i+k form the loop; the crossing point replaces them.
            std::vector<CoverPoint> pts;
            std::vector<MarkerId> ids;
            pts.reserve(n - k + 1);
            ids.reserve(n - k + 1);
            for (std::size_t q = 0; q < n; ++q) {
                const std::size_t off = (q + n - i) % n;
                if (off == 1) {
                    pts.push_back(x);
                    ids.push_back(c.nextId++);
                } else if (off == 0 || off > k) {
                    pts.push_back(c[q]);
                    ids.push_back(c.ids[q]);
                }
            }
            c.markers = std::move(pts);
            c.ids = std::move(ids);
            ++cuts;
            break;
        }
    }
    return cuts;
}

std::vector<CoverPoint> flatten(const Patch& p) {
    std::vector<CoverPoint> out;
    out.reserve(p.markerCount());
    for (const auto& c : p.contours) out.insert(out.end(), c.markers.begin(), c.markers.end());
    return out;
}

void scatter(Patch& p, const std::vector<CoverPoint>& pts) {
    std::size_t k = 0;
    for (auto& c : p.contours) {
        for (auto& m : c.markers) m = pts[k++];
    }
}

std::vector<Vec2> velocities(const Patch& p, const std::vector<CoverPoint>& pts,
                             const QuadratureOptions& quad, double maxSpeed) {
    auto u = ContourVelocityEvaluator(p, quad).evaluate(pts);
    for (const Vec2& v : u) {
        if (!std::isfinite(v.u1) || !std::isfinite(v.u2)) {
            throw NumericalAbort("nonfinite_velocity", "velocity is not finite");
        }
        if (v.norm() > maxSpeed) throw NumericalAbort("blowup", "marker speed exceeds the blow-up bound");
    }
    return u;
}

void writeText(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
}

}  // namespace

RemeshStats remesh(Patch& patch, const RemeshOptions& opts) {
    RemeshStats stats;
    if (!opts.enabled) return stats;
    if (!(opts.dmax > 0.0) || !(opts.dmin >= 0.0) || opts.dmin * 2.0 > opts.dmax) {
        throw ParameterRangeError("remesh needs dmax > 0 and 0 <= dmin <= dmax / 2");
    }
    if (!(opts.maxTurn > 0.0) || !(opts.splitFloor >= 1.0)) {
        throw ParameterRangeError("remesh needs maxTurn > 0 and splitFloor >= 1");
    }
    const double before = patchArea(patch);
    for (auto& c : patch.contours) {
        stats.inserted += refine(c, opts, patch);
        stats.deleted += coarsen(c, opts, patch);
        if (opts.loopWindow > 0) stats.loopsCut += cutLoops(c, opts.loopWindow, patch);
    }
    const double after = patchArea(patch);
    if (std::abs(after - before) > opts.areaTolerance * std::abs(before)) {
        throw NumericalAbort("area_distortion", "remeshing changed the patch area beyond tolerance");
    }
    return stats;
}

void rk4Step(FlowState& state, const QuadratureOptions& quad, double maxSpeed) {
    const double dt = state.dt;
    const std::vector<CoverPoint> x0 = flatten(state.patch);
    const std::size_t n = x0.size();
    Patch work = state.patch;
    std::vector<CoverPoint> xs(n);
    std::vector<Vec2> acc(n);

    const auto stage = [&](const std::vector<Vec2>* prev, double h, double weight) {
        if (prev) {
            for (std::size_t i = 0; i < n; ++i) {
                xs[i] = {x0[i].x1 + h * (*prev)[i].u1, x0[i].x2 + h * (*prev)[i].u2};
            }
        } else {
            xs = x0;
        }
        scatter(work, xs);
        auto u = velocities(work, xs, quad, maxSpeed);
        for (std::size_t i = 0; i < n; ++i) acc[i] += weight * u[i];
        return u;
    };
    const auto k1 = stage(nullptr, 0.0, 1.0);
    const auto k2 = stage(&k1, 0.5 * dt, 2.0);
    const auto k3 = stage(&k2, 0.5 * dt, 2.0);
    stage(&k3, dt, 1.0);

    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = {std::max(0.0, x0[i].x1 + dt / 6.0 * acc[i].u1), x0[i].x2 + dt / 6.0 * acc[i].u2};
    }
    scatter(state.patch, xs);
    ++state.stepCount;
}

std::string configHash(const nlohmann::json& config) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::filesystem::path writeCheckpoint(const FlowState& s, const RunConfig& cfg,
                                      const std::filesystem::path& stem) {
    auto csv = stem;
    csv += ".csv";
    auto js = stem;
    js += ".json";
    writeContoursCsv(s.patch, csv);
    nlohmann::json side;
    side["t"] = s.t();
    side["stepCount"] = s.stepCount;
    side["dt"] = s.dt;
    side["experiment"] = cfg.experiment;
    side["config"] = cfg.meta;
    side["cfgHash"] = configHash(cfg.meta);
    side["contours"] = csv.filename().string();
    writeText(js, side.dump(2) + "\n");
    return js;
}

Checkpoint readCheckpoint(const std::filesystem::path& path) {
    auto js = path;
    js.replace_extension(".json");
    std::ifstream in(js);
    if (!in) throw Error("cannot open checkpoint sidecar " + js.string());
    Checkpoint cp;
    try {
        in >> cp.sidecar;
    } catch (const nlohmann::json::exception& e) {
        throw Error("checkpoint sidecar " + js.string() + " is not valid JSON");
    }
    const auto& side = cp.sidecar;
    if (!side.contains("config") || !side.contains("stepCount") || !side.contains("dt") ||
        !side.contains("cfgHash")) {
        throw Error("checkpoint sidecar " + js.string() + " is missing fields");
    }
    if (side["cfgHash"].get<std::string>() != configHash(side["config"])) {
        throw Error("checkpoint " + js.string() + ": config hash mismatch");
    }
    auto csv = js;
    csv.replace_extension(".csv");
    cp.state.patch = readContoursCsv(csv);
    cp.state.stepCount = side["stepCount"].get<std::int64_t>();
    cp.state.dt = side["dt"].get<double>();
    return cp;
}

RunOutcome run(FlowState state, const RunConfig& cfg, const DiagnosticHook& hook) {
    if (!(cfg.dt > 0.0) || !(cfg.tEnd >= 0.0)) throw ParameterRangeError("run needs dt > 0 and tEnd >= 0");
    state.dt = cfg.dt;
    const auto endStep = static_cast<std::int64_t>(std::ceil(cfg.tEnd / cfg.dt - 1e-9));
    const std::int64_t diagEvery = std::max<std::int64_t>(1, cfg.diagEvery);

    const auto observe = [&] {
        if (cfg.checkIntersections && hasSelfIntersection(state.patch)) {
            throw NumericalAbort("self_intersection", "contour intersects itself");
        }
        if (hook) hook(state);
    };

    RunOutcome out;
    std::optional<NumericalAbort> abort;
    try {
        if (state.stepCount % diagEvery == 0) observe();
        while (state.stepCount < endStep) {
            FlowState next = state;
            rk4Step(next, cfg.quadrature, cfg.maxSpeed);
            remesh(next.patch, cfg.remesh);
            state = std::move(next);
            if (state.stepCount % diagEvery == 0 || state.stepCount == endStep) observe();
            if (cfg.checkpointEvery > 0 && state.stepCount % cfg.checkpointEvery == 0 && !cfg.outDir.empty()) {
                char name[32];
                std::snprintf(name, sizeof name, "checkpoint_%06lld", static_cast<long long>(state.stepCount));
                writeCheckpoint(state, cfg, cfg.outDir / name);
            }
        }
    } catch (const DegenerateSegmentError& e) {
        abort = NumericalAbort("degenerate_segment", e.what());
    } catch (const NumericalAbort& e) {
        abort = e;
    }
    if (abort) {
        const NumericalAbort& e = *abort;
        out.aborted = true;
        out.reason = e.reason();
        out.message = e.what();
        if (!cfg.outDir.empty()) {
            nlohmann::json m;
            m["reason"] = e.reason();
            m["message"] = e.what();
            m["t"] = state.t();
            m["stepCount"] = state.stepCount;
            m["experiment"] = cfg.experiment;
            writeText(cfg.outDir / "failure.json", m.dump(2) + "\n");
            writeCheckpoint(state, cfg, cfg.outDir / "failure_state");
        }
    }
    out.state = std::move(state);
    return out;
}

}  // namespace vpatch
