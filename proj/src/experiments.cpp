#include "vpatch/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "vpatch/biot_savart.hpp"
#include "vpatch/grid_field.hpp"
#include "vpatch/kernel.hpp"
#include "vpatch/patch_geometry.hpp"
#include "vpatch/rearrange.hpp"

namespace vpatch {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr const char* kSeriesHeader = "t,mass,impulse,k,perimeter,j1dist,wsymdiff,maxspeed";
constexpr const char* kTracerHeader = "t,markers,wall_x1,wall_x2,min_x2,edge_drift";
constexpr const char* kProfileHeader = "t,x1,x2,u1,u2,ubar2";
constexpr const char* kGapHeader = "t,gap,x1,x2,symdiff";

std::string g12(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string joinRow(std::initializer_list<double> vs) {
    std::string s;
    for (double v : vs) {
        if (!s.empty()) s += ',';
        s += g12(v);
    }
    return s;
}

std::vector<std::vector<double>> readRows(const fs::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header) throw Error("unexpected header in " + path.string());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error("bad number '" + cell + "' in " + path.string());
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Keeps the header and the rows with t < tCut.
void truncateRows(const fs::path& path, const std::string& header, double tCut) {
    if (!fs::exists(path)) return;
    std::ifstream in(path);
    std::string line;
    std::string kept;
    if (std::getline(in, line)) {
        if (line != header) throw Error("unexpected header in " + path.string());
        kept = line + "\n";
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (std::stod(line.substr(0, line.find(','))) < tCut) kept += line + "\n";
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << kept;
}

std::ofstream openTable(const fs::path& path, const std::string& header, bool fresh) {
    const bool needHeader = fresh || !fs::exists(path) || fs::file_size(path) == 0;
    std::ofstream out(path, needHeader ? std::ios::trunc : std::ios::app);
    if (!out) throw Error("cannot write " + path.string());
    if (needHeader) out << header << "\n";
    return out;
}

void writeText(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

struct Tracker {
    MarkerId wall = 0;
    std::vector<std::pair<MarkerId, CoverPoint>> edge;
};

Tracker makeTracker(const std::string& experiment, const Patch& p) {
    Tracker tr;
    double best = std::numeric_limits<double>::infinity();
    for (const Contour& c : p.contours) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double d = std::hypot(c[i].x1, c[i].x2);
            if (d < best) {
                best = d;
                tr.wall = c.ids[i];
            }
            if (experiment == "steady" && std::abs(c[i].x1 - 1.0) < 1e-12) tr.edge.emplace_back(c.ids[i], c[i]);
        }
    }
    return tr;
}

TracerRecord trace(const FlowState& s, const Tracker& tr) {
    TracerRecord r;
    r.t = s.t();
    r.markers = s.patch.markerCount();
    r.minX2 = std::numeric_limits<double>::infinity();
    for (const Contour& c : s.patch.contours) {
        for (const CoverPoint& m : c.markers) r.minX2 = std::min(r.minX2, m.x2);
    }
    if (auto at = s.patch.find(tr.wall)) {
        const CoverPoint w = s.patch.contours[at->first][at->second];
        r.wallX1 = w.x1;
        r.wallX2 = w.x2;
    } else {
        r.wallX1 = r.wallX2 = std::numeric_limits<double>::quiet_NaN();
    }
    for (const auto& [id, p0] : tr.edge) {
        if (auto at = s.patch.find(id)) r.edgeDrift = std::max(r.edgeDrift, distance(s.patch.contours[at->first][at->second], p0));
    }
    return r;
}

bool isRectangle(const std::string& experiment) {
    return experiment == "stability" || experiment == "perimeter-growth";
}

void writeEcho(const std::string& experiment, const ExperimentConfig& cfg) {
    std::string s = "# resolved configuration\n[" + experiment + "]\n";
    const json j = toJson(cfg);
    for (const auto& [k, v] : j.items()) s += k + " = " + v.dump() + "\n";
    s += "outDir = " + cfg.outDir.string() + "\n";
    writeText(cfg.outDir / "config.echo", s);
}

// Samples written at the start and the end of a run: the velocity profile for
// the strip, the velocity gap probe for the rectangle.
void writeEndpoint(const std::string& experiment, const ExperimentConfig& cfg, const FlowState& s,
                   const QuadratureOptions& quad, bool fresh) {
    if (experiment == "steady") {
        auto out = openTable(cfg.outDir / "profile.csv", kProfileHeader, fresh);
        const auto pts = profileSamples(cfg.samples);
        const auto u = ContourVelocityEvaluator(s.patch, quad).evaluate(pts);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out << joinRow({s.t(), pts[i].x1, pts[i].x2, u[i].u1, u[i].u2, std::max(1.0 - pts[i].x1, 0.0)}) << "\n";
        }
    } else {
        auto out = openTable(cfg.outDir / "gap.csv", kGapHeader, fresh);
        const GapProbe g = velocityGapProbe(s.patch, cfg.gapSamples, cfg.rasterRes, quad);
        out << joinRow({s.t(), g.gap, g.where.x1, g.where.x2, g.symDiff}) << "\n";
    }
}

RunArtifacts simulate(const std::string& experiment, const ExperimentConfig& cfg, const RunConfig& rc,
                      FlowState state, const Tracker& tr, bool fresh) {
    const auto start = std::chrono::steady_clock::now();
    RunArtifacts arts;
    arts.config = cfg;
    fs::remove(cfg.outDir / "failure.json");

    auto series = openTable(cfg.outDir / "series.csv", kSeriesHeader, fresh);
    auto tracer = openTable(cfg.outDir / "tracer.csv", kTracerHeader, fresh);
    if (state.stepCount == 0) writeEndpoint(experiment, cfg, state, rc.quadrature, fresh);

    const auto hook = [&](const FlowState& s) {
        const DiagRecord d = diagnose(s, cfg.rasterRes, rc.quadrature);
        const TracerRecord r = trace(s, tr);
        series << joinRow({d.t, d.mass, d.impulse, d.k, d.perimeter, d.j1dist, d.wSymDiff, d.maxSpeed}) << "\n";
        tracer << joinRow({r.t, static_cast<double>(r.markers), r.wallX1, r.wallX2, r.minX2, r.edgeDrift}) << "\n";
        series.flush();
        tracer.flush();
        arts.series.push_back(d);
        arts.tracer.push_back(r);
    };
    arts.outcome = run(std::move(state), rc, hook);
    if (!arts.outcome.aborted) {
        writeCheckpoint(arts.outcome.state, rc, cfg.outDir / "final");
        writeEndpoint(experiment, cfg, arts.outcome.state, rc.quadrature, false);
    }
    arts.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return arts;
}

struct RunFiles {
    std::vector<DiagRecord> series;
    std::vector<TracerRecord> tracer;
    bool aborted = false;
    std::string reason;
};

RunFiles loadRun(const fs::path& dir) {
    RunFiles f;
    f.series = readSeries(dir / "series.csv");
    f.tracer = readTracer(dir / "tracer.csv");
    if (f.series.empty()) throw Error("empty series in " + dir.string());
    if (f.tracer.size() != f.series.size()) throw Error("series and tracer rows differ in " + dir.string());
    if (fs::exists(dir / "failure.json")) {
        f.aborted = true;
        std::ifstream in(dir / "failure.json");
        f.reason = json::parse(in).value("reason", "unknown");
    }
    return f;
}

Report startReport(const std::string& experiment, const ExperimentConfig& cfg, const RunFiles& f) {
    Report r;
    r.experiment = experiment;
    r.config = toJson(cfg);
    r.aborted = f.aborted;
    r.abortReason = f.reason;
    r.metrics["t_final"] = f.series.back().t;
    r.metrics["markers_final"] = f.tracer.back().markers;
    return r;
}

double maxRelDrift(const std::vector<DiagRecord>& s, double DiagRecord::*field) {
    const double ref = s.front().*field;
    double worst = 0.0;
    for (const DiagRecord& d : s) worst = std::max(worst, std::abs(d.*field - ref) / std::abs(ref));
    return worst;
}

void conservationChecks(Report& r, const RunFiles& f) {
    r.require("mass_drift", maxRelDrift(f.series, &DiagRecord::mass), "<=", 0.005);
    r.require("impulse_drift", maxRelDrift(f.series, &DiagRecord::impulse), "<=", 0.01);
    r.require("wsymdiff_drift", maxRelDrift(f.series, &DiagRecord::wSymDiff), "<=", 0.02);
    double vmax = 0.0;
    for (const DiagRecord& d : f.series) vmax = std::max(vmax, d.maxSpeed);
    r.require("max_speed_ratio", vmax / f.series.front().maxSpeed, "<=", 2.0);
    double wall = 0.0;
    for (const TracerRecord& t : f.tracer) wall = std::max(wall, std::isnan(t.wallX1) ? 1.0 : std::abs(t.wallX1));
    r.require("wall_point_x1", wall, "<=", 1e-6);
}

// Least-squares slope of y against t over the rows with t >= t0.
double slope(const std::vector<double>& t, const std::vector<double>& y, double t0) {
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 - 1e-9) continue;
        n += 1;
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double den = n * stt - st * st;
    return den > 0 ? (n * sty - st * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

// Start of the fitting window: t = 5 on the standard horizon, the second half
// of shorter runs.
double fitStart(double T) { return T >= 10.0 ? 5.0 : 0.5 * T; }

void addGapMetrics(Report& r, const fs::path& dir) {
    if (!fs::exists(dir / "gap.csv")) return;
    const auto rows = readRows(dir / "gap.csv", kGapHeader);
    if (rows.empty()) return;
    const double delta = rows.front()[4];
    json probes = json::array();
    for (const auto& row : rows) {
        json p;
        p["t"] = row[0];
        p["gap"] = row[1];
        p["at"] = {row[2], row[3]};
        p["symdiff"] = row[4];
        p["gap_over_sqrt_symdiff"] = row[4] > 0 ? row[1] / std::sqrt(row[4]) : 0.0;
        p["gap_over_delta_quarter"] = delta > 0 ? row[1] / std::pow(delta, 0.25) : 0.0;
        probes.push_back(p);
    }
    r.metrics["delta"] = delta;
    r.metrics["delta_quarter"] = std::pow(delta, 0.25);
    r.metrics["velocity_gap"] = probes;
    r.metrics["velocity_gap_initial"] = rows.front()[1];
}

GridField randomField(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridField f(48, 48, 4.0);
    const int boxes = 1 + static_cast<int>(u(rng) * 4);
    for (int b = 0; b < boxes; ++b) {
        const auto i0 = static_cast<std::size_t>(u(rng) * 40);
        const auto i1 = std::min<std::size_t>(i0 + 1 + static_cast<std::size_t>(u(rng) * 12), 42);
        const auto j0 = static_cast<std::size_t>(u(rng) * 48);
        const auto len = 1 + static_cast<std::size_t>(u(rng) * 47);
        const double height = 0.1 + 0.9 * u(rng);
        for (std::size_t j = 0; j < len; ++j) {
            for (std::size_t i = i0; i < i1; ++i) f.at(i, (j0 + j) % 48) += height * (0.5 + 0.5 * u(rng));
        }
    }
    return f;
}

GridField stripField(std::size_t nx, std::size_t ny, double xmax, double a, double b) {
    return GridField::fromFunction(nx, ny, xmax, [=](double x1, double) { return (x1 > a && x1 < b) ? 1.0 : 0.0; });
}

std::size_t mismatches(const GridField& a, const GridField& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) n += a.values()[i] != b.values()[i];
    return n;
}

// Star-shaped contour r(theta) = r0 (1 + sum a_k cos(k theta + phi_k)) about c.
Patch starPatch(std::mt19937_64& rng, std::size_t nodes) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const CoverPoint c{1.3 + 0.4 * u(rng), kPi * (2.0 * u(rng) - 1.0)};
    const double r0 = 0.4 + 0.4 * u(rng);
    double amp[4], phase[4];
    for (int k = 0; k < 4; ++k) {
        amp[k] = 0.07 * u(rng);
        phase[k] = kTwoPi * u(rng);
    }
    std::vector<CoverPoint> pts(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(nodes);
        double r = 1.0;
        for (int k = 0; k < 4; ++k) r += amp[k] * std::cos((k + 2) * th + phase[k]);
        pts[i] = {c.x1 + r0 * r * std::cos(th), c.x2 + r0 * r * std::sin(th)};
    }
    Patch p;
    p.contours.emplace_back(std::move(pts), 1);
    p.label = "star";
    return p;
}

}  // namespace

DiagRecord diagnose(const FlowState& state, std::size_t rasterRes, const QuadratureOptions& quad) {
    DiagRecord d;
    d.t = state.t();
    d.mass = patchArea(state.patch);
    d.impulse = patchImpulse(state.patch);
    d.k = verticalCenter(state.patch);
    d.perimeter = patchPerimeter(state.patch);
    const SymDiffResult sd = symDiffFunctionals(state.patch, rasterRes);
    d.j1dist = sd.j1;
    d.wSymDiff = sd.w;
    std::vector<CoverPoint> pts;
    for (const Contour& c : state.patch.contours) pts.insert(pts.end(), c.markers.begin(), c.markers.end());
    for (const Vec2& v : ContourVelocityEvaluator(state.patch, quad).evaluate(pts)) d.maxSpeed = std::max(d.maxSpeed, v.norm());
    return d;
}

json toJson(const ExperimentConfig& c) {
    return json{{"dt", c.dt},
                {"T", c.T},
                {"nodes0", c.nodes0},
                {"dmax", c.dmax},
                {"dmin", c.dmin},
                {"rasterRes", c.rasterRes},
                {"outputEvery", c.outputEvery},
                {"checkpointEvery", c.checkpointEvery},
                {"h", c.h},
                {"r", c.r},
                {"maxTurn", c.maxTurn},
                {"splitFloor", c.splitFloor},
                {"loopWindow", c.loopWindow},
                {"singularFactor", c.singularFactor},
                {"samples", c.samples},
                {"gapSamples", c.gapSamples}};
}

ExperimentConfig experimentConfigFromJson(const json& j) {
    ExperimentConfig c;
    try {
        c.dt = j.at("dt");
        c.T = j.at("T");
        c.nodes0 = j.at("nodes0");
        c.dmax = j.at("dmax");
        c.dmin = j.at("dmin");
        c.rasterRes = j.at("rasterRes");
        c.outputEvery = j.at("outputEvery");
        c.checkpointEvery = j.at("checkpointEvery");
        c.h = j.at("h");
        c.r = j.at("r");
        c.maxTurn = j.at("maxTurn");
        c.splitFloor = j.at("splitFloor");
        c.loopWindow = j.at("loopWindow");
        c.singularFactor = j.at("singularFactor");
        c.samples = j.at("samples");
        c.gapSamples = j.at("gapSamples");
    } catch (const json::exception& e) {
        throw Error(std::string("bad experiment config: ") + e.what());
    }
    return c;
}

void Report::require(const std::string& name, double value, const std::string& relation, double limit) {
    bool ok = false;
    if (relation == "<=") {
        ok = value <= limit;
    } else if (relation == ">=") {
        ok = value >= limit;
    } else {
        throw Error("unknown relation " + relation);
    }
    checks.push_back({name, value, relation, limit, ok && std::isfinite(value)});
}

bool Report::passed() const {
    if (aborted) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json Report::toJson() const {
    json j;
    j["schema"] = 1;
    j["experiment"] = experiment;
    j["config"] = config;
    j["metrics"] = metrics;
    json cs = json::array();
    for (const Check& c : checks) {
        // JSON has no NaN; a non-finite value is reported as null.
        json v = std::isfinite(c.value) ? json(c.value) : json(nullptr);
        cs.push_back({{"name", c.name}, {"value", v}, {"relation", c.relation}, {"limit", c.limit}, {"pass", c.pass}});
    }
    j["checks"] = cs;
    j["aborted"] = aborted;
    if (aborted) j["abort_reason"] = abortReason;
    j["passed"] = passed();
    return j;
}

void writeReport(const Report& r, const fs::path& path) { writeText(path, r.toJson().dump(2) + "\n"); }

std::vector<DiagRecord> readSeries(const fs::path& path) {
    std::vector<DiagRecord> out;
    for (const auto& row : readRows(path, kSeriesHeader)) {
        if (row.size() != 8) throw Error("series row with " + std::to_string(row.size()) + " fields");
        out.push_back({row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7]});
    }
    return out;
}

std::vector<TracerRecord> readTracer(const fs::path& path) {
    std::vector<TracerRecord> out;
    for (const auto& row : readRows(path, kTracerHeader)) {
        if (row.size() != 6) throw Error("tracer row with " + std::to_string(row.size()) + " fields");
        out.push_back({row[0], static_cast<std::size_t>(row[1]), row[2], row[3], row[4], row[5]});
    }
    return out;
}

Patch initialPatch(const std::string& experiment, const ExperimentConfig& cfg) {
    if (experiment == "steady") return makeStrip(cfg.nodes0);
    if (isRectangle(experiment)) {
        if (!(cfg.h > 0.0 && cfg.h <= 0.25)) throw ParameterRangeError("h must lie in (0, 0.25]");
        const double r = cfg.r > 0.0 ? cfg.r : cfg.h / 2.5;
        return makeRectangle(cfg.h, r, cfg.nodes0).patch;
    }
    throw ParameterRangeError("unknown experiment " + experiment);
}

RunConfig resolveRunConfig(const std::string& experiment, ExperimentConfig& cfg, const Patch& initial) {
    if (!(cfg.dt > 0.0)) throw ParameterRangeError("dt must be positive");
    if (!(cfg.T >= 0.0)) throw ParameterRangeError("T must be nonnegative");
    if (cfg.nodes0 < 64) throw ParameterRangeError("nodes0 must be at least 64");
    if (cfg.rasterRes < 128) throw ParameterRangeError("rasterRes must be at least 128");
    if (cfg.outputEvery < 1) throw ParameterRangeError("outputEvery must be at least 1");
    if (cfg.checkpointEvery < 0) throw ParameterRangeError("checkpointEvery must be nonnegative");
    if (isRectangle(experiment) && cfg.r <= 0.0) cfg.r = cfg.h / 2.5;
    if (cfg.dmax <= 0.0) {
        // The fillets carry denser markers than the straight sides, so the
        // longest initial segment can exceed perimeter / nodes0.
        double longest = 0.0;
        for (const Contour& c : initial.contours) {
            for (std::size_t i = 0; i < c.size(); ++i) longest = std::max(longest, distance(c[i], c[c.next(i)]));
        }
        cfg.dmax = std::max(patchPerimeter(initial) / static_cast<double>(cfg.nodes0), longest * (1.0 + 1e-9));
    }
    if (cfg.dmin <= 0.0) cfg.dmin = cfg.dmax / 4.0;
    if (!(cfg.dmin <= 0.5 * cfg.dmax)) throw ParameterRangeError("dmin must be at most dmax / 2");

    RunConfig rc;
    rc.dt = cfg.dt;
    rc.tEnd = cfg.T;
    rc.diagEvery = cfg.outputEvery;
    rc.checkpointEvery = cfg.checkpointEvery;
    rc.quadrature.singularFactor = cfg.singularFactor;
    rc.remesh.dmax = cfg.dmax;
    rc.remesh.dmin = cfg.dmin;
    rc.remesh.maxTurn = cfg.maxTurn;
    rc.remesh.splitFloor = cfg.splitFloor;
    rc.remesh.loopWindow = cfg.loopWindow;
    rc.outDir = cfg.outDir;
    rc.experiment = experiment;
    rc.meta = toJson(cfg);
    return rc;
}

RunArtifacts runExperiment(const std::string& experiment, ExperimentConfig cfg) {
    if (cfg.outDir.empty()) throw ParameterRangeError("output directory not set");
    Patch p = initialPatch(experiment, cfg);
    const RunConfig rc = resolveRunConfig(experiment, cfg, p);
    fs::create_directories(cfg.outDir);
    writeEcho(experiment, cfg);
    const Tracker tr = makeTracker(experiment, p);
    FlowState s;
    s.patch = std::move(p);
    s.dt = cfg.dt;
    return simulate(experiment, cfg, rc, std::move(s), tr, true);
}

RunArtifacts resumeExperiment(const fs::path& checkpoint, const fs::path& outDir, std::optional<double> newT) {
    Checkpoint ck = readCheckpoint(checkpoint);
    const std::string experiment = ck.sidecar.at("experiment");
    ExperimentConfig cfg = experimentConfigFromJson(ck.sidecar.at("config"));
    if (newT) cfg.T = *newT;
    cfg.outDir = outDir.empty() ? checkpoint.parent_path() : outDir;
    if (cfg.outDir.empty()) cfg.outDir = ".";
    const Patch initial = initialPatch(experiment, cfg);
    const RunConfig rc = resolveRunConfig(experiment, cfg, initial);
    fs::create_directories(cfg.outDir);
    writeEcho(experiment, cfg);

    const double tCut = ck.state.t() - 0.5 * cfg.dt;
    truncateRows(cfg.outDir / "series.csv", kSeriesHeader, tCut);
    truncateRows(cfg.outDir / "tracer.csv", kTracerHeader, tCut);
    truncateRows(cfg.outDir / "profile.csv", kProfileHeader, tCut);
    truncateRows(cfg.outDir / "gap.csv", kGapHeader, tCut);
    return simulate(experiment, cfg, rc, std::move(ck.state), makeTracker(experiment, initial), false);
}

std::vector<CoverPoint> profileSamples(std::size_t n) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    std::vector<CoverPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::fmod(static_cast<double>(i) * phi, 1.0);
        pts[i] = {2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n), -kPi + kTwoPi * f};
    }
    return pts;
}

GapProbe velocityGapProbe(const Patch& patch, std::size_t samples, std::size_t rasterRes,
                          const QuadratureOptions& quad) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(samples)))));
    std::vector<CoverPoint> pts;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back({2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n),
                           -kPi + kTwoPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n)});
        }
    }
    const auto u = ContourVelocityEvaluator(patch, quad).evaluate(pts);
    GapProbe g;
    g.gap = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double e = std::abs(u[i].u2 - std::max(1.0 - pts[i].x1, 0.0));
        if (e > g.gap) {
            g.gap = e;
            g.where = pts[i];
        }
    }
    g.symDiff = symDiffFunctionals(patch, rasterRes).area;
    return g;
}

Report evaluateSteady(const fs::path& dir, const ExperimentConfig& cfg) {
    const RunFiles f = loadRun(dir);
    Report r = startReport("steady", cfg, f);
    r.require("mass_drift", maxRelDrift(f.series, &DiagRecord::mass), "<=", 1e-4);
    double drift = 0.0, wall = 0.0;
    for (const TracerRecord& t : f.tracer) {
        drift = std::max(drift, t.edgeDrift);
        wall = std::max(wall, std::abs(t.wallX1));
    }
    r.require("edge_drift", drift, "<=", 1e-4);
    r.require("wall_point_x1", wall, "<=", 1e-6);
    double e1 = 0.0, e2 = 0.0;
    const auto rows = readRows(dir / "profile.csv", kProfileHeader);
    for (const auto& row : rows) {
        e1 = std::max(e1, std::abs(row[3]));
        e2 = std::max(e2, std::abs(row[4] - row[5]));
    }
    r.require("profile_u1", rows.empty() ? kNaN : e1, "<=", 1e-3);
    r.require("profile_u2", rows.empty() ? kNaN : e2, "<=", 1e-3);
    const TracerRecord& last = f.tracer.back();
    if (last.t > 0) r.metrics["wall_speed"] = (last.wallX2 - f.tracer.front().wallX2) / last.t;
    r.metrics["perimeter_initial"] = f.series.front().perimeter;
    r.metrics["perimeter_final"] = f.series.back().perimeter;
    return r;
}

Report evaluateStability(const fs::path& dir, const ExperimentConfig& cfg) {
    const RunFiles f = loadRun(dir);
    Report r = startReport("stability", cfg, f);
    const double d0 = f.series.front().j1dist;
    const double T = f.series.back().t;
    double sup = 0.0, supHalf = 0.0;
    std::vector<double> ts, js;
    for (const DiagRecord& d : f.series) {
        sup = std::max(sup, d.j1dist);
        if (d.t <= 0.5 * T + 1e-9) supHalf = std::max(supHalf, d.j1dist);
        ts.push_back(d.t);
        js.push_back(d.j1dist);
    }
    const double rho = sup / (std::sqrt(d0) + d0);
    r.metrics["h"] = cfg.h;
    r.metrics["d0"] = d0;
    r.metrics["sup_j1dist"] = sup;
    r.metrics["sup_j1dist_first_half"] = supHalf;
    r.metrics["rho"] = rho;
    // Least-squares trend of j1dist itself over the final half, for reference.
    r.metrics["j1dist_last_half_slope"] = slope(ts, js, 0.5 * T);
    r.require("rho", rho, "<=", 20.0);
    r.require("last_half_increase", supHalf > 0 ? (sup - supHalf) / supHalf : kNaN, "<=", 0.05);
    conservationChecks(r, f);
    addGapMetrics(r, dir);
    return r;
}

Report evaluateGrowth(const fs::path& dir, const ExperimentConfig& cfg) {
    const RunFiles f = loadRun(dir);
    Report r = startReport("perimeter-growth", cfg, f);
    const double T = f.series.back().t;
    const double t0 = fitStart(T);
    const double p0 = f.series.front().perimeter;
    double per = INFINITY, wall = INFINITY, kmax = -INFINITY, sep = INFINITY, drop = 0.0;
    std::vector<double> ts, ks, ps, ws;
    for (std::size_t i = 0; i < f.series.size(); ++i) {
        const DiagRecord& d = f.series[i];
        const TracerRecord& tr = f.tracer[i];
        if (std::abs(tr.t - d.t) > 1e-9) throw Error("series and tracer times differ");
        ts.push_back(d.t);
        ks.push_back(d.k);
        ps.push_back(d.perimeter);
        ws.push_back(tr.wallX2);
        if (i > 0 && d.t >= 2.0) drop = std::max(drop, f.series[i - 1].perimeter - d.perimeter);
        if (d.t < t0 - 1e-9) continue;
        per = std::min(per, (d.perimeter - p0) / d.t);
        wall = std::min(wall, tr.wallX2 / d.t);
        kmax = std::max(kmax, d.k / d.t);
        sep = std::min(sep, (tr.wallX2 - d.k) / d.t);
    }
    const double kSlope = slope(ts, ks, t0);
    const double wSlope = slope(ts, ws, t0);
    r.metrics["h"] = cfg.h;
    r.metrics["fit_start"] = t0;
    r.metrics["perimeter_initial"] = p0;
    r.metrics["perimeter_final"] = f.series.back().perimeter;
    r.metrics["perimeter_slope"] = slope(ts, ps, t0);
    r.metrics["k_slope"] = kSlope;
    r.metrics["wall_slope"] = wSlope;
    r.metrics["wall_height_final"] = f.tracer.back().wallX2;
    r.metrics["lowest_marker_final"] = f.tracer.back().minX2;
    r.require("perimeter_increase_over_t", per, ">=", 0.25);
    r.require("wall_height_over_t", wall, ">=", 0.5);
    r.require("k_over_t", kmax, "<=", 0.75);
    r.require("wall_minus_k_over_t", sep, ">=", 0.25);
    r.require("k_slope_low", kSlope, ">=", 0.4);
    r.require("k_slope_high", kSlope, "<=", 0.6);
    r.require("wall_slope_low", wSlope, ">=", 0.9);
    r.require("wall_slope_high", wSlope, "<=", 1.1);
    r.require("perimeter_drop_after_t2", drop, "<=", 0.0);
    conservationChecks(r, f);
    addGapMetrics(r, dir);
    return r;
}

Report evaluateRun(const std::string& experiment, const fs::path& dir, const ExperimentConfig& cfg) {
    if (experiment == "steady") return evaluateSteady(dir, cfg);
    if (experiment == "stability") return evaluateStability(dir, cfg);
    if (experiment == "perimeter-growth") return evaluateGrowth(dir, cfg);
    throw ParameterRangeError("unknown experiment " + experiment);
}

Report compareStability(const std::vector<Report>& runs) {
    Report r;
    r.experiment = "stability-sweep";
    json rows = json::array();
    double worstRatio = 1.0;
    double worstGapRise = -INFINITY;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const json& m = runs[i].metrics;
        rows.push_back({{"h", m.value("h", kNaN)},
                        {"rho", m.value("rho", kNaN)},
                        {"velocity_gap_initial", m.value("velocity_gap_initial", kNaN)},
                        {"passed", runs[i].passed()}});
        r.aborted = r.aborted || runs[i].aborted;
        if (i == 0) continue;
        const double a = runs[i - 1].metrics.value("rho", kNaN), b = m.value("rho", kNaN);
        worstRatio = std::max(worstRatio, std::max(a / b, b / a));
        worstGapRise = std::max(worstGapRise, m.value("velocity_gap_initial", kNaN) -
                                                  runs[i - 1].metrics.value("velocity_gap_initial", kNaN));
    }
    r.metrics["runs"] = rows;
    if (runs.size() > 1) {
        r.require("rho_neighbour_ratio", worstRatio, "<=", 3.0);
        r.require("gap_increase_as_h_shrinks", worstGapRise, "<=", 0.0);
    }
    for (const Report& run : runs) r.require("run_h_" + g12(run.metrics.value("h", kNaN)), run.passed() ? 1 : 0, ">=", 1);
    return r;
}

Report rearrangementSuite(std::uint64_t seed, std::size_t cases) {
    Report r;
    r.experiment = "rearrange-test";
    r.config = {{"seed", seed}, {"cases", cases}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    double mpWorst = 0.0, nonexpWorst = -INFINITY, massWorst = 0.0, impulseRise = -INFINITY, levelWorst = 0.0;
    std::size_t commuteBad = 0, idemBad = 0;
    const StripProfile g = StripProfile::indicator(1.0);
    for (std::size_t c = 0; c < cases; ++c) {
        const GridField f = randomField(rng);
        const GridField fs = rearrange(f);
        const auto mp = mpGap(f);
        if (mp.rhs > 0) mpWorst = std::max(mpWorst, mp.lhs / mp.rhs);
        else if (mp.lhs > 0) mpWorst = INFINITY;
        const auto ne = nonexpansivityCheck(f, g);
        nonexpWorst = std::max(nonexpWorst, (ne.lhs - ne.rhs) / (f.cellArea() * g.heightBound()));
        massWorst = std::max(massWorst, std::abs(mass(fs) - mass(f)) / mass(f));
        impulseRise = std::max(impulseRise, (impulse(fs) - impulse(f)) / impulse(f));
        const double alpha = f.maxValue() * (0.05 + 0.9 * u(rng));
        commuteBad += mismatches(rearrange(cutoff(f, alpha)), cutoff(fs, alpha));
        idemBad += mismatches(rearrange(fs), fs);
        // 32 geometric levels between the smallest positive value and the max.
        double lo = f.maxValue();
        for (double v : f.values()) {
            if (v > 0) lo = std::min(lo, v);
        }
        for (int k = 0; k < 32; ++k) {
            const double a = lo * std::pow(f.maxValue() / lo, k / 31.0) * (1.0 - 1e-9);
            levelWorst = std::max(levelWorst, std::abs(levelMeasure(fs, a) - levelMeasure(f, a)) / f.cellArea());
        }
    }
    r.require("mp_lhs_over_rhs", mpWorst, "<=", 1.05);
    r.require("nonexpansivity_excess_cells", nonexpWorst, "<=", 1.0);
    r.require("mass_change", massWorst, "<=", 1e-12);
    r.require("impulse_rise", impulseRise, "<=", 1e-12);
    r.require("cutoff_commutation_mismatches", static_cast<double>(commuteBad), "<=", 0);
    r.require("idempotence_mismatches", static_cast<double>(idemBad), "<=", 0);
    r.require("level_measure_cells", levelWorst, "<=", 1.0);

    // The translated strip saturates the constant: lhs = rhs = 16 pi^2.
    const auto strip = mpGap(stripField(64, 32, 4.0, 1.0, 2.0));
    const double sat = 16.0 * kPi * kPi;
    r.metrics["strip_lhs"] = strip.lhs;
    r.metrics["strip_rhs"] = strip.rhs;
    r.require("strip_lhs_rel_error", std::abs(strip.lhs / sat - 1.0), "<=", 0.02);
    r.require("strip_rhs_rel_error", std::abs(strip.rhs / sat - 1.0), "<=", 0.02);

    // f = (1/n) sum_{i<n} 1_{A_i} with nested strips; its sup is (n-1)/n, so
    // the bound reads ||f - f*||^2 <= 8 pi (n-1)/n (h(f) - h(f*)).
    const int n = 4;
    double simpleWorst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        GridField f(64, 16, 4.0);
        int lo = 1 + static_cast<int>(u(rng) * 24), hi = lo + 4 + static_cast<int>(u(rng) * 30);
        for (int i = 1; i < n; ++i) {
            for (int col = lo; col < hi; ++col) {
                for (std::size_t j = 0; j < f.ny(); ++j) f.at(col, j) += 1.0 / n;
            }
            const int width = hi - lo;
            if (width <= 2) break;
            lo += static_cast<int>(u(rng) * (width / 2));
            hi = std::max(lo + 1, hi - static_cast<int>(u(rng) * (width / 2)));
        }
        const auto mp = mpGap(f);
        const double gap = mp.rhs / (8.0 * kPi * f.maxValue());
        const double bound = 8.0 * kPi * (n - 1.0) / n * gap;
        if (bound > 0) simpleWorst = std::max(simpleWorst, mp.lhs / bound);
    }
    r.require("simple_function_lhs_over_bound", simpleWorst, "<=", 1.05);
    return r;
}

Report kernelSuite(std::uint64_t seed, const fs::path& outDir) {
    Report r;
    r.experiment = "kernel-table";
    r.config = {{"seed", seed}};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    r.require("gammaS_0_pi", std::abs(gammaS({0.0, kPi}) + std::log(2.0) * kInv4Pi), "<=", 1e-15);
    r.require("kernelS_0_pi", kernelS({0.0, kPi}).norm(), "<=", 1e-15);
    double cothErr = 0.0;
    for (double x1 : {0.05, 0.5, 1.0, 2.0, 5.0}) {
        const Vec2 k = kernelS({x1, 0.0});
        const double ref = -kInv4Pi / std::tanh(0.5 * x1);
        cothErr = std::max({cothErr, std::abs(k.u1), std::abs(k.u2 - ref) / std::abs(ref)});
    }
    r.require("kernelS_axis_coth", cothErr, "<=", 1e-13);
    r.require("kernelS_far_limit", std::abs(kernelS({20.0, 0.7}).u2 + kInv4Pi), "<=", 1e-8);
    {
        // cosh 10 - cos 0.3 = e^10/2 (1 - 2 cos 0.3 e^-10 + e^-20)
        const double exact = -kInv4Pi * (10.0 - std::log(2.0) + std::log1p(-2.0 * std::cos(0.3) * std::exp(-10.0) + std::exp(-20.0)));
        const double g = gammaS({10.0, 0.3});
        r.require("gammaS_far_value", std::abs(g - exact), "<=", 1e-12);
        r.metrics["gammaS_far_leading_order_deviation"] = std::abs(g + (10.0 - std::log(2.0)) * kInv4Pi);
    }

    double even = 0.0, wallG = 0.0, wallK = 0.0, srcG = 0.0, srcK = 0.0, fdS = 0.0, fdH = 0.0, c0 = 0.0;
    const double step = 1e-5;
    for (int s = 0; s < 10000; ++s) {
        const CoverPoint x{3.0 * u(rng), kPi * (2.0 * u(rng) - 1.0)};
        const CoverPoint y{3.0 * u(rng), kPi * (2.0 * u(rng) - 1.0)};
        const double d = wrappedDistance(x, y);
        if (d < 1e-6) continue;
        const Vec2 k = kernelHalf(x, y);
        c0 = std::max(c0, k.norm() * d);
        if (s >= 1000) continue;
        const CoverPoint dx = x - y;
        even = std::max(even, std::abs(gammaS(dx) - gammaS({-dx.x1, dx.x2})) + std::abs(gammaS(dx) - gammaS({dx.x1, -dx.x2})));
        wallG = std::max(wallG, std::abs(greenHalf({0.0, x.x2}, y)));
        wallK = std::max(wallK, std::abs(kernelHalf({0.0, x.x2}, y).u1));
        srcG = std::max(srcG, std::abs(greenHalf(x, {0.0, y.x2})));
        srcK = std::max(srcK, kernelHalf(x, {0.0, y.x2}).norm());
        if (d < 0.2 || x.x1 < 2 * step) continue;
        const auto perp = [&](auto&& fn) {
            const double d1 = (fn({x.x1 + step, x.x2}) - fn({x.x1 - step, x.x2})) / (2 * step);
            const double d2 = (fn({x.x1, x.x2 + step}) - fn({x.x1, x.x2 - step})) / (2 * step);
            return Vec2{-d2, d1};
        };
        fdS = std::max(fdS, (kernelS(dx) - perp([&](CoverPoint p) { return gammaS(p - y); })).norm());
        fdH = std::max(fdH, (k - perp([&](CoverPoint p) { return greenHalf(p, y); })).norm());
    }
    r.require("gammaS_evenness", even, "<=", 1e-14);
    r.require("greenHalf_wall", wallG, "<=", 1e-12);
    r.require("kernelHalf_wall_u1", wallK, "<=", 1e-14);
    r.require("greenHalf_wall_source", srcG, "<=", 1e-12);
    r.require("kernelHalf_wall_source", srcK, "<=", 1e-12);
    r.require("kernelS_gradient", fdS, "<=", 1e-6);
    r.require("kernelHalf_gradient", fdH, "<=", 1e-6);
    r.metrics["kernel_distance_constant"] = c0;

    // Contour velocity: wall impermeability and periodicity on the rectangle.
    {
        const Patch rect = makeRectangle(0.05, 0.02, 512).patch;
        const ContourVelocityEvaluator ev(rect);
        double wall = 0.0, period = 0.0;
        for (int s = 0; s < 20; ++s) {
            const double x2 = kPi * (2.0 * u(rng) - 1.0);
            wall = std::max(wall, std::abs(ev({0.0, x2}).u1));
            const CoverPoint p{2.0 * u(rng), x2};
            period = std::max(period, (ev(p) - ev({p.x1, p.x2 + kTwoPi})).norm());
        }
        r.require("contour_wall_u1", wall, "<=", 1e-12);
        r.require("contour_periodicity", period, "<=", 1e-12);
    }

    // Contour velocity against the gridded oracle on random star patches.
    const std::size_t nodes = 2048;
    const double tol = std::max(5e-3, 10.0 / static_cast<double>(nodes));
    double oracle = 0.0;
    for (int s = 0; s < 5; ++s) {
        const Patch star = starPatch(rng, nodes);
        const GridField w = rasterizePatch(star, 512, 512, 4.0);
        const ContourVelocityEvaluator ev(star);
        for (int q = 0; q < 20; ++q) {
            const CoverPoint x{3.0 * u(rng), kPi * (2.0 * u(rng) - 1.0)};
            oracle = std::max(oracle, (ev(x) - velocityFromGrid(w, x)).norm());
        }
    }
    r.metrics["oracle_tolerance"] = tol;
    r.require("contour_vs_grid", oracle, "<=", tol);

    if (!outDir.empty()) {
        fs::create_directories(outDir);
        std::ofstream out(outDir / "kernel_table.csv");
        out << "x1,x2,gamma_s,k_s1,k_s2\n";
        for (int i = 0; i <= 12; ++i) {
            for (int j = -8; j <= 8; ++j) {
                const CoverPoint d{0.25 * i, kPi * j / 8.0};
                if (coshMinusCos(d.x1, d.x2) < 1e-300) continue;
                const Vec2 k = kernelS(d);
                out << joinRow({d.x1, d.x2, gammaS(d), k.u1, k.u2}) << "\n";
            }
        }
    }
    return r;
}

}  // namespace vpatch
