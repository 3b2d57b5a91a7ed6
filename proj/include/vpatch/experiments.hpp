#pragma once

// Experiment drivers on top of the solver: per-output diagnostics, the steady
// strip, the rounded-rectangle runs (J1 stability, perimeter growth), velocity
// gap probes and the kernel / rearrangement property suites.
//
// Every run writes series.csv and tracer.csv into its output directory.  The
// pass flags of a rectangle or strip report are computed from those files (and
// profile.csv for the strip) only, so they can be re-derived externally.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpatch/dynamics.hpp"

namespace vpatch {

struct DiagRecord {
    double t = 0.0;
    double mass = 0.0;
    double impulse = 0.0;
    double k = 0.0;
    double perimeter = 0.0;
    double j1dist = 0.0;
    double wSymDiff = 0.0;
    double maxSpeed = 0.0;
};

/// Marker-level observables recorded next to each DiagRecord.
struct TracerRecord {
    double t = 0.0;
    std::size_t markers = 0;
    double wallX1 = 0.0;     ///< the marker seeded closest to (0, 0)
    double wallX2 = 0.0;
    double minX2 = 0.0;      ///< lowest marker, the natural witness for a low boundary point
    double edgeDrift = 0.0;  ///< strip only: largest displacement of the x1 = 1 side
};

/// mass, impulse and k from polygon moments in the cover, perimeter in the
/// cover, j1dist and wSymDiff from the symmetric difference with the strip
/// sampled on rasterRes rows, maxSpeed over all markers.
DiagRecord diagnose(const FlowState& state, std::size_t rasterRes, const QuadratureOptions& quad = {});

struct ExperimentConfig {
    double dt = 0.05;
    double T = 20.0;
    std::size_t nodes0 = 512;
    double dmax = 0.0;  ///< 0: max(perimeter / nodes0, longest initial segment)
    double dmin = 0.0;  ///< 0: dmax / 4
    std::size_t rasterRes = 16384;
    std::int64_t outputEvery = 10;
    std::int64_t checkpointEvery = 10;  ///< 0 disables intermediate checkpoints
    double h = 0.05;
    double r = 0.0;  ///< fillet radius; 0 means h / 2.5
    double maxTurn = 0.35;
    double splitFloor = 16.0;
    std::size_t loopWindow = 8;
    double singularFactor = 3.0;
    std::size_t samples = 20;      ///< strip velocity profile points
    std::size_t gapSamples = 576;  ///< lattice points of the velocity gap probe
    std::filesystem::path outDir;
};

nlohmann::json toJson(const ExperimentConfig& c);
ExperimentConfig experimentConfigFromJson(const nlohmann::json& j);

struct Check {
    std::string name;
    double value = 0.0;
    std::string relation;  ///< "<=" or ">="
    double limit = 0.0;
    bool pass = false;
};

struct Report {
    std::string experiment;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<Check> checks;
    bool aborted = false;
    std::string abortReason;

    void require(const std::string& name, double value, const std::string& relation, double limit);
    bool passed() const;
    /// {schema: 1, experiment, config, metrics, checks, aborted, passed}
    nlohmann::json toJson() const;
};

void writeReport(const Report& r, const std::filesystem::path& path);

// series.csv: t,mass,impulse,k,perimeter,j1dist,wsymdiff,maxspeed
// tracer.csv: t,markers,wall_x1,wall_x2,min_x2,edge_drift
// Values carry 12 significant digits.
std::vector<DiagRecord> readSeries(const std::filesystem::path& path);
std::vector<TracerRecord> readTracer(const std::filesystem::path& path);

/// Initial patch of an experiment: "steady" is the strip, "stability" and
/// "perimeter-growth" the rounded rectangle.
Patch initialPatch(const std::string& experiment, const ExperimentConfig& cfg);

/// Fills the derived spacing bounds and fillet radius, and builds the solver
/// configuration whose meta block is the resolved experiment config.
RunConfig resolveRunConfig(const std::string& experiment, ExperimentConfig& cfg, const Patch& initial);

struct RunArtifacts {
    ExperimentConfig config;  ///< resolved
    RunOutcome outcome;
    std::vector<DiagRecord> series;
    std::vector<TracerRecord> tracer;
    double seconds = 0.0;
};

/// Runs from t = 0, writing config.echo, series.csv, tracer.csv, checkpoints
/// and a final checkpoint into cfg.outDir (created if needed).
RunArtifacts runExperiment(const std::string& experiment, ExperimentConfig cfg);

/// Continues a run from a checkpoint.  Rows at or after the checkpoint time are
/// dropped from series.csv and tracer.csv in outDir before continuing, so an
/// interrupted run resumes to the same files.  newT extends the horizon.
RunArtifacts resumeExperiment(const std::filesystem::path& checkpoint,
                              const std::filesystem::path& outDir,
                              std::optional<double> newT = std::nullopt);

/// Sample points (x1, x2) for velocity profiles: x1 spread over (0, 2), x2
/// from a fixed low-discrepancy sequence.
std::vector<CoverPoint> profileSamples(std::size_t n);

struct GapProbe {
    double gap = 0.0;        ///< sup |u2 - ubar2| over the samples
    CoverPoint where;
    double symDiff = 0.0;    ///< |Q(patch) sym-diff strip|
};

/// Samples a lattice of about `samples` points in (0, 2) x [-pi, pi).
GapProbe velocityGapProbe(const Patch& patch, std::size_t samples, std::size_t rasterRes = 4096,
                          const QuadratureOptions& quad = {});

// Evaluation of finished runs.  They read only the files in dir.
Report evaluateSteady(const std::filesystem::path& dir, const ExperimentConfig& cfg);
Report evaluateStability(const std::filesystem::path& dir, const ExperimentConfig& cfg);
Report evaluateGrowth(const std::filesystem::path& dir, const ExperimentConfig& cfg);
/// Dispatches on the experiment name stored in a checkpoint.
Report evaluateRun(const std::string& experiment, const std::filesystem::path& dir,
                   const ExperimentConfig& cfg);

/// Comparison across a sweep of stability runs, ordered by decreasing h:
/// neighbouring stability ratios within a factor 3 and the initial velocity
/// gap decreasing with h.
Report compareStability(const std::vector<Report>& runs);

/// Random-field property suite for the rearrangement.  Writes nothing.
Report rearrangementSuite(std::uint64_t seed, std::size_t cases);

/// Closed-form values, wall cancellations, gradient consistency and the
/// contour-versus-grid oracle.  Writes kernel_table.csv into outDir when it is
/// not empty.
Report kernelSuite(std::uint64_t seed, const std::filesystem::path& outDir);

}  // namespace vpatch
