#pragma once

// Lagrangian contour dynamics: classical RK4 on the markers of every contour,
// followed by remeshing.  Time is always stepCount * dt so that resumed runs
// reproduce the uninterrupted series bit for bit.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <json.hpp>

#include "vpatch/biot_savart.hpp"
#include "vpatch/contour.hpp"

namespace vpatch {

struct FlowState {
    Patch patch;
    std::int64_t stepCount = 0;
    double dt = 0.0;
    double t() const { return static_cast<double>(stepCount) * dt; }
};

struct RemeshOptions {
    bool enabled = true;
    double dmax = 0.0;  ///< split segments longer than this
    double dmin = 0.0;  ///< thin runs of >= 3 segments shorter than this
    double areaTolerance = 1e-4;  ///< relative area change allowed per remesh
    /// Segments whose end nodes turn by more than this (radians) are split
    /// even below dmax, down to length dmax / splitFloor.  Nodes turning by
    /// more than half of it are never deleted.
    double maxTurn = 0.35;
    double splitFloor = 16.0;
    /// Crossings between segments at most this many nodes apart are sub-grid
    /// folds; the loop is cut at the crossing point (0 disables).
    std::size_t loopWindow = 8;
};

struct RemeshStats {
    std::size_t inserted = 0;
    std::size_t deleted = 0;
    std::size_t loopsCut = 0;
};

/// Catmull-Rom midpoint insertion (linear next to sharp turns),
/// alternate-node deletion and removal of sub-grid loops.  Pinned
/// markers are never deleted; new markers get fresh ids.  Throws
/// NumericalAbort("area_distortion") when the patch area moves by more than
/// the tolerance.
RemeshStats remesh(Patch& patch, const RemeshOptions& opts);

/// One RK4 step.  Throws NumericalAbort on non-finite or excessive velocity.
void rk4Step(FlowState& state, const QuadratureOptions& quad, double maxSpeed);

struct RunConfig {
    double dt = 0.05;
    double tEnd = 20.0;
    std::int64_t diagEvery = 10;        ///< steps between diagnostic callbacks
    std::int64_t checkpointEvery = 0;   ///< steps between checkpoints (0: none)
    double maxSpeed = 100.0;
    bool checkIntersections = true;
    QuadratureOptions quadrature;
    RemeshOptions remesh;
    std::filesystem::path outDir;       ///< checkpoints and failure manifest go here
    std::string experiment;
    nlohmann::json meta;                ///< resolved configuration, stored with checkpoints
};

struct RunOutcome {
    FlowState state;
    bool aborted = false;
    std::string reason;
    std::string message;
};

using DiagnosticHook = std::function<void(const FlowState&)>;

/// Advances until t >= tEnd.  The hook is called on the incoming state and
/// after every diagEvery steps.  A NumericalAbort stops the run, writes
/// failure.json (and the offending state) to outDir and is reported in the
/// outcome rather than thrown.
RunOutcome run(FlowState state, const RunConfig& cfg, const DiagnosticHook& hook);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string configHash(const nlohmann::json& config);

struct Checkpoint {
    FlowState state;
    nlohmann::json sidecar;  ///< {t, stepCount, dt, cfgHash, experiment, config}
};

/// Writes <stem>.csv (contours) and <stem>.json (sidecar); returns the json path.
std::filesystem::path writeCheckpoint(const FlowState& s, const RunConfig& cfg,
                                      const std::filesystem::path& stem);
/// Reads a checkpoint from either of its two files.  Throws Error when the
/// stored hash does not match the stored config.
Checkpoint readCheckpoint(const std::filesystem::path& path);

}  // namespace vpatch
