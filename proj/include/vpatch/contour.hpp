#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpatch/types.hpp"

namespace vpatch {

using MarkerId = std::int64_t;

/// Closed marker polygon in the cover.  The last marker connects back to the
/// first.  Each marker carries a stable id so that remeshing can insert and
/// delete nodes while individual Lagrangian points stay traceable.
struct Contour {
    std::vector<CoverPoint> markers;
    std::vector<MarkerId> ids;
    int strength = 1;
    MarkerId nextId = 0;

    Contour() = default;
    Contour(std::vector<CoverPoint> pts, int s);

    std::size_t size() const { return markers.size(); }
    const CoverPoint& operator[](std::size_t i) const { return markers[i]; }
    std::size_t next(std::size_t i) const { return i + 1 == markers.size() ? 0 : i + 1; }
    std::size_t prev(std::size_t i) const { return i == 0 ? markers.size() - 1 : i - 1; }

    std::optional<std::size_t> indexOf(MarkerId id) const;
    void translate(CoverPoint shift);
};

struct Patch {
    std::vector<Contour> contours;
    std::string label;
    /// Markers the remesher must never delete (e.g. the seeded wall point).
    /// They also act as corners: segments touching them are split linearly.
    std::vector<MarkerId> pinned;

    std::size_t markerCount() const;
    bool isPinned(MarkerId id) const;
    /// Locate a marker by id; returns (contour index, marker index).
    std::optional<std::pair<std::size_t, std::size_t>> find(MarkerId id) const;
};

}  // namespace vpatch
