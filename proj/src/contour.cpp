#include "vpatch/contour.hpp"

#include <algorithm>

namespace vpatch {

Contour::Contour(std::vector<CoverPoint> pts, int s) : markers(std::move(pts)), strength(s) {
    ids.resize(markers.size());
    for (std::size_t i = 0; i < markers.size(); ++i) ids[i] = static_cast<MarkerId>(i);
    nextId = static_cast<MarkerId>(markers.size());
}

std::optional<std::size_t> Contour::indexOf(MarkerId id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
}

void Contour::translate(CoverPoint shift) {
    for (auto& m : markers) m = m + shift;
}

std::size_t Patch::markerCount() const {
    std::size_t n = 0;
    for (const auto& c : contours) n += c.size();
    return n;
}

bool Patch::isPinned(MarkerId id) const {
    return std::find(pinned.begin(), pinned.end(), id) != pinned.end();
}

std::optional<std::pair<std::size_t, std::size_t>> Patch::find(MarkerId id) const {
    for (std::size_t c = 0; c < contours.size(); ++c) {
        if (auto i = contours[c].indexOf(id)) return std::make_pair(c, *i);
    }
    return std::nullopt;
}

}  // namespace vpatch
