#include "sirenpose/keypoints.hpp"

#include <string>

#include "sirenpose/errors.hpp"

namespace sirenpose {

KeypointSet::KeypointSet(Coords coords) : coords_(std::move(coords)) {
    if (coords_.rows() < 1) {
        throw ShapeError("keypoint set needs at least one keypoint");
    }
    if (coords_.cols() < 1 || coords_.cols() > 3) {
        throw ShapeError("keypoint dimension must be 1, 2 or 3, got " + std::to_string(coords_.cols()));
    }
    if (!coords_.allFinite()) {
        throw NumericError("keypoint coordinates must be finite");
    }
}

KeypointSet KeypointSet::zeros(std::size_t m, std::size_t d) {
    return KeypointSet(Coords::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d)));
}

SequenceMask all_visible(std::size_t t, std::size_t m) {
    return SequenceMask(t, std::vector<bool>(m, true));
}

void check_same_shape(const Sequence& a, const Sequence& b) {
    if (a.size() != b.size()) {
        throw ShapeError("sequence lengths differ: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    if (a.empty()) return;
    const std::size_t m = a.front().m();
    const std::size_t d = a.front().d();
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].m() != m || a[t].d() != d || b[t].m() != m || b[t].d() != d) {
            throw ShapeError("frame " + std::to_string(t) + " has a mismatched keypoint shape");
        }
    }
}

void check_mask(const SequenceMask& mask, std::size_t t, std::size_t m) {
    if (mask.empty()) return;
    if (mask.size() != t) {
        throw ShapeError("mask has " + std::to_string(mask.size()) + " frames, expected " + std::to_string(t));
    }
    for (const auto& row : mask) {
        if (row.size() != m) {
            throw ShapeError("mask row has " + std::to_string(row.size()) + " entries, expected " +
                             std::to_string(m));
        }
    }
}

}  // namespace sirenpose
