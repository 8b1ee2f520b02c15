#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace sirenpose {

// Row i holds keypoint i; row-major so that flat index i*D + d addresses (i, d).
using Coords = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// M keypoints in D-dimensional scene units for a single frame.
class KeypointSet {
public:
    KeypointSet() = default;
    // Throws ShapeError unless M >= 1 and D in {1,2,3}; NumericError on non-finite input.
    explicit KeypointSet(Coords coords);

    static KeypointSet zeros(std::size_t m, std::size_t d);

    std::size_t m() const { return static_cast<std::size_t>(coords_.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(coords_.cols()); }

    const Coords& coords() const { return coords_; }
    double operator()(std::size_t i, std::size_t dim) const {
        return coords_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(dim));
    }

    bool operator==(const KeypointSet& other) const {
        return coords_.rows() == other.coords_.rows() && coords_.cols() == other.coords_.cols() &&
               coords_ == other.coords_;
    }

private:
    Coords coords_;
};

using Sequence = std::vector<KeypointSet>;

// masks[t][i] is true when keypoint i is visible in frame t.
using SequenceMask = std::vector<std::vector<bool>>;

SequenceMask all_visible(std::size_t t, std::size_t m);

// Throws ShapeError if the frames do not share one (M, D) shape, or if the
// two sequences differ in length or shape.
void check_same_shape(const Sequence& a, const Sequence& b);
// Empty mask means "all visible"; otherwise it must be T x M.
void check_mask(const SequenceMask& mask, std::size_t t, std::size_t m);

inline bool visible(const SequenceMask& mask, std::size_t t, std::size_t i) {
    return mask.empty() || mask[t][i];
}

}  // namespace sirenpose
