#pragma once

#include <cstddef>
#include <vector>

#include "sirenpose/keypoints.hpp"

namespace sirenpose {

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    bool operator==(const Edge&) const = default;
};

// Edge set E carrying the geometric prior. Edges are stored with i < j; the
// constructor reorders reversed pairs.
class SkeletonGraph {
public:
    SkeletonGraph() = default;
    // Throws ConfigError on self-loops, duplicates, length-count mismatch, or
    // negative/non-finite reference lengths.
    SkeletonGraph(std::vector<Edge> edges, std::vector<double> reference_lengths);

    // Reference lengths measured on `reference`.
    static SkeletonGraph from_reference(std::vector<Edge> edges, const KeypointSet& reference);
    // Edges (0,1), (1,2), ..., (m-2, m-1).
    static std::vector<Edge> chain_edges(std::size_t m);

    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<double>& reference_lengths() const { return reference_lengths_; }
    std::size_t size() const { return edges_.size(); }

    // Throws BoundsError if any index is >= m.
    void check_indices(std::size_t m) const;

    bool operator==(const SkeletonGraph&) const = default;

private:
    std::vector<Edge> edges_;
    std::vector<double> reference_lengths_;
};

// Near a match, sin(w0 x) ~ w0 x, so the geometric term behaves like
// lambda_geo * w0^2 * |bone-vector error|^2. 1/w0^2 gives it the same
// curvature as the position term at the default w0 = 30.
inline constexpr double kDefaultLambdaGeo = 1.0 / 900.0;

struct LossConfig {
    double omega0 = 30.0;
    double lambda_geo = kDefaultLambdaGeo;
    double lambda_sp = 1.0;

    // Throws ConfigError unless all fields are finite, omega0 > 0 and the
    // weights are non-negative.
    void validate() const;
    bool operator==(const LossConfig&) const = default;
};

struct SirenPoseTerms {
    double position = 0.0;
    double geometric = 0.0;
};

struct LossBreakdown {
    double position = 0.0;
    double geometric = 0.0;
    double recon = 0.0;
    double total = 0.0;
};

// Euclidean distance between keypoints i and j.
double keypoint_distance(const KeypointSet& a, std::size_t i, std::size_t j);

// position  = sum_i |pred_i - gt_i|^2
// geometric = sum_{(i,j) in E} |sin(w0 (pred_i - pred_j)) - sin(w0 (gt_i - gt_j))|^2
// with sin applied per coordinate. `visible` (empty = all) drops hidden
// keypoints and every edge touching one.
SirenPoseTerms sirenpose_loss(const KeypointSet& pred, const KeypointSet& gt, const SkeletonGraph& graph,
                              const LossConfig& cfg, const std::vector<bool>& visible = {});

// d(position + lambda_geo * geometric) / d pred, an M x D matrix.
Coords sirenpose_grad(const KeypointSet& pred, const KeypointSet& gt, const SkeletonGraph& graph,
                      const LossConfig& cfg, const std::vector<bool>& visible = {});

// Sum of squared coordinate differences over all (visible) frames and keypoints.
double recon_loss(const Sequence& pred, const Sequence& target, const SequenceMask& masks = {});
std::vector<Coords> recon_grad(const Sequence& pred, const Sequence& target, const SequenceMask& masks = {});

// L = recon + lambda_sp * (position + lambda_geo * geometric), each term summed
// over frames.
LossBreakdown total_loss(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                         const LossConfig& cfg, const SequenceMask& masks = {});

// dL/d pred for every frame.
std::vector<Coords> total_loss_grad(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                                    const LossConfig& cfg, const SequenceMask& masks = {});

}  // namespace sirenpose
