#pragma once

#include "sirenpose/keypoints.hpp"
#include "sirenpose/loss.hpp"

namespace sirenpose {

struct MetricReport {
    double mse = 0.0;                   // scene units^2
    double epe = 0.0;                   // scene units
    double temporal_consistency = 1.0;  // (0, 1], 1 = zero acceleration
    double geometric_accuracy = 1.0;    // [0, 1], 1 = reference bone lengths
    double mse_score = 100.0;
    double epe_score = 100.0;

    bool operator==(const MetricReport&) const = default;
};

// Mean per-keypoint Euclidean error over visible keypoints.
double epe(const Sequence& pred, const Sequence& gt, const SequenceMask& masks = {});

// Mean squared error per coordinate over visible keypoints.
double mse(const Sequence& pred, const Sequence& gt, const SequenceMask& masks = {});

// exp(-mean_{t,i} |k(t+1) - 2k(t) + k(t-1)|). Needs T >= 3.
double temporal_consistency(const Sequence& frames);

// clamp(1 - mean_{t,e} |d_e(t) - ref_e| / ref_e, 0, 1).
double geometric_accuracy(const Sequence& frames, const SkeletonGraph& graph);

// 100 * exp(-value) for value >= 0.
double score(double value);

MetricReport evaluate(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                      const SequenceMask& masks = {});

}  // namespace sirenpose
