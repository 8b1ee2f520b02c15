#include "sirenpose/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sirenpose/errors.hpp"

namespace sirenpose {

namespace {

void check_inputs(const Sequence& pred, const Sequence& gt, const SequenceMask& masks) {
    check_same_shape(pred, gt);
    if (pred.empty()) throw EmptyInputError("metric over an empty sequence");
    check_mask(masks, pred.size(), pred.front().m());
}

}  // namespace

double epe(const Sequence& pred, const Sequence& gt, const SequenceMask& masks) {
    check_inputs(pred, gt, masks);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        for (std::size_t i = 0; i < pred[t].m(); ++i) {
            if (!visible(masks, t, i)) continue;
            const auto row = static_cast<Eigen::Index>(i);
            sum += (pred[t].coords().row(row) - gt[t].coords().row(row)).norm();
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double mse(const Sequence& pred, const Sequence& gt, const SequenceMask& masks) {
    check_inputs(pred, gt, masks);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        for (std::size_t i = 0; i < pred[t].m(); ++i) {
            if (!visible(masks, t, i)) continue;
            const auto row = static_cast<Eigen::Index>(i);
            sum += (pred[t].coords().row(row) - gt[t].coords().row(row)).squaredNorm();
            count += pred[t].d();
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double temporal_consistency(const Sequence& frames) {
    if (frames.size() < 3) {
        throw InsufficientFramesError("temporal consistency needs at least 3 frames");
    }
    check_same_shape(frames, frames);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 1; t + 1 < frames.size(); ++t) {
        const Coords accel = frames[t + 1].coords() - 2.0 * frames[t].coords() + frames[t - 1].coords();
        sum += accel.rowwise().norm().sum();
        count += frames[t].m();
    }
    return std::exp(-sum / static_cast<double>(count));
}

double geometric_accuracy(const Sequence& frames, const SkeletonGraph& graph) {
    if (graph.size() == 0) throw ConfigError("geometric accuracy needs at least one edge");
    if (frames.empty()) throw EmptyInputError("geometric accuracy over an empty sequence");
    for (double len : graph.reference_lengths()) {
        if (!(len > 0.0)) throw ConfigError("geometric accuracy needs positive reference lengths");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (const KeypointSet& frame : frames) {
        graph.check_indices(frame.m());
        for (std::size_t e = 0; e < graph.size(); ++e) {
            const Edge& edge = graph.edges()[e];
            const double ref = graph.reference_lengths()[e];
            sum += std::abs(keypoint_distance(frame, edge.i, edge.j) - ref) / ref;
            ++count;
        }
    }
    return std::clamp(1.0 - sum / static_cast<double>(count), 0.0, 1.0);
}

double score(double value) {
    if (!(value >= 0.0)) throw DomainError("score is defined for non-negative values");
    return 100.0 * std::exp(-value);
}

MetricReport evaluate(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                      const SequenceMask& masks) {
    MetricReport r;
    r.mse = mse(pred, gt, masks);
    r.epe = epe(pred, gt, masks);
    r.temporal_consistency = temporal_consistency(pred);
    r.geometric_accuracy = geometric_accuracy(pred, graph);
    r.mse_score = score(r.mse);
    r.epe_score = score(r.epe);
    return r;
}

}  // namespace sirenpose
