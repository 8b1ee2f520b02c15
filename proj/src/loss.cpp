#include "sirenpose/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sirenpose/errors.hpp"

namespace sirenpose {

namespace {

void check_pair(const KeypointSet& pred, const KeypointSet& gt) {
    if (pred.m() == 0 || gt.m() == 0) {
        throw EmptyInputError("empty keypoint set");
    }
    if (pred.m() != gt.m() || pred.d() != gt.d()) {
        throw ShapeError("prediction is " + std::to_string(pred.m()) + "x" + std::to_string(pred.d()) +
                         ", ground truth is " + std::to_string(gt.m()) + "x" + std::to_string(gt.d()));
    }
}

void check_visible(const std::vector<bool>& visible, std::size_t m) {
    if (!visible.empty() && visible.size() != m) {
        throw ShapeError("visibility mask length does not match keypoint count");
    }
}

bool is_visible(const std::vector<bool>& visible, std::size_t i) { return visible.empty() || visible[i]; }

std::vector<bool> frame_mask(const SequenceMask& masks, std::size_t t) {
    return masks.empty() ? std::vector<bool>{} : masks[t];
}

}  // namespace

SkeletonGraph::SkeletonGraph(std::vector<Edge> edges, std::vector<double> reference_lengths)
    : edges_(std::move(edges)), reference_lengths_(std::move(reference_lengths)) {
    if (edges_.size() != reference_lengths_.size()) {
        throw ConfigError("graph has " + std::to_string(edges_.size()) + " edges but " +
                          std::to_string(reference_lengths_.size()) + " reference lengths");
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        Edge& edge = edges_[e];
        if (edge.i == edge.j) {
            throw ConfigError("self-loop on keypoint " + std::to_string(edge.i));
        }
        if (edge.i > edge.j) std::swap(edge.i, edge.j);
        if (!std::isfinite(reference_lengths_[e]) || reference_lengths_[e] < 0.0) {
            throw ConfigError("reference length of edge " + std::to_string(e) + " must be finite and >= 0");
        }
        for (std::size_t f = 0; f < e; ++f) {
            if (edges_[f] == edge) {
                throw ConfigError("duplicate edge (" + std::to_string(edge.i) + "," + std::to_string(edge.j) + ")");
            }
        }
    }
}

SkeletonGraph SkeletonGraph::from_reference(std::vector<Edge> edges, const KeypointSet& reference) {
    std::vector<double> lengths;
    lengths.reserve(edges.size());
    for (const Edge& e : edges) lengths.push_back(keypoint_distance(reference, e.i, e.j));
    return SkeletonGraph(std::move(edges), std::move(lengths));
}

std::vector<Edge> SkeletonGraph::chain_edges(std::size_t m) {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < m; ++i) edges.push_back({i, i + 1});
    return edges;
}

void SkeletonGraph::check_indices(std::size_t m) const {
    for (const Edge& e : edges_) {
        if (e.i >= m || e.j >= m) {
            throw BoundsError("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                              ") out of range for " + std::to_string(m) + " keypoints");
        }
    }
}

void LossConfig::validate() const {
    if (!std::isfinite(omega0) || !std::isfinite(lambda_geo) || !std::isfinite(lambda_sp)) {
        throw ConfigError("loss configuration values must be finite");
    }
    if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");
    if (lambda_geo < 0.0) throw ConfigError("lambda_geo must be non-negative");
    if (lambda_sp < 0.0) throw ConfigError("lambda_sp must be non-negative");
}

double keypoint_distance(const KeypointSet& a, std::size_t i, std::size_t j) {
    if (i >= a.m() || j >= a.m()) {
        throw BoundsError("keypoint index out of range");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < a.d(); ++k) {
        const double diff = a(i, k) - a(j, k);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

SirenPoseTerms sirenpose_loss(const KeypointSet& pred, const KeypointSet& gt, const SkeletonGraph& graph,
                              const LossConfig& cfg, const std::vector<bool>& visible) {
    check_pair(pred, gt);
    check_visible(visible, pred.m());
    graph.check_indices(pred.m());
    cfg.validate();

    SirenPoseTerms terms;
    for (std::size_t i = 0; i < pred.m(); ++i) {
        if (!is_visible(visible, i)) continue;
        for (std::size_t k = 0; k < pred.d(); ++k) {
            const double diff = pred(i, k) - gt(i, k);
            terms.position += diff * diff;
        }
    }
    const double w0 = cfg.omega0;
    for (const Edge& e : graph.edges()) {
        if (!is_visible(visible, e.i) || !is_visible(visible, e.j)) continue;
        for (std::size_t k = 0; k < pred.d(); ++k) {
            const double r = std::sin(w0 * (pred(e.i, k) - pred(e.j, k))) - std::sin(w0 * (gt(e.i, k) - gt(e.j, k)));
            terms.geometric += r * r;
        }
    }
    return terms;
}

Coords sirenpose_grad(const KeypointSet& pred, const KeypointSet& gt, const SkeletonGraph& graph,
                      const LossConfig& cfg, const std::vector<bool>& visible) {
    check_pair(pred, gt);
    check_visible(visible, pred.m());
    graph.check_indices(pred.m());
    cfg.validate();

    const auto m = static_cast<Eigen::Index>(pred.m());
    const auto d = static_cast<Eigen::Index>(pred.d());
    Coords grad = Coords::Zero(m, d);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!is_visible(visible, static_cast<std::size_t>(i))) continue;
        grad.row(i) = 2.0 * (pred.coords().row(i) - gt.coords().row(i));
    }
    const double w0 = cfg.omega0;
    for (const Edge& e : graph.edges()) {
        if (!is_visible(visible, e.i) || !is_visible(visible, e.j)) continue;
        const auto i = static_cast<Eigen::Index>(e.i);
        const auto j = static_cast<Eigen::Index>(e.j);
        for (Eigen::Index k = 0; k < d; ++k) {
            const double u = w0 * (pred.coords()(i, k) - pred.coords()(j, k));
            const double r = std::sin(u) - std::sin(w0 * (gt.coords()(i, k) - gt.coords()(j, k)));
            const double g = cfg.lambda_geo * 2.0 * w0 * std::cos(u) * r;
            grad(i, k) += g;
            grad(j, k) -= g;
        }
    }
    return grad;
}

double recon_loss(const Sequence& pred, const Sequence& target, const SequenceMask& masks) {
    check_same_shape(pred, target);
    if (pred.empty()) return 0.0;
    check_mask(masks, pred.size(), pred.front().m());
    double sum = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        for (std::size_t i = 0; i < pred[t].m(); ++i) {
            if (!visible(masks, t, i)) continue;
            for (std::size_t k = 0; k < pred[t].d(); ++k) {
                const double diff = pred[t](i, k) - target[t](i, k);
                sum += diff * diff;
            }
        }
    }
    return sum;
}

std::vector<Coords> recon_grad(const Sequence& pred, const Sequence& target, const SequenceMask& masks) {
    check_same_shape(pred, target);
    std::vector<Coords> grads;
    if (pred.empty()) return grads;
    check_mask(masks, pred.size(), pred.front().m());
    grads.reserve(pred.size());
    for (std::size_t t = 0; t < pred.size(); ++t) {
        Coords g = 2.0 * (pred[t].coords() - target[t].coords());
        for (std::size_t i = 0; i < pred[t].m(); ++i) {
            if (!visible(masks, t, i)) g.row(static_cast<Eigen::Index>(i)).setZero();
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

LossBreakdown total_loss(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                         const LossConfig& cfg, const SequenceMask& masks) {
    check_same_shape(pred, gt);
    cfg.validate();
    LossBreakdown out;
    if (pred.empty()) return out;
    check_mask(masks, pred.size(), pred.front().m());
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const SirenPoseTerms terms = sirenpose_loss(pred[t], gt[t], graph, cfg, frame_mask(masks, t));
        out.position += terms.position;
        out.geometric += terms.geometric;
    }
    out.recon = recon_loss(pred, gt, masks);
    out.total = out.recon + cfg.lambda_sp * (out.position + cfg.lambda_geo * out.geometric);
    return out;
}

std::vector<Coords> total_loss_grad(const Sequence& pred, const Sequence& gt, const SkeletonGraph& graph,
                                    const LossConfig& cfg, const SequenceMask& masks) {
    std::vector<Coords> grads = recon_grad(pred, gt, masks);
    for (std::size_t t = 0; t < pred.size(); ++t) {
        grads[t] += cfg.lambda_sp * sirenpose_grad(pred[t], gt[t], graph, cfg, frame_mask(masks, t));
    }
    return grads;
}

}  // namespace sirenpose
