#include "sirenpose/scene.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sirenpose/errors.hpp"
#include "sirenpose/siren_net.hpp"

namespace sirenpose {

namespace {

Sequence add_noise(const Sequence& frames, double sigma, Rng& rng) {
    Sequence noisy;
    noisy.reserve(frames.size());
    for (const KeypointSet& frame : frames) {
        Coords c = frame.coords();
        for (Eigen::Index i = 0; i < c.rows(); ++i) {
            for (Eigen::Index k = 0; k < c.cols(); ++k) {
                if (sigma > 0.0) c(i, k) += rng.normal(0.0, sigma);
            }
        }
        noisy.emplace_back(std::move(c));
    }
    return noisy;
}

}  // namespace

SceneConfig SceneConfig::defaults_for(std::size_t m) {
    SceneConfig cfg;
    cfg.m = m;
    const SceneConfig base;
    cfg.motion_frequencies.clear();
    cfg.motion_amplitudes.clear();
    for (std::size_t j = 0; j + 1 < m; ++j) {
        cfg.motion_frequencies.push_back(base.motion_frequencies[j % base.motion_frequencies.size()]);
        cfg.motion_amplitudes.push_back(base.motion_amplitudes[j % base.motion_amplitudes.size()]);
    }
    return cfg;
}

void SceneConfig::validate() const {
    if (m < 2) throw ConfigError("a chain needs at least 2 keypoints");
    if (d != 2 && d != 3) throw ConfigError("chain scenes are generated in 2 or 3 dimensions");
    if (t < 2) throw ConfigError("a scene needs at least 2 frames");
    if (!(bone_length > 0.0) || !std::isfinite(bone_length)) throw ConfigError("bone_length must be positive");
    if (motion_frequencies.size() != m - 1 || motion_amplitudes.size() != m - 1) {
        throw ConfigError("motion_frequencies and motion_amplitudes need m-1 = " + std::to_string(m - 1) +
                          " entries");
    }
    for (std::size_t j = 0; j + 1 < m; ++j) {
        if (!std::isfinite(motion_frequencies[j]) || !std::isfinite(motion_amplitudes[j])) {
            throw ConfigError("motion parameters must be finite");
        }
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
    if (!(occlusion_rate >= 0.0 && occlusion_rate < 1.0)) throw ConfigError("occlusion_rate must be in [0, 1)");
}

void LabeledSequence::validate() const {
    if (frames.empty()) throw ConfigError("sequence has no frames");
    const std::size_t mm = m();
    const std::size_t dd = d();
    for (const KeypointSet& f : frames) {
        if (f.m() != mm || f.d() != dd) throw ShapeError("frames disagree in keypoint shape");
    }
    if (!noisy_frames.empty()) check_same_shape(frames, noisy_frames);
    check_mask(masks, frames.size(), mm);
    graph.check_indices(mm);
}

LabeledSequence generate_chain_scene(const SceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t joints = cfg.m - 1;

    std::vector<double> azimuth_phase(joints);
    std::vector<double> elevation_phase(joints);
    for (std::size_t j = 0; j < joints; ++j) {
        azimuth_phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        if (cfg.d == 3) elevation_phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    LabeledSequence seq;
    seq.frames.reserve(cfg.t);
    for (std::size_t t = 0; t < cfg.t; ++t) {
        const double tt = static_cast<double>(t);
        Coords c = Coords::Zero(static_cast<Eigen::Index>(cfg.m), static_cast<Eigen::Index>(cfg.d));
        double azimuth = 0.0;
        double elevation = 0.0;
        for (std::size_t j = 0; j < joints; ++j) {
            const double f = cfg.motion_frequencies[j];
            const double a = cfg.motion_amplitudes[j];
            azimuth += a * std::sin(f * tt + azimuth_phase[j]);
            const auto parent = static_cast<Eigen::Index>(j);
            const auto child = parent + 1;
            if (cfg.d == 2) {
                c(child, 0) = c(parent, 0) + cfg.bone_length * std::cos(azimuth);
                c(child, 1) = c(parent, 1) + cfg.bone_length * std::sin(azimuth);
            } else {
                elevation += a * std::sin(f * tt + elevation_phase[j]);
                c(child, 0) = c(parent, 0) + cfg.bone_length * std::cos(elevation) * std::cos(azimuth);
                c(child, 1) = c(parent, 1) + cfg.bone_length * std::cos(elevation) * std::sin(azimuth);
                c(child, 2) = c(parent, 2) + cfg.bone_length * std::sin(elevation);
            }
        }
        seq.frames.emplace_back(std::move(c));
    }

    std::vector<double> lengths(joints, cfg.bone_length);
    seq.graph = SkeletonGraph(SkeletonGraph::chain_edges(cfg.m), std::move(lengths));

    seq.noisy_frames = add_noise(seq.frames, cfg.noise_sigma, rng);

    seq.masks = all_visible(cfg.t, cfg.m);
    if (cfg.occlusion_rate > 0.0) {
        for (auto& row : seq.masks) {
            for (std::size_t i = 0; i < row.size(); ++i) row[i] = rng.uniform(0.0, 1.0) >= cfg.occlusion_rate;
        }
    }
    seq.generator_config = cfg;
    return seq;
}

LabeledSequence perturb_sequence(const LabeledSequence& seq, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw DomainError("noise sigma must be a finite non-negative number");
    }
    Rng rng(seed);
    LabeledSequence out = seq;
    out.noisy_frames = add_noise(seq.frames, sigma, rng);
    return out;
}

}  // namespace sirenpose
