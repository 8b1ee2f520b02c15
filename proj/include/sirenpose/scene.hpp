#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sirenpose/keypoints.hpp"
#include "sirenpose/loss.hpp"

namespace sirenpose {

// Articulated chain: keypoint 0 is pinned at the origin and joint j rotates
// bone j by amplitude_j * sin(frequency_j * t + phase_j), with t the frame
// index and phases drawn from the seed.
struct SceneConfig {
    std::size_t m = 5;
    std::size_t d = 2;
    std::size_t t = 64;
    double bone_length = 1.0;
    std::vector<double> motion_frequencies{0.10, 0.15, 0.20, 0.25};  // rad/frame
    std::vector<double> motion_amplitudes{0.60, 0.50, 0.40, 0.30};   // rad
    double noise_sigma = 0.0;
    double occlusion_rate = 0.0;
    std::uint64_t seed = 0;

    // Default motion pattern resized for an m-keypoint chain.
    static SceneConfig defaults_for(std::size_t m);

    // Throws ConfigError when an invariant is violated.
    void validate() const;
    bool operator==(const SceneConfig&) const = default;
};

struct LabeledSequence {
    Sequence frames;        // ground truth
    SkeletonGraph graph;
    SequenceMask masks;     // T x M, true = visible
    Sequence noisy_frames;  // observations
    std::optional<SceneConfig> generator_config;

    std::size_t t() const { return frames.size(); }
    std::size_t m() const { return frames.empty() ? 0 : frames.front().m(); }
    std::size_t d() const { return frames.empty() ? 0 : frames.front().d(); }

    // Observations if present, else ground truth.
    const Sequence& targets() const { return noisy_frames.empty() ? frames : noisy_frames; }

    // Throws when frames, masks, noisy frames and graph disagree in shape.
    void validate() const;

    bool operator==(const LabeledSequence&) const = default;
};

LabeledSequence generate_chain_scene(const SceneConfig& cfg);

// Replaces noisy_frames with ground truth plus i.i.d. N(0, sigma^2) noise.
LabeledSequence perturb_sequence(const LabeledSequence& seq, double sigma, std::uint64_t seed);

}  // namespace sirenpose
