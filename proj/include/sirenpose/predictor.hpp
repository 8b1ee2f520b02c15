#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sirenpose/keypoints.hpp"
#include "sirenpose/siren_net.hpp"

namespace sirenpose {

// Frame position mapped onto [-1, 1].
struct TimeCoordinate {
    std::size_t frame_index = 0;
    double t_norm = 0.0;

    // t_norm = -1 + 2*i/(T-1) for T >= 2, and 0 for a single-frame clip.
    static TimeCoordinate of_frame(std::size_t frame_index, std::size_t n_frames);
};

struct PredictorConfig {
    std::size_t m = 5;
    std::size_t d = 2;
    std::vector<std::size_t> low_hidden{64, 64};
    std::vector<std::size_t> high_hidden{128, 128, 128};
    double omega0 = kDefaultOmega0;
    double lambda_mix = 0.1;
};

// Keypoint trajectory model: coords(t) = low(t) + lambda_mix * high(t), where
// low is a Tanh MLP (global motion) and high is a SIREN (fine detail). Both
// map normalized time (in_dim 1) to M*D coordinates, reshaped keypoint-major.
class CompositePredictor {
public:
    CompositePredictor() = default;
    CompositePredictor(Mlp low, Mlp high, double lambda_mix, std::size_t m, std::size_t d);

    // Initializes the low branch first, then the high branch, from one generator.
    static CompositePredictor init(const PredictorConfig& cfg, Rng& rng);

    const Mlp& low() const { return low_; }
    const Mlp& high() const { return high_; }
    Mlp& mutable_low() { return low_; }
    Mlp& mutable_high() { return high_; }

    double lambda_mix() const { return lambda_mix_; }
    std::size_t m() const { return m_; }
    std::size_t d() const { return d_; }
    std::size_t parameter_count() const { return low_.parameter_count() + high_.parameter_count(); }

private:
    Mlp low_;
    Mlp high_;
    double lambda_mix_ = 0.0;
    std::size_t m_ = 0;
    std::size_t d_ = 0;
};

struct PredictorCaches {
    ForwardCache low;
    ForwardCache high;
};

struct BatchPrediction {
    Matrix flat;  // (M*D) x batch, column j is frame j flattened row-major
    PredictorCaches caches;
};

std::pair<KeypointSet, PredictorCaches> predict(const CompositePredictor& pred, TimeCoordinate t);

BatchPrediction predict_batch(const CompositePredictor& pred, std::span<const double> t_norm);

// Frames 0..T-1 of a T-frame clip. Throws EmptyInputError for T = 0.
Sequence predict_sequence(const CompositePredictor& pred, std::size_t n_frames);

// Gradient of a loss w.r.t. all parameters (flatten_params order), given the
// loss gradient w.r.t. the flattened outputs of predict_batch.
std::vector<double> backward_params(const CompositePredictor& pred, const PredictorCaches& caches,
                                    const Matrix& grad_flat);

// Low branch layers first, then the high branch; within a layer the weights
// row-major followed by the biases.
std::vector<double> flatten_params(const CompositePredictor& pred);
CompositePredictor unflatten_params(CompositePredictor pred, std::span<const double> values);

KeypointSet to_keypoints(const Eigen::Ref<const Vector>& flat, std::size_t m, std::size_t d);

}  // namespace sirenpose
