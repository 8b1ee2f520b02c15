#include "sirenpose/predictor.hpp"

#include <cmath>
#include <string>

#include "sirenpose/errors.hpp"

namespace sirenpose {

TimeCoordinate TimeCoordinate::of_frame(std::size_t frame_index, std::size_t n_frames) {
    if (n_frames == 0) {
        throw EmptyInputError("time coordinate for an empty clip");
    }
    if (frame_index >= n_frames) {
        throw BoundsError("frame " + std::to_string(frame_index) + " outside a " + std::to_string(n_frames) +
                          "-frame clip");
    }
    if (n_frames == 1) return {frame_index, 0.0};
    const double t = -1.0 + 2.0 * static_cast<double>(frame_index) / static_cast<double>(n_frames - 1);
    return {frame_index, t};
}

CompositePredictor::CompositePredictor(Mlp low, Mlp high, double lambda_mix, std::size_t m, std::size_t d)
    : low_(std::move(low)), high_(std::move(high)), lambda_mix_(lambda_mix), m_(m), d_(d) {
    if (m_ < 1 || d_ < 1 || d_ > 3) {
        throw ConfigError("predictor needs m >= 1 and d in {1,2,3}");
    }
    if (!(lambda_mix_ >= 0.0) || !std::isfinite(lambda_mix_)) {
        throw ConfigError("lambda_mix must be a finite non-negative number");
    }
    for (const Mlp* branch : {&low_, &high_}) {
        if (branch->in_dim() != 1) {
            throw ConfigError("predictor branches take normalized time (in_dim 1)");
        }
        if (branch->out_dim() != m_ * d_) {
            throw ConfigError("branch output " + std::to_string(branch->out_dim()) + " != m*d = " +
                              std::to_string(m_ * d_));
        }
    }
}

CompositePredictor CompositePredictor::init(const PredictorConfig& cfg, Rng& rng) {
    std::vector<std::size_t> low_arch{1};
    low_arch.insert(low_arch.end(), cfg.low_hidden.begin(), cfg.low_hidden.end());
    low_arch.push_back(cfg.m * cfg.d);
    std::vector<std::size_t> high_arch{1};
    high_arch.insert(high_arch.end(), cfg.high_hidden.begin(), cfg.high_hidden.end());
    high_arch.push_back(cfg.m * cfg.d);

    Mlp low = init_tanh_mlp(low_arch, rng);
    Mlp high = init_siren(high_arch, cfg.omega0, rng);
    return CompositePredictor(std::move(low), std::move(high), cfg.lambda_mix, cfg.m, cfg.d);
}

KeypointSet to_keypoints(const Eigen::Ref<const Vector>& flat, std::size_t m, std::size_t d) {
    if (static_cast<std::size_t>(flat.size()) != m * d) {
        throw ShapeError("flat coordinate vector has the wrong length");
    }
    Coords coords(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        for (Eigen::Index k = 0; k < coords.cols(); ++k) {
            coords(i, k) = flat(i * coords.cols() + k);
        }
    }
    return KeypointSet(std::move(coords));
}

BatchPrediction predict_batch(const CompositePredictor& pred, std::span<const double> t_norm) {
    if (pred.low().out_dim() != pred.m() * pred.d() || pred.high().out_dim() != pred.m() * pred.d()) {
        throw ConfigError("predictor branch output does not match m*d");
    }
    Matrix t(1, static_cast<Eigen::Index>(t_norm.size()));
    for (std::size_t j = 0; j < t_norm.size(); ++j) t(0, static_cast<Eigen::Index>(j)) = t_norm[j];

    auto [low_out, low_cache] = forward(pred.low(), t);
    auto [high_out, high_cache] = forward(pred.high(), t);
    BatchPrediction out;
    out.flat = low_out + pred.lambda_mix() * high_out;
    out.caches.low = std::move(low_cache);
    out.caches.high = std::move(high_cache);
    return out;
}

std::pair<KeypointSet, PredictorCaches> predict(const CompositePredictor& pred, TimeCoordinate t) {
    const double tn = t.t_norm;
    BatchPrediction batch = predict_batch(pred, std::span<const double>(&tn, 1));
    return {to_keypoints(batch.flat.col(0), pred.m(), pred.d()), std::move(batch.caches)};
}

Sequence predict_sequence(const CompositePredictor& pred, std::size_t n_frames) {
    if (n_frames == 0) {
        throw EmptyInputError("predict_sequence needs at least one frame");
    }
    std::vector<double> ts(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) ts[i] = TimeCoordinate::of_frame(i, n_frames).t_norm;
    BatchPrediction batch = predict_batch(pred, ts);
    Sequence frames;
    frames.reserve(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        frames.push_back(to_keypoints(batch.flat.col(static_cast<Eigen::Index>(i)), pred.m(), pred.d()));
    }
    return frames;
}

std::vector<double> backward_params(const CompositePredictor& pred, const PredictorCaches& caches,
                                    const Matrix& grad_flat) {
    BackwardResult low = backward(pred.low(), caches.low, grad_flat);
    BackwardResult high = backward(pred.high(), caches.high, Matrix(pred.lambda_mix() * grad_flat));
    std::vector<double> out;
    out.reserve(pred.parameter_count());
    low.params.append(out);
    high.params.append(out);
    return out;
}

std::vector<double> flatten_params(const CompositePredictor& pred) {
    std::vector<double> out;
    out.reserve(pred.parameter_count());
    pred.low().append_params(out);
    pred.high().append_params(out);
    return out;
}

CompositePredictor unflatten_params(CompositePredictor pred, std::span<const double> values) {
    if (values.size() != pred.parameter_count()) {
        throw ShapeError("expected " + std::to_string(pred.parameter_count()) + " parameters, got " +
                         std::to_string(values.size()));
    }
    const std::size_t n_low = pred.low().parameter_count();
    pred.mutable_low().assign_params(values.first(n_low));
    pred.mutable_high().assign_params(values.subspan(n_low));
    return pred;
}

}  // namespace sirenpose
