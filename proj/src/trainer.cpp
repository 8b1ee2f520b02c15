#include "sirenpose/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>
#include <string>

namespace sirenpose {

AdamState::AdamState(std::size_t n_params, double lr_, double beta1_, double beta2_, double eps_)
    : m(n_params, 0.0), v(n_params, 0.0), lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("Adam state, parameters and gradients must have equal length");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw NumericError("non-finite gradient passed to Adam");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grads[k];
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[k] / bc1;
        const double v_hat = state.v[k] / bc2;
        params[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    loss.validate();
}

ObjectiveEval evaluate_objective(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg,
                                 std::span<const std::size_t> frame_indices) {
    const std::size_t n_frames = data.t();
    const std::size_t m = pred.m();
    const std::size_t d = pred.d();
    if (data.m() != m || data.d() != d) {
        throw ConfigError("predictor is " + std::to_string(m) + "x" + std::to_string(d) + ", data is " +
                          std::to_string(data.m()) + "x" + std::to_string(data.d()));
    }
    cfg.validate();

    std::vector<double> ts;
    ts.reserve(frame_indices.size());
    for (std::size_t idx : frame_indices) ts.push_back(TimeCoordinate::of_frame(idx, n_frames).t_norm);
    BatchPrediction batch = predict_batch(pred, ts);

    const Sequence& targets = data.targets();
    ObjectiveEval out;
    Matrix grad_flat(batch.flat.rows(), batch.flat.cols());
    for (std::size_t col = 0; col < frame_indices.size(); ++col) {
        const std::size_t t = frame_indices[col];
        const auto c = static_cast<Eigen::Index>(col);
        // Predictions need not be finite mid-divergence; KeypointSet would reject them.
        if (!batch.flat.col(c).allFinite()) {
            out.loss.total = std::numeric_limits<double>::infinity();
            return out;
        }
        const KeypointSet p = to_keypoints(batch.flat.col(c), m, d);
        const KeypointSet& y = targets[t];
        const std::vector<bool> vis = data.masks.empty() ? std::vector<bool>{} : data.masks[t];

        const SirenPoseTerms terms = sirenpose_loss(p, y, data.graph, cfg, vis);
        Coords g = cfg.lambda_sp * sirenpose_grad(p, y, data.graph, cfg, vis);
        for (std::size_t i = 0; i < m; ++i) {
            if (!vis.empty() && !vis[i]) continue;
            const auto r = static_cast<Eigen::Index>(i);
            const auto diff = (p.coords().row(r) - y.coords().row(r)).eval();
            out.loss.recon += diff.squaredNorm();
            g.row(r) += 2.0 * diff;
        }
        out.loss.position += terms.position;
        out.loss.geometric += terms.geometric;
        grad_flat.col(c) = Eigen::Map<const Vector>(g.data(), g.size());
    }
    out.loss.total = out.loss.recon + cfg.lambda_sp * (out.loss.position + cfg.lambda_geo * out.loss.geometric);
    out.grad = backward_params(pred, batch.caches, grad_flat);
    return out;
}

ObjectiveEval evaluate_objective(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg) {
    std::vector<std::size_t> all(data.t());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return evaluate_objective(pred, data, cfg, all);
}

namespace {

bool diverged(double total) { return !std::isfinite(total) || total > kDivergenceLimit; }

TrainRecord make_record(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg,
                        std::size_t step, double wall_seconds) {
    TrainRecord rec;
    rec.step = step;
    rec.wall_seconds = wall_seconds;
    const Sequence predicted = predict_sequence(pred, data.t());
    rec.loss = total_loss(predicted, data.targets(), data.graph, cfg, data.masks);
    rec.metrics = evaluate(predicted, data.frames, data.graph);
    return rec;
}

}  // namespace

TrainResult train(CompositePredictor pred, const LabeledSequence& data, const TrainConfig& cfg,
                  const TrainObserver& observer) {
    cfg.validate();
    data.validate();
    if (data.t() < 2) throw ConfigError("training needs at least 2 frames");
    if (data.m() != pred.m() || data.d() != pred.d()) {
        throw ConfigError("predictor dimensions do not match the data");
    }

    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    Rng rng(cfg.seed);
    AdamState adam(pred.parameter_count(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    std::vector<double> params = flatten_params(pred);
    const std::size_t batch = std::min(cfg.batch_size, data.t());

    TrainReport report;
    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        const std::vector<std::size_t> frames = rng.sample_without_replacement(data.t(), batch);
        const ObjectiveEval eval = evaluate_objective(pred, data, cfg.loss, frames);
        if (diverged(eval.loss.total)) {
            throw TrainingDiverged("training diverged at step " + std::to_string(step) +
                                       " (batch loss " + std::to_string(eval.loss.total) + ")",
                                   std::move(report));
        }
        try {
            adam_step(adam, params, eval.grad);
        } catch (const NumericError& e) {
            throw TrainingDiverged(std::string("training diverged at step ") + std::to_string(step) + ": " + e.what(),
                                   std::move(report));
        }
        pred = unflatten_params(std::move(pred), params);

        if (step % cfg.log_every == 0 || step == cfg.max_steps) {
            TrainRecord rec = make_record(pred, data, cfg.loss, step, elapsed());
            if (diverged(rec.loss.total)) {
                throw TrainingDiverged("training diverged at step " + std::to_string(step), std::move(report));
            }
            if (observer) observer(rec);
            report.records.push_back(std::move(rec));
        }
    }
    report.final_metrics = report.records.back().metrics;
    return {std::move(pred), std::move(report)};
}

double gradcheck_relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
    return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg,
                          std::size_t n_probes, std::uint64_t seed) {
    if (n_probes < 1) throw ConfigError("gradcheck needs at least one probe");
    data.validate();
    const ObjectiveEval base = evaluate_objective(pred, data, cfg);
    std::vector<double> params = flatten_params(pred);

    Rng rng(seed);
    const std::vector<std::size_t> picks = rng.sample_without_replacement(params.size(), n_probes);

    auto loss_at = [&](std::size_t k, double value) {
        std::vector<double> shifted = params;
        shifted[k] = value;
        const CompositePredictor probe = unflatten_params(pred, shifted);
        const Sequence predicted = predict_sequence(probe, data.t());
        return total_loss(predicted, data.targets(), data.graph, cfg, data.masks).total;
    };

    GradcheckReport report;
    for (std::size_t k : picks) {
        const double x = params[k];
        const double h = kGradcheckStep;
        const double wide = loss_at(k, x + h) - loss_at(k, x - h);
        const double narrow = loss_at(k, x + h / 2) - loss_at(k, x - h / 2);
        // Richardson combination of the two central differences cancels the h^2 term.
        const double numeric = (8.0 * narrow - wide) / (6.0 * h);
        GradcheckProbe probe{k, base.grad[k], numeric, gradcheck_relative_error(base.grad[k], numeric)};
        report.max_rel_error = std::max(report.max_rel_error, probe.rel_error);
        report.probes.push_back(probe);
    }
    return report;
}

}  // namespace sirenpose
