#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sirenpose/errors.hpp"
#include "sirenpose/loss.hpp"
#include "sirenpose/metrics.hpp"
#include "sirenpose/predictor.hpp"
#include "sirenpose/scene.hpp"

namespace sirenpose {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n_params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
};

// One bias-corrected Adam update, in place. Throws NumericError (state and
// params untouched) if any gradient is non-finite, ShapeError on length mismatch.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 64;  // frames per step
    std::size_t max_steps = 10000;
    std::uint64_t seed = 0;
    LossConfig loss;
    std::size_t log_every = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TrainRecord {
    std::size_t step = 0;
    LossBreakdown loss;     // full clip against the training targets
    MetricReport metrics;   // full clip against ground truth
    double wall_seconds = 0.0;
};

struct TrainReport {
    std::vector<TrainRecord> records;
    MetricReport final_metrics;
};

struct TrainResult {
    CompositePredictor predictor;
    TrainReport report;
};

// Raised when the objective becomes non-finite or exceeds kDivergenceLimit.
// Carries the records logged before the failure.
class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(const std::string& what, TrainReport report)
        : NumericError(what), report_(std::move(report)) {}
    const TrainReport& report() const { return report_; }

private:
    TrainReport report_;
};

inline constexpr double kDivergenceLimit = 1e12;

// Objective value and its gradient w.r.t. flatten_params(pred) over a set of
// frames. Predictions are fitted to data.targets() under data.masks.
struct ObjectiveEval {
    LossBreakdown loss;
    std::vector<double> grad;
};

ObjectiveEval evaluate_objective(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg,
                                 std::span<const std::size_t> frame_indices);
ObjectiveEval evaluate_objective(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg);

// Called after each logged step; used by the CLI to stream records.
using TrainObserver = std::function<void(const TrainRecord&)>;

// Minimizes L = recon + lambda_sp * L_SirenPose with Adam. Each step draws
// min(batch_size, T) distinct frames from the seeded generator. Logs at every
// multiple of log_every and at the final step.
TrainResult train(CompositePredictor pred, const LabeledSequence& data, const TrainConfig& cfg,
                  const TrainObserver& observer = {});

struct GradcheckProbe {
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckProbe> probes;
    double max_rel_error = 0.0;
};

inline constexpr double kGradcheckStep = 1e-6;
// Denominator floor of the relative error; gradients below it are judged by
// absolute error.
inline constexpr double kGradcheckFloor = 1.0;

// |a - n| / max(|a|, |n|, kGradcheckFloor)
double gradcheck_relative_error(double analytic, double numeric);

// Finite-difference check of the full-clip objective on n_probes distinct
// parameters chosen by `seed`. The numeric derivative is the fourth-order
// central stencil with outer step kGradcheckStep: the sine layers make the
// h^2 error of a plain central difference reach ~1e-4 on first-layer weights.
// The objective is a sum of O(10^3) magnitude, so round-off alone is ~1e-7 in
// absolute terms; hence the floor of 1 on the relative-error denominator.
GradcheckReport gradcheck(const CompositePredictor& pred, const LabeledSequence& data, const LossConfig& cfg,
                          std::size_t n_probes, std::uint64_t seed);

}  // namespace sirenpose
