#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "sirenpose/errors.hpp"
#include "sirenpose/trainer.hpp"

using namespace sirenpose;

namespace {

PredictorConfig small_predictor(std::size_t m = 5, std::size_t d = 2) {
    PredictorConfig pc;
    pc.m = m;
    pc.d = d;
    pc.low_hidden = {16};
    pc.high_hidden = {24, 24};
    return pc;
}

LabeledSequence short_scene(std::uint64_t seed = 0) {
    SceneConfig sc;
    sc.t = 16;
    sc.seed = seed;
    sc.noise_sigma = 0.02;
    sc.occlusion_rate = 0.1;
    return generate_chain_scene(sc);
}

TrainConfig quick_config(std::size_t steps) {
    TrainConfig cfg;
    cfg.lr = 1e-3;
    cfg.batch_size = 8;
    cfg.max_steps = steps;
    cfg.log_every = 10;
    return cfg;
}

// Predictor whose output is the constant frame `target`: every weight is zero
// and the low branch's final bias holds the coordinates.
CompositePredictor constant_predictor(const KeypointSet& target) {
    Rng rng(0);
    const CompositePredictor base = CompositePredictor::init(small_predictor(target.m(), target.d()), rng);
    std::vector<double> p(base.parameter_count(), 0.0);
    const std::size_t out = target.m() * target.d();
    const std::size_t low_bias = base.low().parameter_count() - out;
    for (std::size_t k = 0; k < out; ++k) p[low_bias + k] = target(k / target.d(), k % target.d());
    return unflatten_params(base, p);
}

}  // namespace

TEST_CASE("adam leaves parameters alone for a zero gradient") {
    AdamState s(3, 1e-4);
    std::vector<double> p{1.0, -2.0, 0.5};
    const std::vector<double> g(3, 0.0);
    adam_step(s, p, g);
    CHECK(p == std::vector<double>{1.0, -2.0, 0.5});
    CHECK(s.step == 1);
}

TEST_CASE("adam first step is lr in magnitude after bias correction") {
    AdamState s(1, 1e-4);
    std::vector<double> p{0.0};
    const std::vector<double> g{0.5};
    adam_step(s, p, g);
    CHECK(p[0] == doctest::Approx(-1e-4 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
}

TEST_CASE("two adam steps with a constant gradient follow the scalar recursion") {
    // m1 = 0.03, v1 = 9e-5 -> m_hat = 0.3, v_hat = 0.09; the second step gives
    // the same corrected moments, so the total move is 2 * lr * 0.3 / (0.3 + eps).
    AdamState s(1, 1e-4);
    std::vector<double> p{0.0};
    const std::vector<double> g{0.3};
    adam_step(s, p, g);
    adam_step(s, p, g);
    CHECK(s.m[0] == doctest::Approx(0.057).epsilon(1e-14));
    CHECK(s.v[0] == doctest::Approx(1.7991e-4).epsilon(1e-14));
    CHECK(p[0] == doctest::Approx(-1.9999999333333358e-4).epsilon(1e-12));
}

TEST_CASE("adam updates are invariant to gradient scale up to eps") {
    for (double c : {1e-3, 0.5, 7.0, 1e3}) {
        AdamState a(2, 1e-3);
        AdamState b(2, 1e-3);
        std::vector<double> pa{0.0, 0.0};
        std::vector<double> pb{0.0, 0.0};
        for (int k = 0; k < 20; ++k) {
            const std::vector<double> g{0.2, -0.05 * (k % 3 + 1)};
            const std::vector<double> gc{c * g[0], c * g[1]};
            adam_step(a, pa, g);
            adam_step(b, pb, gc);
        }
        // Each update differs by at most lr * eps / |g_hat| per step.
        CHECK(std::abs(pa[0] - pb[0]) < 20 * 1e-3 * 1e-8 / (0.05 * std::min(c, 1.0)));
        CHECK(std::abs(pa[1] - pb[1]) < 20 * 1e-3 * 1e-8 / (0.05 * std::min(c, 1.0)));
    }
}

TEST_CASE("a non-finite gradient leaves adam state and parameters untouched") {
    AdamState s(2, 1e-4);
    std::vector<double> p{1.0, 2.0};
    adam_step(s, p, std::vector<double>{0.1, 0.2});
    const AdamState before = s;
    const std::vector<double> p_before = p;
    CHECK_THROWS_AS(adam_step(s, p, std::vector<double>{0.1, std::nan("")}), NumericError);
    CHECK(s.m == before.m);
    CHECK(s.v == before.v);
    CHECK(s.step == before.step);
    CHECK(p == p_before);
    CHECK_THROWS_AS(adam_step(s, p, std::vector<double>{0.1}), ShapeError);
    CHECK_THROWS_AS(AdamState(1, 0.0), ConfigError);
}

TEST_CASE("one training step moves the parameters") {
    const LabeledSequence data = short_scene();
    Rng rng(0);
    const CompositePredictor pred = CompositePredictor::init(small_predictor(), rng);
    const TrainResult r = train(pred, data, quick_config(1));
    CHECK(flatten_params(r.predictor) != flatten_params(pred));
    REQUIRE(r.report.records.size() == 1);
    CHECK(r.report.records[0].step == 1);
}

TEST_CASE("training at the optimum stays there") {
    SceneConfig sc;
    sc.t = 8;
    sc.motion_amplitudes.assign(4, 0.0);
    const LabeledSequence data = generate_chain_scene(sc);
    const CompositePredictor pred = constant_predictor(data.frames[0]);
    TrainConfig cfg = quick_config(5);
    cfg.lr = 1e-4;
    cfg.log_every = 1;
    cfg.loss.lambda_geo = 0.5;
    const TrainResult r = train(pred, data, cfg);
    for (const TrainRecord& rec : r.report.records) CHECK(rec.loss.total == 0.0);
    const auto a = flatten_params(pred);
    const auto b = flatten_params(r.predictor);
    for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(std::abs(a[k] - b[k]) < 5e-12);

    const GradcheckReport gc = gradcheck(pred, data, cfg.loss, 20, 0);
    CHECK(gc.max_rel_error == 0.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const LabeledSequence data = short_scene(2);
    Rng r1(5);
    Rng r2(5);
    const CompositePredictor p1 = CompositePredictor::init(small_predictor(), r1);
    const CompositePredictor p2 = CompositePredictor::init(small_predictor(), r2);
    TrainConfig cfg = quick_config(40);
    cfg.seed = 5;
    const TrainResult a = train(p1, data, cfg);
    const TrainResult b = train(p2, data, cfg);
    REQUIRE(a.report.records.size() == b.report.records.size());
    for (std::size_t k = 0; k < a.report.records.size(); ++k) {
        CHECK(a.report.records[k].loss.total == b.report.records[k].loss.total);
        CHECK(a.report.records[k].metrics == b.report.records[k].metrics);
    }
    CHECK(flatten_params(a.predictor) == flatten_params(b.predictor));
}

TEST_CASE("records land on multiples of log_every and on the final step") {
    const LabeledSequence data = short_scene();
    Rng rng(0);
    const CompositePredictor pred = CompositePredictor::init(small_predictor(), rng);
    const TrainResult r = train(pred, data, quick_config(25));
    REQUIRE(r.report.records.size() == 3);
    CHECK(r.report.records[0].step == 10);
    CHECK(r.report.records[1].step == 20);
    CHECK(r.report.records[2].step == 25);
    CHECK(r.report.final_metrics == r.report.records.back().metrics);
    for (const TrainRecord& rec : r.report.records) {
        const LossBreakdown& l = rec.loss;
        CHECK(std::abs(l.total - (l.recon + 1.0 * (l.position + kDefaultLambdaGeo * l.geometric))) <=
              1e-12 * std::max(1.0, l.total));
    }
}

TEST_CASE("training rejects mismatched dimensions and bad configs") {
    const LabeledSequence data = short_scene();
    Rng rng(0);
    const CompositePredictor wrong = CompositePredictor::init(small_predictor(4, 2), rng);
    CHECK_THROWS_AS(train(wrong, data, quick_config(1)), ConfigError);
    const CompositePredictor pred = CompositePredictor::init(small_predictor(), rng);
    TrainConfig cfg = quick_config(1);
    cfg.max_steps = 0;
    CHECK_THROWS_AS(train(pred, data, cfg), ConfigError);
}

TEST_CASE("a runaway objective aborts training with the partial report") {
    SceneConfig sc;
    sc.t = 8;
    sc.bone_length = 1e7;
    const LabeledSequence data = generate_chain_scene(sc);
    Rng rng(0);
    const CompositePredictor pred = CompositePredictor::init(small_predictor(), rng);
    try {
        train(pred, data, quick_config(3));
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.report().records.empty());
    }
}

TEST_CASE("final-layer bias gradient equals the summed output gradient") {
    const LabeledSequence data = short_scene(3);
    Rng rng(3);
    const CompositePredictor pred = CompositePredictor::init(small_predictor(), rng);
    const LossConfig cfg{30.0, 0.5, 1.0};
    const ObjectiveEval eval = evaluate_objective(pred, data, cfg);

    const Sequence predicted = predict_sequence(pred, data.t());
    const auto per_frame = total_loss_grad(predicted, data.targets(), data.graph, cfg, data.masks);
    const std::size_t out = pred.m() * pred.d();
    std::vector<double> summed(out, 0.0);
    for (const Coords& g : per_frame) {
        for (std::size_t k = 0; k < out; ++k) summed[k] += g.data()[k];
    }
    const std::size_t low_bias = pred.low().parameter_count() - out;
    const std::size_t high_bias = pred.parameter_count() - out;
    for (std::size_t k = 0; k < out; ++k) {
        CHECK(std::abs(eval.grad[low_bias + k] - summed[k]) <= 1e-10 * std::max(1.0, std::abs(summed[k])));
        CHECK(std::abs(eval.grad[high_bias + k] - pred.lambda_mix() * summed[k]) <=
              1e-10 * std::max(1.0, std::abs(summed[k])));
    }
    CHECK(std::abs(eval.loss.total - total_loss(predicted, data.targets(), data.graph, cfg, data.masks).total) <=
          1e-10 * eval.loss.total);
}

TEST_CASE("end-to-end gradient check on the seed-0 default setup") {
    const LabeledSequence data = generate_chain_scene(SceneConfig{});
    Rng rng(0);
    const CompositePredictor pred = CompositePredictor::init(PredictorConfig{}, rng);
    const GradcheckReport r = gradcheck(pred, data, LossConfig{}, 50, 0);
    CHECK(r.probes.size() == 50);
    CHECK(r.max_rel_error < 1e-5);

    const GradcheckReport geo = gradcheck(pred, data, LossConfig{30.0, 0.5, 1.0}, 50, 1);
    CHECK(geo.max_rel_error < 1e-5);
}

TEST_CASE("gradcheck relative error uses a unit floor") {
    CHECK(gradcheck_relative_error(0.0, 0.0) == 0.0);
    CHECK(gradcheck_relative_error(1e-7, 0.0) == doctest::Approx(1e-7));
    CHECK(gradcheck_relative_error(200.0, 201.0) == doctest::Approx(1.0 / 201.0));
}
