#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <vector>

#include "sirenpose/trainer.hpp"

using namespace sirenpose;

// Default run, loss logged every step. The mean loss over consecutive
// 500-step windows past step 1000 may rise at most twice.
TEST_CASE("windowed training loss is non-increasing on the default run") {
    const LabeledSequence data = generate_chain_scene(SceneConfig{});
    Rng rng(0);
    const CompositePredictor pred = CompositePredictor::init(PredictorConfig{}, rng);
    TrainConfig cfg;
    cfg.log_every = 1;
    const TrainResult r = train(pred, data, cfg);
    REQUIRE(r.report.records.size() == 10000);

    constexpr std::size_t kWindow = 500;
    std::vector<double> means;
    for (std::size_t start = 1000; start + kWindow <= r.report.records.size(); start += kWindow) {
        double sum = 0.0;
        for (std::size_t k = start; k < start + kWindow; ++k) sum += r.report.records[k].loss.total;
        means.push_back(sum / kWindow);
    }
    int rises = 0;
    for (std::size_t k = 1; k < means.size(); ++k) {
        if (means[k] > means[k - 1]) {
            ++rises;
            std::printf("window ending at step %zu: mean %.6g > previous %.6g\n", 1000 + (k + 1) * kWindow, means[k],
                        means[k - 1]);
        }
    }
    CHECK(rises <= 2);
}
