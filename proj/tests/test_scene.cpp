#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sirenpose/errors.hpp"
#include "sirenpose/loss.hpp"
#include "sirenpose/scene.hpp"

using namespace sirenpose;

namespace {

double max_bone_error(const LabeledSequence& seq, double bone) {
    double worst = 0.0;
    for (const KeypointSet& f : seq.frames) {
        for (const Edge& e : seq.graph.edges()) worst = std::max(worst, std::abs(keypoint_distance(f, e.i, e.j) - bone));
    }
    return worst;
}

double max_step_displacement(const LabeledSequence& seq) {
    double worst = 0.0;
    for (std::size_t t = 1; t < seq.t(); ++t) {
        const Coords diff = seq.frames[t].coords() - seq.frames[t - 1].coords();
        worst = std::max(worst, diff.rowwise().norm().maxCoeff());
    }
    return worst;
}

}  // namespace

TEST_CASE("zero amplitudes give a static straight chain") {
    SceneConfig cfg;
    cfg.motion_amplitudes.assign(4, 0.0);
    cfg.bone_length = 0.5;
    const LabeledSequence seq = generate_chain_scene(cfg);
    for (const KeypointSet& f : seq.frames) {
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(f(i, 0) == doctest::Approx(0.5 * static_cast<double>(i)).epsilon(1e-15));
            CHECK(f(i, 1) == 0.0);
        }
    }
}

TEST_CASE("bone lengths are conserved on ground truth") {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        for (std::size_t d : {2u, 3u}) {
            SceneConfig cfg = SceneConfig::defaults_for(7);
            cfg.d = d;
            cfg.t = 200;
            cfg.bone_length = 1.7;
            cfg.seed = seed;
            cfg.noise_sigma = 0.1;
            const LabeledSequence seq = generate_chain_scene(cfg);
            CHECK(max_bone_error(seq, 1.7) < 1e-9);
            for (const KeypointSet& f : seq.frames) CHECK(f.coords().row(0).isZero(0.0));
        }
    }
}

TEST_CASE("seed-0 default scene frame 0 matches the frozen golden file") {
    std::ifstream in(std::string(SIRENPOSE_TEST_DATA_DIR) + "/scene_seed0_frame0.json");
    REQUIRE(in.good());
    const nlohmann::json golden = nlohmann::json::parse(in);
    const LabeledSequence seq = generate_chain_scene(SceneConfig{});
    REQUIRE(seq.t() == 64);
    const KeypointSet& f = seq.frames[0];
    REQUIRE(golden["coords"].size() == f.m());
    for (std::size_t i = 0; i < f.m(); ++i) {
        for (std::size_t d = 0; d < f.d(); ++d) {
            CHECK(f(i, d) == doctest::Approx(golden["coords"][i][d].get<double>()).epsilon(1e-12));
        }
    }
}

TEST_CASE("equal seeds give identical scenes and different seeds differ") {
    SceneConfig cfg;
    cfg.noise_sigma = 0.05;
    cfg.occlusion_rate = 0.2;
    CHECK(generate_chain_scene(cfg) == generate_chain_scene(cfg));
    SceneConfig other = cfg;
    other.seed = 1;
    CHECK_FALSE(generate_chain_scene(cfg).frames == generate_chain_scene(other).frames);
}

TEST_CASE("visibility fraction follows the occlusion rate") {
    SceneConfig cfg = SceneConfig::defaults_for(10);
    cfg.t = 200;
    cfg.occlusion_rate = 0.3;
    cfg.seed = 4;
    const LabeledSequence seq = generate_chain_scene(cfg);
    std::size_t shown = 0;
    for (const auto& row : seq.masks) {
        for (bool v : row) shown += v ? 1 : 0;
    }
    const double frac = static_cast<double>(shown) / 2000.0;
    CHECK(std::abs(frac - 0.7) <= 0.05);
}

TEST_CASE("perturbation noise has the requested spread and leaves truth alone") {
    SceneConfig cfg = SceneConfig::defaults_for(10);
    cfg.t = 500;
    const LabeledSequence seq = generate_chain_scene(cfg);
    const LabeledSequence noisy = perturb_sequence(seq, 0.1, 3);
    CHECK(noisy.frames == seq.frames);
    double sum = 0.0;
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < seq.t(); ++t) {
        const Coords diff = noisy.noisy_frames[t].coords() - seq.frames[t].coords();
        sum += diff.sum();
        sq += diff.squaredNorm();
        n += static_cast<std::size_t>(diff.size());
    }
    REQUIRE(n >= 10000);
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(std::abs(sd - 0.1) <= 0.005);

    CHECK(perturb_sequence(seq, 0.1, 3) == noisy);
    CHECK(perturb_sequence(seq, 0.0, 3).noisy_frames == seq.frames);
    CHECK_THROWS_AS(perturb_sequence(seq, -0.1, 3), DomainError);
}

TEST_CASE("per-frame displacement stays within the kinematic bound") {
    // Joint j turns by at most A_j * f_j per frame, and bone b swings with the
    // sum of the b+1 joints above it.
    for (std::size_t d : {2u, 3u}) {
        SceneConfig cfg = SceneConfig::defaults_for(6);
        cfg.d = d;
        cfg.t = 300;
        cfg.bone_length = 1.3;
        const LabeledSequence seq = generate_chain_scene(cfg);
        const double n = 5.0;
        double bound = cfg.bone_length * n * (n + 1.0) / 2.0 * 0.6 * 0.25;
        if (d == 3) bound *= std::sqrt(2.0);  // azimuth and elevation swing together
        CHECK(max_step_displacement(seq) <= bound);
        CHECK(max_step_displacement(seq) > 0.0);
    }
}

TEST_CASE("invalid scene configurations are rejected") {
    SceneConfig cfg;
    cfg.m = 1;
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
    cfg = SceneConfig{};
    cfg.d = 1;
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
    cfg = SceneConfig{};
    cfg.t = 1;
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
    cfg = SceneConfig{};
    cfg.motion_amplitudes.pop_back();
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
    cfg = SceneConfig{};
    cfg.occlusion_rate = 1.0;
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
    cfg = SceneConfig{};
    cfg.bone_length = 0.0;
    CHECK_THROWS_AS(generate_chain_scene(cfg), ConfigError);
}
