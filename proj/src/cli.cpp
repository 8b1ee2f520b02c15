#include "sirenpose/cli.hpp"

#include <cstdlib>
#include <optional>
#include <vector>

#include "CLI11.hpp"

#include "sirenpose/errors.hpp"
#include "sirenpose/io.hpp"
#include "sirenpose/metrics.hpp"
#include "sirenpose/scene.hpp"
#include "sirenpose/trainer.hpp"

namespace sirenpose {

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

constexpr double kGradcheckTolerance = 1e-5;

// Flag wins over SIRENPOSE_SEED, which wins over the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (const char* env = std::getenv("SIRENPOSE_SEED"); env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const unsigned long long v = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
            return v;
        } catch (const std::exception&) {
            throw UsageError(std::string("SIRENPOSE_SEED is not an unsigned integer: '") + env + "'");
        }
    }
    return fallback;
}

struct LossFlags {
    double omega0 = kDefaultOmega0;
    double lambda_geo = kDefaultLambdaGeo;
    double lambda_sp = 1.0;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--omega0", omega0, "Sine frequency factor (network and loss)")->capture_default_str();
        cmd.add_option("--lambda-geo", lambda_geo, "Weight of the sinusoidal geometric term")->capture_default_str();
        cmd.add_option("--lambda-sp", lambda_sp, "Weight of the SirenPose loss in the total")->capture_default_str();
    }
    LossConfig config() const { return LossConfig{omega0, lambda_geo, lambda_sp}; }
};

int run_generate(const std::string& config_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& seed_flag, std::ostream& out) {
    SceneConfig cfg;
    if (!config_path.empty()) {
        cfg = io::scene_config_from_json(io::parse_json(io::read_file(config_path), config_path));
    }
    cfg.seed = resolve_seed(seed_flag, cfg.seed);
    const LabeledSequence seq = generate_chain_scene(cfg);
    io::save_dataset(out_path, seq);
    out << "wrote " << seq.t() << " frames of " << seq.m() << " keypoints to " << out_path << "\n";
    return kExitOk;
}

struct TrainFlags {
    std::string data;
    std::string out;
    std::string log;
    double lr = 1e-4;
    std::size_t batch_size = 64;
    std::size_t steps = 10000;
    std::size_t log_every = 100;
    double lambda_mix = 0.1;
    std::vector<std::size_t> low_hidden{64, 64};
    std::vector<std::size_t> high_hidden{128, 128, 128};
    std::optional<std::uint64_t> seed;
    LossFlags loss;
};

int run_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    const LabeledSequence data = io::load_dataset(f.data);

    TrainConfig cfg;
    cfg.lr = f.lr;
    cfg.batch_size = f.batch_size;
    cfg.max_steps = f.steps;
    cfg.log_every = f.log_every;
    cfg.seed = resolve_seed(f.seed, 0);
    cfg.loss = f.loss.config();
    cfg.validate();

    PredictorConfig pc;
    pc.m = data.m();
    pc.d = data.d();
    pc.low_hidden = f.low_hidden;
    pc.high_hidden = f.high_hidden;
    pc.omega0 = cfg.loss.omega0;
    pc.lambda_mix = f.lambda_mix;
    Rng rng(cfg.seed);
    CompositePredictor pred = CompositePredictor::init(pc, rng);

    auto observer = [&err](const TrainRecord& r) {
        err << "step " << r.step << " total " << io::format_double(r.loss.total) << " epe "
            << io::format_double(r.metrics.epe) << "\n";
    };

    TrainResult result;
    try {
        result = train(std::move(pred), data, cfg, observer);
    } catch (const TrainingDiverged& e) {
        if (!f.log.empty()) io::write_file_atomic(f.log, io::metrics_csv(e.report().records));
        throw;
    }

    io::Checkpoint ckpt{result.predictor, cfg, result.report.final_metrics};
    io::save_checkpoint(f.out, ckpt);
    if (!f.log.empty()) io::write_file_atomic(f.log, io::metrics_csv(result.report.records));

    const MetricReport& m = result.report.final_metrics;
    out << "steps " << cfg.max_steps << " epe " << io::format_double(m.epe) << " mse " << io::format_double(m.mse)
        << " tc " << io::format_double(m.temporal_consistency) << " ga " << io::format_double(m.geometric_accuracy)
        << "\n";
    return kExitOk;
}

int run_eval(const std::string& data_path, const std::string& ckpt_path, const std::string& out_path,
             std::ostream& out) {
    const LabeledSequence data = io::load_dataset(data_path);
    const io::Checkpoint ckpt = io::load_checkpoint(ckpt_path);
    if (ckpt.predictor.m() != data.m() || ckpt.predictor.d() != data.d()) {
        throw SchemaError("checkpoint predicts " + std::to_string(ckpt.predictor.m()) + "x" +
                          std::to_string(ckpt.predictor.d()) + " keypoints, dataset has " + std::to_string(data.m()) +
                          "x" + std::to_string(data.d()));
    }
    const Sequence predicted = predict_sequence(ckpt.predictor, data.t());
    const MetricReport report = evaluate(predicted, data.frames, data.graph);
    io::write_file_atomic(out_path, io::metric_report_csv(report));
    out << io::metric_report_csv(report);
    return kExitOk;
}

int run_gradcheck(std::size_t probes, const std::optional<std::uint64_t>& seed_flag, const LossFlags& loss,
                  std::ostream& out) {
    const std::uint64_t seed = resolve_seed(seed_flag, 0);
    SceneConfig sc;
    sc.seed = seed;
    const LabeledSequence data = generate_chain_scene(sc);
    PredictorConfig pc;
    pc.m = data.m();
    pc.d = data.d();
    pc.omega0 = loss.omega0;
    Rng rng(seed);
    const CompositePredictor pred = CompositePredictor::init(pc, rng);
    const GradcheckReport report = gradcheck(pred, data, loss.config(), probes, seed);
    out << "max relative error " << io::format_double(report.max_rel_error) << " over " << report.probes.size()
        << " probes\n";
    return report.max_rel_error < kGradcheckTolerance ? kExitOk : kExitNumeric;
}

int run_export_plot(const std::string& log_path, const std::string& out_path) {
    const auto rows = io::parse_metrics_csv(io::read_file(log_path));
    io::write_file_atomic(out_path, io::plot_csv(rows));
    return kExitOk;
}

}  // namespace

int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Keypoint trajectory fitting with a sinusoidal network and the SirenPose loss", "sirenpose"};
    app.require_subcommand(1);

    std::string gen_config;
    std::string gen_out;
    std::optional<std::uint64_t> gen_seed;
    auto* gen = app.add_subcommand("generate", "Write a synthetic articulated-chain dataset");
    gen->add_option("--config", gen_config, "Scene configuration JSON (defaults when omitted)");
    gen->add_option("--out", gen_out, "Dataset path")->required();
    gen->add_option("--seed", gen_seed, "Override the scene seed");

    TrainFlags tf;
    auto* tr = app.add_subcommand("train", "Fit a predictor to a dataset");
    tr->add_option("--data", tf.data, "Dataset path")->required();
    tr->add_option("--out", tf.out, "Checkpoint path")->required();
    tr->add_option("--log", tf.log, "Training log CSV path");
    tr->add_option("--lr", tf.lr, "Adam learning rate")->capture_default_str();
    tr->add_option("--batch-size", tf.batch_size, "Frames per step")->capture_default_str();
    tr->add_option("--steps", tf.steps, "Optimizer steps")->capture_default_str();
    tr->add_option("--log-every", tf.log_every, "Steps between log records")->capture_default_str();
    tr->add_option("--lambda-mix", tf.lambda_mix, "Weight of the high-frequency branch")->capture_default_str();
    tr->add_option("--low-hidden", tf.low_hidden, "Hidden widths of the tanh branch")->delimiter(',')->capture_default_str();
    tr->add_option("--high-hidden", tf.high_hidden, "Hidden widths of the sine branch")->delimiter(',')->capture_default_str();
    tr->add_option("--seed", tf.seed, "Initialization and batching seed");
    tf.loss.add_to(*tr);

    std::string ev_data;
    std::string ev_ckpt;
    std::string ev_out;
    auto* ev = app.add_subcommand("eval", "Score a checkpoint against a dataset's ground truth");
    ev->add_option("--data", ev_data, "Dataset path")->required();
    ev->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
    ev->add_option("--out", ev_out, "Metric CSV path")->required();

    std::size_t gc_probes = 50;
    std::optional<std::uint64_t> gc_seed;
    LossFlags gc_loss;
    auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    gc->add_option("--probes", gc_probes, "Parameters to probe")->capture_default_str()->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed, "Scene, predictor and probe seed");
    gc_loss.add_to(*gc);

    std::string ep_log;
    std::string ep_out;
    auto* ep = app.add_subcommand("export-plot", "Reduce a training log to step,loss,epe columns");
    ep->add_option("--log", ep_log, "Training log CSV")->required();
    ep->add_option("--out", ep_out, "Plot CSV path")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*gen) return run_generate(gen_config, gen_out, gen_seed, out);
        if (*tr) return run_train(tf, out, err);
        if (*ev) return run_eval(ev_data, ev_ckpt, ev_out, out);
        if (*gc) return run_gradcheck(gc_probes, gc_seed, gc_loss, out);
        if (*ep) return run_export_plot(ep_log, ep_out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace sirenpose
