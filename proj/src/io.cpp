#include "sirenpose/io.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sirenpose/errors.hpp"

namespace sirenpose::io {

using nlohmann::json;

namespace {

const json& require(const json& doc, const std::string& key) {
    if (!doc.is_object()) throw SchemaError("expected a JSON object while looking for '" + key + "'");
    auto it = doc.find(key);
    if (it == doc.end()) throw SchemaError("missing key '" + key + "'");
    return *it;
}

template <typename T>
T get_as(const json& value, const std::string& key) {
    try {
        return value.get<T>();
    } catch (const json::exception& e) {
        throw SchemaError("key '" + key + "' has the wrong type: " + e.what());
    }
}

template <typename T>
T get_key(const json& doc, const std::string& key) {
    return get_as<T>(require(doc, key), key);
}

double get_finite(const json& value, const std::string& key) {
    if (!value.is_number()) throw SchemaError("key '" + key + "' must hold numbers");
    const double x = value.get<double>();
    if (!std::isfinite(x)) throw SchemaError("key '" + key + "' holds a non-finite number");
    return x;
}

std::size_t get_size(const json& doc, const std::string& key) {
    const json& v = require(doc, key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw SchemaError("key '" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

void check_version(const json& doc) {
    const json& v = require(doc, "version");
    if (!v.is_number_integer() || v.get<long long>() != kFormatVersion) {
        throw SchemaError("key 'version' must be " + std::to_string(kFormatVersion));
    }
}

json frames_to_json(const Sequence& frames) {
    json out = json::array();
    for (const KeypointSet& f : frames) {
        json frame = json::array();
        for (std::size_t i = 0; i < f.m(); ++i) {
            json point = json::array();
            for (std::size_t k = 0; k < f.d(); ++k) point.push_back(f(i, k));
            frame.push_back(std::move(point));
        }
        out.push_back(std::move(frame));
    }
    return out;
}

Sequence frames_from_json(const json& doc, const std::string& key, std::size_t t, std::size_t m, std::size_t d) {
    const json& arr = require(doc, key);
    if (!arr.is_array() || arr.size() != t) {
        throw SchemaError("key '" + key + "' must be an array of t = " + std::to_string(t) + " frames");
    }
    Sequence frames;
    frames.reserve(t);
    for (const json& frame : arr) {
        if (!frame.is_array() || frame.size() != m) {
            throw SchemaError("key '" + key + "': every frame needs m = " + std::to_string(m) + " keypoints");
        }
        Coords c(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < m; ++i) {
            const json& point = frame[i];
            if (!point.is_array() || point.size() != d) {
                throw SchemaError("key '" + key + "': every keypoint needs d = " + std::to_string(d) + " coordinates");
            }
            for (std::size_t k = 0; k < d; ++k) {
                c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = get_finite(point[k], key);
            }
        }
        frames.emplace_back(std::move(c));
    }
    return frames;
}

json metric_report_to_json(const MetricReport& r) {
    return json{{"epe", r.epe},
                {"mse", r.mse},
                {"temporal_consistency", r.temporal_consistency},
                {"geometric_accuracy", r.geometric_accuracy},
                {"epe_score", r.epe_score},
                {"mse_score", r.mse_score}};
}

MetricReport metric_report_from_json(const json& doc) {
    MetricReport r;
    r.epe = get_finite(require(doc, "epe"), "epe");
    r.mse = get_finite(require(doc, "mse"), "mse");
    r.temporal_consistency = get_finite(require(doc, "temporal_consistency"), "temporal_consistency");
    r.geometric_accuracy = get_finite(require(doc, "geometric_accuracy"), "geometric_accuracy");
    r.epe_score = get_finite(require(doc, "epe_score"), "epe_score");
    r.mse_score = get_finite(require(doc, "mse_score"), "mse_score");
    return r;
}

json loss_config_to_json(const LossConfig& c) {
    return json{{"omega0", c.omega0}, {"lambda_geo", c.lambda_geo}, {"lambda_sp", c.lambda_sp}};
}

LossConfig loss_config_from_json(const json& doc) {
    LossConfig c;
    c.omega0 = get_finite(require(doc, "omega0"), "omega0");
    c.lambda_geo = get_finite(require(doc, "lambda_geo"), "lambda_geo");
    c.lambda_sp = get_finite(require(doc, "lambda_sp"), "lambda_sp");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("key 'loss_cfg': ") + e.what());
    }
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"lr", c.lr},
                {"batch_size", c.batch_size},
                {"max_steps", c.max_steps},
                {"seed", c.seed},
                {"log_every", c.log_every},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"eps", c.eps}};
}

TrainConfig train_config_from_json(const json& doc) {
    TrainConfig c;
    c.lr = get_finite(require(doc, "lr"), "lr");
    c.batch_size = get_size(doc, "batch_size");
    c.max_steps = get_size(doc, "max_steps");
    c.seed = get_key<std::uint64_t>(doc, "seed");
    c.log_every = get_size(doc, "log_every");
    c.beta1 = get_finite(require(doc, "beta1"), "beta1");
    c.beta2 = get_finite(require(doc, "beta2"), "beta2");
    c.eps = get_finite(require(doc, "eps"), "eps");
    return c;
}

json branch_to_json(const Mlp& net) {
    json activations = json::array();
    for (const auto& layer : net.layers()) activations.push_back(to_string(layer.activation.kind));
    return json{{"sizes", net.architecture()}, {"activations", activations}};
}

Mlp branch_from_json(const json& doc, const std::string& key, double omega0) {
    const auto sizes = get_key<std::vector<std::size_t>>(doc, "sizes");
    const auto names = get_key<std::vector<std::string>>(doc, "activations");
    if (sizes.size() < 2 || names.size() != sizes.size() - 1) {
        throw SchemaError("key '" + key + "': need one activation per layer and at least two sizes");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (sizes[l] == 0 || sizes[l + 1] == 0) throw SchemaError("key '" + key + "': layer sizes must be positive");
        DenseLayer layer;
        layer.weights = WeightMatrix::Zero(static_cast<Eigen::Index>(sizes[l + 1]), static_cast<Eigen::Index>(sizes[l]));
        layer.biases = Vector::Zero(static_cast<Eigen::Index>(sizes[l + 1]));
        ActivationKind kind;
        try {
            kind = activation_kind_from_string(names[l]);
        } catch (const ConfigError& e) {
            throw SchemaError("key '" + key + "': " + e.what());
        }
        layer.activation = kind == ActivationKind::Sine ? Activation::sine(omega0) : Activation{kind, 0.0};
        layers.push_back(std::move(layer));
    }
    try {
        return Mlp(std::move(layers));
    } catch (const ConfigError& e) {
        throw SchemaError("key '" + key + "': " + e.what());
    }
}

std::size_t line_of_offset(const std::string& text, std::size_t offset, std::size_t& column) {
    offset = std::min(offset, text.size());
    std::size_t line = 1;
    std::size_t line_start = 0;
    for (std::size_t k = 0; k < offset; ++k) {
        if (text[k] == '\n') {
            ++line;
            line_start = k + 1;
        }
    }
    column = offset - line_start + 1;
    return line;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& cell, std::size_t line) {
    double value = 0.0;
    const char* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw SchemaError("line " + std::to_string(line) + ": '" + cell + "' is not a finite number");
    }
    return value;
}

}  // namespace

std::string canonical_dump(const json& doc) { return doc.dump() + "\n"; }

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t column = 0;
        // byte is 1-based and points just past the offending character.
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        const std::size_t line = line_of_offset(text, offset, column);
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
    }
}

json scene_config_to_json(const SceneConfig& cfg) {
    return json{{"m", cfg.m},
                {"d", cfg.d},
                {"t", cfg.t},
                {"bone_length", cfg.bone_length},
                {"motion_frequencies", cfg.motion_frequencies},
                {"motion_amplitudes", cfg.motion_amplitudes},
                {"noise_sigma", cfg.noise_sigma},
                {"occlusion_rate", cfg.occlusion_rate},
                {"seed", cfg.seed}};
}

SceneConfig scene_config_from_json(const json& doc) {
    if (!doc.is_object()) throw SchemaError("scene config must be a JSON object");
    const std::size_t m = doc.contains("m") ? get_size(doc, "m") : SceneConfig{}.m;
    SceneConfig cfg = SceneConfig::defaults_for(m);
    if (doc.contains("d")) cfg.d = get_size(doc, "d");
    if (doc.contains("t")) cfg.t = get_size(doc, "t");
    if (doc.contains("bone_length")) cfg.bone_length = get_finite(doc["bone_length"], "bone_length");
    if (doc.contains("motion_frequencies")) {
        cfg.motion_frequencies = get_key<std::vector<double>>(doc, "motion_frequencies");
    }
    if (doc.contains("motion_amplitudes")) {
        cfg.motion_amplitudes = get_key<std::vector<double>>(doc, "motion_amplitudes");
    }
    if (doc.contains("noise_sigma")) cfg.noise_sigma = get_finite(doc["noise_sigma"], "noise_sigma");
    if (doc.contains("occlusion_rate")) cfg.occlusion_rate = get_finite(doc["occlusion_rate"], "occlusion_rate");
    if (doc.contains("seed")) cfg.seed = get_key<std::uint64_t>(doc, "seed");
    return cfg;
}

json dataset_to_json(const LabeledSequence& seq) {
    seq.validate();
    json edges = json::array();
    for (const Edge& e : seq.graph.edges()) edges.push_back(json::array({e.i, e.j}));
    json doc{{"version", kFormatVersion},
             {"m", seq.m()},
             {"d", seq.d()},
             {"t", seq.t()},
             {"edges", edges},
             {"reference_lengths", seq.graph.reference_lengths()},
             {"frames", frames_to_json(seq.frames)}};
    if (!seq.noisy_frames.empty()) doc["noisy_frames"] = frames_to_json(seq.noisy_frames);
    if (!seq.masks.empty()) doc["masks"] = seq.masks;
    if (seq.generator_config) doc["generator_config"] = scene_config_to_json(*seq.generator_config);
    return doc;
}

LabeledSequence dataset_from_json(const json& doc) {
    check_version(doc);
    const std::size_t m = get_size(doc, "m");
    const std::size_t d = get_size(doc, "d");
    const std::size_t t = get_size(doc, "t");
    if (t == 0) throw SchemaError("key 't' must be at least 1");
    if (m == 0) throw SchemaError("key 'm' must be at least 1");
    if (d < 1 || d > 3) throw SchemaError("key 'd' must be 1, 2 or 3");

    LabeledSequence seq;
    seq.frames = frames_from_json(doc, "frames", t, m, d);
    if (doc.contains("noisy_frames")) seq.noisy_frames = frames_from_json(doc, "noisy_frames", t, m, d);
    if (doc.contains("masks")) {
        seq.masks = get_key<SequenceMask>(doc, "masks");
        try {
            check_mask(seq.masks, t, m);
        } catch (const ShapeError& e) {
            throw SchemaError(std::string("key 'masks': ") + e.what());
        }
    }

    const auto edge_pairs = get_key<std::vector<std::vector<std::size_t>>>(doc, "edges");
    const auto lengths = get_key<std::vector<double>>(doc, "reference_lengths");
    std::vector<Edge> edges;
    for (const auto& pair : edge_pairs) {
        if (pair.size() != 2) throw SchemaError("key 'edges': every edge is a pair [i, j]");
        edges.push_back({pair[0], pair[1]});
    }
    try {
        seq.graph = SkeletonGraph(std::move(edges), lengths);
        seq.graph.check_indices(m);
    } catch (const Error& e) {
        throw SchemaError(std::string("key 'edges': ") + e.what());
    }

    if (doc.contains("generator_config")) {
        seq.generator_config = scene_config_from_json(doc["generator_config"]);
    }
    return seq;
}

void save_dataset(const std::filesystem::path& path, const LabeledSequence& seq) {
    write_file_atomic(path, canonical_dump(dataset_to_json(seq)));
}

LabeledSequence load_dataset(const std::filesystem::path& path) {
    return dataset_from_json(parse_json(read_file(path), path.string()));
}

bool Checkpoint::operator==(const Checkpoint& other) const {
    auto same_shape = [](const Mlp& a, const Mlp& b) {
        if (a.architecture() != b.architecture()) return false;
        for (std::size_t l = 0; l < a.num_layers(); ++l) {
            if (!(a.layer(l).activation == b.layer(l).activation)) return false;
        }
        return true;
    };
    return predictor.m() == other.predictor.m() && predictor.d() == other.predictor.d() &&
           predictor.lambda_mix() == other.predictor.lambda_mix() &&
           same_shape(predictor.low(), other.predictor.low()) && same_shape(predictor.high(), other.predictor.high()) &&
           flatten_params(predictor) == flatten_params(other.predictor) && train == other.train &&
           final_metrics == other.final_metrics;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
    const CompositePredictor& p = ckpt.predictor;
    double omega0 = 0.0;
    for (const auto& layer : p.high().layers()) {
        if (layer.activation.kind == ActivationKind::Sine) omega0 = layer.activation.omega0;
    }
    json doc{{"version", kFormatVersion},
             {"m", p.m()},
             {"d", p.d()},
             {"omega0", omega0},
             {"lambda_mix", p.lambda_mix()},
             {"low_branch", branch_to_json(p.low())},
             {"high_branch", branch_to_json(p.high())},
             {"parameters", flatten_params(p)},
             {"loss_cfg", loss_config_to_json(ckpt.train.loss)},
             {"train_cfg", train_config_to_json(ckpt.train)}};
    doc["final_metrics"] = ckpt.final_metrics ? metric_report_to_json(*ckpt.final_metrics) : json(nullptr);
    return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
    check_version(doc);
    const std::size_t m = get_size(doc, "m");
    const std::size_t d = get_size(doc, "d");
    const double omega0 = get_finite(require(doc, "omega0"), "omega0");
    const double lambda_mix = get_finite(require(doc, "lambda_mix"), "lambda_mix");
    Mlp low = branch_from_json(require(doc, "low_branch"), "low_branch", omega0);
    Mlp high = branch_from_json(require(doc, "high_branch"), "high_branch", omega0);

    const json& params_json = require(doc, "parameters");
    if (!params_json.is_array()) throw SchemaError("key 'parameters' must be an array");
    std::vector<double> params;
    params.reserve(params_json.size());
    for (const json& v : params_json) params.push_back(get_finite(v, "parameters"));

    Checkpoint ckpt;
    try {
        ckpt.predictor = CompositePredictor(std::move(low), std::move(high), lambda_mix, m, d);
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("checkpoint architecture: ") + e.what());
    }
    if (params.size() != ckpt.predictor.parameter_count()) {
        throw SchemaError("key 'parameters' has " + std::to_string(params.size()) + " values, architecture needs " +
                          std::to_string(ckpt.predictor.parameter_count()));
    }
    ckpt.predictor = unflatten_params(std::move(ckpt.predictor), params);
    ckpt.train = train_config_from_json(require(doc, "train_cfg"));
    ckpt.train.loss = loss_config_from_json(require(doc, "loss_cfg"));
    const json& fm = require(doc, "final_metrics");
    if (!fm.is_null()) ckpt.final_metrics = metric_report_from_json(fm);
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    write_file_atomic(path, canonical_dump(checkpoint_to_json(ckpt)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(parse_json(read_file(path), path.string()));
}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw NumericError("cannot format number");
    return std::string(buf, ptr);
}

std::string metrics_csv(const std::vector<TrainRecord>& records) {
    std::string out(kMetricsCsvHeader);
    out += '\n';
    for (const TrainRecord& r : records) {
        out += std::to_string(r.step);
        for (double v : {r.loss.total, r.loss.recon, r.loss.position, r.loss.geometric, r.metrics.epe, r.metrics.mse,
                         r.metrics.temporal_consistency, r.metrics.geometric_accuracy}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::string metric_report_csv(const MetricReport& r) {
    std::string out(kMetricReportCsvHeader);
    out += '\n';
    bool first = true;
    for (double v : {r.epe, r.mse, r.temporal_consistency, r.geometric_accuracy, r.epe_score, r.mse_score}) {
        if (!first) out += ',';
        first = false;
        out += format_double(v);
    }
    out += '\n';
    return out;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsCsvHeader) {
        throw SchemaError("metrics CSV must start with the header '" + std::string(kMetricsCsvHeader) + "'");
    }
    std::vector<MetricsRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != 9) {
            throw SchemaError("line " + std::to_string(line_no) + ": expected 9 columns, got " +
                              std::to_string(cells.size()));
        }
        MetricsRow row;
        const double step = parse_double(cells[0], line_no);
        if (step < 0.0 || step != std::floor(step)) {
            throw SchemaError("line " + std::to_string(line_no) + ": step must be a non-negative integer");
        }
        row.step = static_cast<std::size_t>(step);
        row.total = parse_double(cells[1], line_no);
        row.recon = parse_double(cells[2], line_no);
        row.position = parse_double(cells[3], line_no);
        row.geometric = parse_double(cells[4], line_no);
        row.epe = parse_double(cells[5], line_no);
        row.mse = parse_double(cells[6], line_no);
        row.tc = parse_double(cells[7], line_no);
        row.ga = parse_double(cells[8], line_no);
        rows.push_back(row);
    }
    return rows;
}

std::string plot_csv(const std::vector<MetricsRow>& rows) {
    std::string out(kPlotCsvHeader);
    out += '\n';
    for (const MetricsRow& r : rows) {
        out += std::to_string(r.step) + ',' + format_double(r.total) + ',' + format_double(r.epe) + '\n';
    }
    return out;
}

}  // namespace sirenpose::io
