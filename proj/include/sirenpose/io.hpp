#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sirenpose/metrics.hpp"
#include "sirenpose/predictor.hpp"
#include "sirenpose/scene.hpp"
#include "sirenpose/trainer.hpp"

namespace sirenpose::io {

inline constexpr int kFormatVersion = 1;

// All documents are written with sorted keys and shortest round-trip
// floating-point text, so equal objects serialize to equal bytes and every
// double survives a save/load cycle exactly.
std::string canonical_dump(const nlohmann::json& doc);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Parses JSON text; ParseError messages carry "<origin>:<line>:<column>".
nlohmann::json parse_json(const std::string& text, const std::string& origin);

nlohmann::json scene_config_to_json(const SceneConfig& cfg);
// Missing keys fall back to SceneConfig::defaults_for(m).
SceneConfig scene_config_from_json(const nlohmann::json& doc);

nlohmann::json dataset_to_json(const LabeledSequence& seq);
LabeledSequence dataset_from_json(const nlohmann::json& doc);
void save_dataset(const std::filesystem::path& path, const LabeledSequence& seq);
LabeledSequence load_dataset(const std::filesystem::path& path);

struct Checkpoint {
    CompositePredictor predictor;
    TrainConfig train;  // train.loss is stored under "loss_cfg"

    std::optional<MetricReport> final_metrics;

    bool operator==(const Checkpoint& other) const;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Training log: one row per logged step.
inline constexpr std::string_view kMetricsCsvHeader = "step,total,recon,position,geometric,epe,mse,tc,ga";
// Evaluation output: a single MetricReport row.
inline constexpr std::string_view kMetricReportCsvHeader = "epe,mse,tc,ga,epe_score,mse_score";
inline constexpr std::string_view kPlotCsvHeader = "step,loss,epe";

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string metrics_csv(const std::vector<TrainRecord>& records);
std::string metric_report_csv(const MetricReport& report);

struct MetricsRow {
    std::size_t step = 0;
    double total = 0.0;
    double recon = 0.0;
    double position = 0.0;
    double geometric = 0.0;
    double epe = 0.0;
    double mse = 0.0;
    double tc = 0.0;
    double ga = 0.0;
};

// Throws SchemaError on a wrong header, column count, or non-finite field.
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);
std::string plot_csv(const std::vector<MetricsRow>& rows);

}  // namespace sirenpose::io
