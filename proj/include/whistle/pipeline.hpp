#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "whistle/audio.hpp"
#include "whistle/config.hpp"
#include "whistle/features.hpp"
#include "whistle/forest.hpp"
#include "whistle/snake.hpp"
#include "whistle/spectrogram.hpp"

namespace whistle {

/// One refined snake with its features, as stored in detections.jsonl.
struct DetectionRecord {
    std::string snippet_id;
    std::string source_path;
    int snippet_index = 0;
    double offset_seconds = 0.0;
    std::string snake_id;  // "<snippet_id>:<k>"
    Snake snake;
    FeatureVector features;
    double length_norm_l = 1.0;
    std::optional<Prediction> prediction;
    std::optional<bool> label;
};

struct SnippetInfo {
    std::string id;
    std::string source_path;
    int index = 0;
    double offset_seconds = 0.0;
    Eigen::Index frames = 0;
    Eigen::Index bins = 0;
    std::string image;    // relative to the output directory
    std::string overlay;
    int detections = 0;
};

/// A trained forest plus everything needed to rebuild its inputs.
struct ModelFile {
    RandomForestModel forest;
    FeatureConfig features;  // l and cutoffs used at training time
    bool reduced = false;
};

/// All stages from spectrogram to deduplicated snakes for one snippet.
struct SnippetAnalysis {
    Spectrogram spectrogram;
    std::vector<LineSegment> segments;
    std::vector<Snake> snakes;
};

SnippetAnalysis analyze_snippet(const AudioSnippet& snippet, const PipelineConfig& cfg);

/// Feature columns the classifier consumes (never avg_x).
std::vector<std::string> model_feature_names(bool reduced);
Eigen::MatrixXd design_matrix(const std::vector<FeatureVector>& rows, const std::vector<std::string>& names);
std::vector<int> labels_of(const std::vector<FeatureVector>& rows);

struct DetectSummary {
    int files_ok = 0;
    int files_failed = 0;
    std::vector<std::string> errors;
    std::vector<SnippetInfo> snippets;
    std::vector<DetectionRecord> records;
};

struct DetectOptions {
    bool write_images = true;
    const ModelFile* model = nullptr;
};

/// Runs the detection chain over WAV files. With write_images, writes
/// spectrograms/, overlays/, detections.jsonl, snippets.json and config.json
/// under out_dir. Per-file failures are collected, not thrown.
DetectSummary detect(const std::vector<std::filesystem::path>& wavs, const PipelineConfig& cfg,
                     const std::filesystem::path& out_dir, const DetectOptions& options = {});

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);
void write_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& records);

/// Latest label per snake id from an append-only labels log (missing file -> empty).
struct LabelEntry {
    std::string snake_id;
    bool target = false;
    int version = 0;
};
std::vector<LabelEntry> read_label_log(const std::filesystem::path& path);

struct Dataset {
    std::vector<FeatureVector> rows;
    DatasetMeta meta;
};

/// Normalizes lengths with l = compute_l over the records' snakes (or `fixed_l`),
/// applies cutoffs and attaches labels (log entries override record labels).
Dataset build_dataset(const std::vector<DetectionRecord>& records, const FeatureConfig& cutoffs,
                      const std::vector<LabelEntry>& labels = {}, std::optional<double> fixed_l = std::nullopt);

void write_dataset(const std::filesystem::path& csv_path, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& csv_path);
std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

struct TrainOutcome {
    ModelFile model;
    GridSearchResult grid;
    EvaluationReport report;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
};

/// Stratified split, grid search on the training part, refit, held-out report.
TrainOutcome train_model(const Dataset& dataset, const TrainConfig& train, std::uint64_t seed);

std::vector<Prediction> predict_rows(const ModelFile& model, const std::vector<FeatureVector>& rows);
EvaluationReport evaluate_rows(const ModelFile& model, const std::vector<FeatureVector>& rows);

/// Recomputes feature vectors of records against a model's l and cutoffs and
/// attaches predictions.
void apply_model(const ModelFile& model, std::vector<DetectionRecord>& records);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

std::string report_json(const EvaluationReport& report, const GridSearchResult* grid = nullptr);

/// Writes `text` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace whistle
