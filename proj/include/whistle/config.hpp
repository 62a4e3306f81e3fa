#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "whistle/features.hpp"
#include "whistle/forest.hpp"
#include "whistle/hough.hpp"
#include "whistle/ridge.hpp"
#include "whistle/snake.hpp"
#include "whistle/spectrogram.hpp"

namespace whistle {

inline constexpr int kConfigSchemaVersion = 1;

struct TrainConfig {
    GridSpec grid;
    double split_ratio = 0.7;
    int k_folds = 5;
    bool reduced = false;  // drop avg_density, length and avg_y
};

struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;
    StftConfig stft;
    FrangiConfig frangi;
    HoughConfig hough;
    SnakeConfig snake;
    FeatureConfig feature;
    TrainConfig train;
    double window_seconds = 3.0;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int workers = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// Reads a JSON config; missing fields keep their defaults. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text);
std::string dump_config(const PipelineConfig& cfg);

}  // namespace whistle
