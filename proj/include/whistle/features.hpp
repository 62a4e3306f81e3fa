#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "whistle/snake.hpp"
#include "whistle/spectrogram.hpp"

namespace whistle {

struct FeatureConfig {
    double length_norm_l = 1.0;        // normalization length l, pixels
    double low_density_cutoff = 0.8;   // relative mass at or below this is "low density"
    double long_cutoff = 3.0;          // normalized length at or above this is "long"
    /// Centroid frequency bin at or below which a snake counts as "low". There is
    /// no universal value; this default (~1.9 kHz at 187.5 Hz/bin) suits the
    /// bundled STFT defaults.
    double low_freq_cutoff_y = 10.0;

    void validate() const;
};

struct FeatureVector {
    double avg_x = 0.0;
    double avg_y = 0.0;
    double avg_density = 0.0;
    double relative_density = 0.0;
    double inertia = 0.0;
    double length = 0.0;
    bool low_density = false;
    bool long_ = false;
    bool low = false;
    std::optional<bool> target;
};

/// Dataset column order, also the CSV header.
inline constexpr std::array<std::string_view, 10> kDatasetColumns{
    "avg_density", "avg_x", "avg_y", "inertia", "length", "relative_density", "low_density", "long", "low", "target"};

/// The nine feature columns (no target) in dataset order.
Eigen::Matrix<double, 9, 1> as_row(const FeatureVector& v);

Eigen::Vector2d centroid(const Snake& snake);
double endpoint_distance(const Snake& snake);
double normalized_length(const Snake& snake, double l);
double inertia(const Snake& snake, const Spectrogram& image);
double avg_mass(const Snake& snake, const Spectrogram& image);
double relative_mass(const Snake& snake, const Spectrogram& image);

/// Binary pattern flags from their continuous counterparts.
void apply_cutoffs(FeatureVector& v, const FeatureConfig& cfg);

/// Rounds the continuous fields to the six decimals the CSV stores.
void quantize(FeatureVector& v);

FeatureVector build_feature_vector(const Snake& snake, const Spectrogram& image, const FeatureConfig& cfg);

/// Shortest endpoint distance over a set of snakes.
double compute_l(const std::vector<Snake>& snakes);

/// Pearson correlation over the 10 dataset columns (booleans as 0/1, target
/// missing -> 0). Constant columns correlate 0 with others and 1 with themselves.
Eigen::Matrix<double, 10, 10> correlation_matrix(const std::vector<FeatureVector>& rows);
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& columns);

struct DatasetMeta {
    double length_norm_l = 1.0;
    double low_density_cutoff = 0.8;
    double long_cutoff = 3.0;
    double low_freq_cutoff_y = 10.0;
    std::vector<std::string> row_ids;  // snake identifiers in row order
};

std::string csv_header();
std::string csv_row(const FeatureVector& v);
void write_dataset_csv(std::ostream& out, const std::vector<FeatureVector>& rows);
std::vector<FeatureVector> read_dataset_csv(std::istream& in);

}  // namespace whistle
