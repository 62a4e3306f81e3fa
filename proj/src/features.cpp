#include "whistle/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "whistle/error.hpp"

namespace whistle {

void FeatureConfig::validate() const {
    if (!(length_norm_l > 0.0) || !std::isfinite(length_norm_l)) throw ConfigError("feature.length_norm_l must be positive");
    if (!std::isfinite(low_density_cutoff) || !std::isfinite(long_cutoff) || !std::isfinite(low_freq_cutoff_y)) {
        throw ConfigError("feature cutoffs must be finite");
    }
    if (low_freq_cutoff_y < 0.0) throw ConfigError("feature.low_freq_cutoff_y must be non-negative");
}

Eigen::Matrix<double, 9, 1> as_row(const FeatureVector& v) {
    Eigen::Matrix<double, 9, 1> r;
    r << v.avg_density, v.avg_x, v.avg_y, v.inertia, v.length, v.relative_density, v.low_density ? 1.0 : 0.0,
        v.long_ ? 1.0 : 0.0, v.low ? 1.0 : 0.0;
    return r;
}

namespace {

void require_inside(const Snake& snake, const GridXd& grid) {
    for (Eigen::Index i = 0; i < snake.points.rows(); ++i) {
        if (!inside(grid, snake.points(i, 0), snake.points(i, 1))) {
            throw InputError("snake point outside the spectrogram");
        }
    }
}

Eigen::ArrayXd densities(const Snake& snake, const Spectrogram& image) {
    require_inside(snake, image.intensity);
    Eigen::ArrayXd d(snake.points.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = sample_bilinear(image.intensity, snake.points(i, 0), snake.points(i, 1));
    }
    return d;
}

}  // namespace

Eigen::Vector2d centroid(const Snake& snake) {
    if (snake.points.rows() == 0) throw InputError("centroid of an empty snake");
    return snake.points.colwise().mean().transpose();
}

double endpoint_distance(const Snake& snake) {
    if (snake.points.rows() == 0) throw InputError("empty snake");
    return (snake.points.row(snake.points.rows() - 1) - snake.points.row(0)).norm();
}

double normalized_length(const Snake& snake, double l) {
    if (!(l > 0.0)) throw InputError("normalization length l must be positive");
    return endpoint_distance(snake) / l;
}

double inertia(const Snake& snake, const Spectrogram& image) {
    const Eigen::ArrayXd d = densities(snake, image);
    const double y_bar = snake.points.col(1).mean();
    return (d * (snake.points.col(1).array() - y_bar).square()).sum();
}

double avg_mass(const Snake& snake, const Spectrogram& image) { return densities(snake, image).mean(); }

double relative_mass(const Snake& snake, const Spectrogram& image) {
    const double image_mean = image.intensity.mean();
    if (!(image_mean > 0.0)) throw InputError("relative mass undefined: image mean gray level is zero");
    return avg_mass(snake, image) / image_mean;
}

void apply_cutoffs(FeatureVector& v, const FeatureConfig& cfg) {
    v.low_density = v.relative_density <= cfg.low_density_cutoff;
    v.long_ = v.length >= cfg.long_cutoff;
    v.low = v.avg_y <= cfg.low_freq_cutoff_y;
}

void quantize(FeatureVector& v) {
    for (double* f : {&v.avg_density, &v.avg_x, &v.avg_y, &v.inertia, &v.length, &v.relative_density}) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", *f);
        *f = std::strtod(buf, nullptr);
    }
}

FeatureVector build_feature_vector(const Snake& snake, const Spectrogram& image, const FeatureConfig& cfg) {
    cfg.validate();
    FeatureVector v;
    const Eigen::Vector2d c = centroid(snake);
    v.avg_x = c.x();
    v.avg_y = c.y();
    v.avg_density = avg_mass(snake, image);
    v.relative_density = relative_mass(snake, image);
    v.inertia = inertia(snake, image);
    v.length = normalized_length(snake, cfg.length_norm_l);
    apply_cutoffs(v, cfg);
    return v;
}

double compute_l(const std::vector<Snake>& snakes) {
    if (snakes.empty()) throw InputError("compute_l needs at least one snake");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : snakes) best = std::min(best, endpoint_distance(s));
    if (!(best > 0.0)) throw InputError("compute_l: zero-length snake in the set");
    return best;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& columns) {
    if (columns.rows() < 2) throw InputError("correlation needs at least two rows");
    const Eigen::Index p = columns.cols();
    const Eigen::MatrixXd centered = columns.rowwise() - columns.colwise().mean();
    const Eigen::VectorXd norms = centered.colwise().norm().transpose();
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            double r = 0.0;
            if (norms(i) > 0.0 && norms(j) > 0.0) {
                r = std::clamp(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)), -1.0, 1.0);
            }
            corr(i, j) = corr(j, i) = r;
        }
    }
    return corr;
}

Eigen::Matrix<double, 10, 10> correlation_matrix(const std::vector<FeatureVector>& rows) {
    Eigen::MatrixXd data(static_cast<Eigen::Index>(rows.size()), 10);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        data.row(r).head<9>() = as_row(rows[i]).transpose();
        data(r, 9) = rows[i].target.value_or(false) ? 1.0 : 0.0;
    }
    return correlation_matrix(data);
}

std::string csv_header() {
    std::string h;
    for (std::size_t i = 0; i < kDatasetColumns.size(); ++i) {
        if (i) h += ',';
        h += kDatasetColumns[i];
    }
    return h;
}

std::string csv_row(const FeatureVector& v) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%d,", v.avg_density, v.avg_x, v.avg_y,
                  v.inertia, v.length, v.relative_density, v.low_density ? 1 : 0, v.long_ ? 1 : 0, v.low ? 1 : 0);
    std::string row = buf;
    if (v.target) row += *v.target ? '1' : '0';
    return row;
}

void write_dataset_csv(std::ostream& out, const std::vector<FeatureVector>& rows) {
    out << csv_header() << '\n';
    for (const auto& r : rows) out << csv_row(r) << '\n';
}

namespace {

bool parse_flag(const std::string& s, std::size_t line) {
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    throw InputError("line " + std::to_string(line) + ": expected 0/1, got '" + s + "'");
}

double parse_number(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::logic_error&) {
        throw InputError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
    }
}

}  // namespace

std::vector<FeatureVector> read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("dataset CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header()) throw InputError("dataset CSV header mismatch: '" + line + "'");

    std::vector<FeatureVector> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != kDatasetColumns.size()) {
            throw InputError("line " + std::to_string(line_no) + ": expected 10 columns, got " +
                             std::to_string(cells.size()));
        }
        FeatureVector v;
        v.avg_density = parse_number(cells[0], line_no);
        v.avg_x = parse_number(cells[1], line_no);
        v.avg_y = parse_number(cells[2], line_no);
        v.inertia = parse_number(cells[3], line_no);
        v.length = parse_number(cells[4], line_no);
        v.relative_density = parse_number(cells[5], line_no);
        v.low_density = parse_flag(cells[6], line_no);
        v.long_ = parse_flag(cells[7], line_no);
        v.low = parse_flag(cells[8], line_no);
        if (!cells[9].empty()) v.target = parse_flag(cells[9], line_no);
        rows.push_back(v);
    }
    return rows;
}

}  // namespace whistle
