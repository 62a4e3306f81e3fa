#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "whistle/image.hpp"

namespace whistle {

struct HoughConfig {
    double theta_step = 1.0;  // degrees
    int vote_threshold = 10;
    int min_length = 25;      // pixels, Euclidean endpoint distance
    int max_gap = 3;          // pixels
    double band_low = 15.0;   // inclination band, degrees to the horizontal
    double band_high = 75.0;
    std::uint64_t rng_seed = 0;
    /// Perpendicular slack (pixels) when following a line: a step counts as a hit
    /// if a foreground pixel lies within this many pixels along the minor axis.
    int line_tolerance = 1;
    /// Foreground within this distance of an accepted segment is consumed with it.
    double clear_radius = 2.0;
    /// Principal-axis re-fits of the followed run before accepting it.
    int refine_passes = 2;

    void validate() const;
};

struct LineSegment {
    Eigen::Vector2i p0{0, 0};
    Eigen::Vector2i p1{0, 0};
    double inclination = 0.0;  // degrees in [0, 90]
    int votes = 0;

    double length() const { return (p1 - p0).cast<double>().norm(); }
    bool operator==(const LineSegment&) const = default;
};

/// Absolute angle of p0 -> p1 to the horizontal axis, in degrees; 90 when dx = 0.
double inclination_degrees(const Eigen::Vector2i& p0, const Eigen::Vector2i& p1);

/// Normal distance of the line through (x, y) whose normal makes angle theta with the x axis.
inline double hough_point_vote(double x, double y, double theta) {
    return x * std::cos(theta) + y * std::sin(theta);
}

/// Full (r, theta) vote table. votes(t, r_index) with theta = t * theta_step
/// (degrees, [0, 180)) and r = r_index - r_offset, r rounded to 1 px.
struct HoughAccumulator {
    Eigen::MatrixXi votes;
    double theta_step = 1.0;
    int r_offset = 0;

    double theta_degrees(Eigen::Index t) const { return static_cast<double>(t) * theta_step; }
    int r_value(Eigen::Index r_index) const { return static_cast<int>(r_index) - r_offset; }
};

HoughAccumulator hough_accumulate(const BitGrid& binary, double theta_step);

/// Progressive probabilistic Hough transform. Segments whose inclination falls
/// outside [band_low, band_high] are dropped. Deterministic given rng_seed.
std::vector<LineSegment> probabilistic_hough(const BitGrid& binary, const HoughConfig& cfg);

}  // namespace whistle
