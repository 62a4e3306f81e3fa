#pragma once

#include <vector>

#include <Eigen/Core>

#include "whistle/hough.hpp"
#include "whistle/image.hpp"
#include "whistle/spectrogram.hpp"

namespace whistle {

struct SnakeConfig {
    int n_points = 50;
    double alpha = 0.01;       // first-order stiffness
    double beta_bend = 0.001;  // second-order stiffness
    double w_line = 1.0;       // weight on I(v)
    double w_edge = 0.0;       // weight on |grad I(v)|^2
    int max_iterations = 500;
    double step_size = 1.0;         // largest point displacement per iteration, px
    double convergence_tol = 0.1;   // px
    bool dedupe = true;
    double dedupe_distance = 5.0;   // px, mean point-to-point distance

    void validate() const;
};

template <typename Scalar>
using PointList = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

/// Open active contour with fixed endpoints; row i of `points` is v(i) = (x, y).
struct Snake {
    PointList<double> points;
    bool endpoints_fixed = true;
    LineSegment source;
    bool converged = false;
    double energy = 0.0;
    int iterations = 0;

    Eigen::Index size() const { return points.rows(); }
};

/// Stiffness matrix K with E_int = 1/2 tr(P^T K P) for an open N-point contour:
/// K = alpha D1^T D1 + beta D2^T D2, D1/D2 the first/second difference operators.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> stiffness_matrix(Eigen::Index n, Scalar alpha, Scalar beta) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat d1 = Mat::Zero(std::max<Eigen::Index>(n - 1, 0), n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        d1(i, i) = Scalar(-1);
        d1(i, i + 1) = Scalar(1);
    }
    Mat d2 = Mat::Zero(std::max<Eigen::Index>(n - 2, 0), n);
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        d2(i, i) = Scalar(1);
        d2(i, i + 1) = Scalar(-2);
        d2(i, i + 2) = Scalar(1);
    }
    return alpha * d1.transpose() * d1 + beta * d2.transpose() * d2;
}

/// sum_i 1/2 (alpha |v(i+1) - v(i)|^2 + beta |v(i+1) - 2 v(i) + v(i-1)|^2)
template <typename Derived>
typename Derived::Scalar internal_energy(const Eigen::MatrixBase<Derived>& pts, typename Derived::Scalar alpha,
                                         typename Derived::Scalar beta) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = pts.rows();
    Scalar e(0);
    if (n >= 2) {
        const auto d1 = pts.bottomRows(n - 1) - pts.topRows(n - 1);
        e += alpha * d1.squaredNorm();
    }
    if (n >= 3) {
        const auto d2 = pts.bottomRows(n - 2) - Scalar(2) * pts.middleRows(1, n - 2) + pts.topRows(n - 2);
        e += beta * d2.squaredNorm();
    }
    return e / Scalar(2);
}

template <typename Derived>
PointList<typename Derived::Scalar> internal_energy_gradient(const Eigen::MatrixBase<Derived>& pts,
                                                            typename Derived::Scalar alpha,
                                                            typename Derived::Scalar beta) {
    return stiffness_matrix(pts.rows(), alpha, beta) * pts;
}

/// External potential P = w_line I + w_edge |grad I|^2 on the pixel grid;
/// grad I by central differences (one-sided at the borders).
GridXd image_potential(const GridXd& intensity, double w_line, double w_edge);

/// Snake with n points equally spaced on the segment from p0 to p1.
Snake init_snake(const LineSegment& segment, int n_points);

/// Discrete energy: internal terms plus sum_i P(v(i)) sampled bilinearly.
/// Throws InputError if a point lies outside the image.
double snake_energy(const Snake& snake, const Spectrogram& image, const SnakeConfig& cfg);
double snake_energy(const PointList<double>& pts, const GridXd& potential, const SnakeConfig& cfg);

/// Optional per-run diagnostics.
struct EvolveTrace {
    std::vector<double> energies;  // initial energy followed by each accepted iteration
};

/// Damped, preconditioned descent on the interior points with energy
/// backtracking. Endpoints never move; every accepted step lowers the energy.
Snake evolve(const Snake& snake, const Spectrogram& image, const SnakeConfig& cfg, EvolveTrace* trace = nullptr);
Snake evolve(const Snake& snake, const GridXd& potential, const SnakeConfig& cfg, EvolveTrace* trace = nullptr);

/// Mean distance between corresponding points, minimized over the two orientations.
double mean_point_distance(const Snake& a, const Snake& b);

/// Drops any snake within `distance` of a lower-energy one; survivors keep input order.
std::vector<Snake> dedupe_snakes(const std::vector<Snake>& snakes, double distance);

}  // namespace whistle
