#include "whistle/snake.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "whistle/error.hpp"

namespace whistle {

void SnakeConfig::validate() const {
    if (n_points < 3) throw ConfigError("snake.n_points must be at least 3");
    if (alpha < 0.0) throw ConfigError("snake.alpha must be non-negative");
    if (beta_bend < 0.0) throw ConfigError("snake.beta_bend must be non-negative");
    if (!std::isfinite(w_line) || !std::isfinite(w_edge)) throw ConfigError("snake weights must be finite");
    if (max_iterations < 0) throw ConfigError("snake.max_iterations must be non-negative");
    if (!(step_size > 0.0)) throw ConfigError("snake.step_size must be positive");
    if (!(convergence_tol > 0.0)) throw ConfigError("snake.convergence_tol must be positive");
    if (dedupe_distance < 0.0) throw ConfigError("snake.dedupe_distance must be non-negative");
}

GridXd image_potential(const GridXd& intensity, double w_line, double w_edge) {
    GridXd p = w_line * intensity;
    if (w_edge == 0.0) return p;
    const Eigen::Index rows = intensity.rows();
    const Eigen::Index cols = intensity.cols();
    GridXd gx = GridXd::Zero(rows, cols);
    GridXd gy = GridXd::Zero(rows, cols);
    if (rows > 1) {
        gx.middleRows(1, rows - 2) = (intensity.bottomRows(rows - 2) - intensity.topRows(rows - 2)) / 2.0;
        gx.row(0) = intensity.row(1) - intensity.row(0);
        gx.row(rows - 1) = intensity.row(rows - 1) - intensity.row(rows - 2);
    }
    if (cols > 1) {
        gy.middleCols(1, cols - 2) = (intensity.rightCols(cols - 2) - intensity.leftCols(cols - 2)) / 2.0;
        gy.col(0) = intensity.col(1) - intensity.col(0);
        gy.col(cols - 1) = intensity.col(cols - 1) - intensity.col(cols - 2);
    }
    p += w_edge * (gx.square() + gy.square());
    return p;
}

Snake init_snake(const LineSegment& segment, int n_points) {
    if (n_points < 2) throw ConfigError("a snake needs at least two points");
    if (segment.p0 == segment.p1) throw InputError("cannot initialize a snake on a zero-length segment");
    const Eigen::RowVector2d a = segment.p0.cast<double>().transpose();
    const Eigen::RowVector2d b = segment.p1.cast<double>().transpose();
    Snake s;
    s.points.resize(n_points, 2);
    for (int i = 0; i < n_points; ++i) {
        const double t = static_cast<double>(i) / (n_points - 1);
        s.points.row(i) = a + t * (b - a);
    }
    s.points.row(n_points - 1) = b;
    s.source = segment;
    return s;
}

namespace {

void require_inside(const PointList<double>& pts, const GridXd& grid) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        if (!inside(grid, pts(i, 0), pts(i, 1))) {
            throw InputError("snake point (" + std::to_string(pts(i, 0)) + ", " + std::to_string(pts(i, 1)) +
                             ") lies outside the image");
        }
    }
}

double external_energy(const PointList<double>& pts, const GridXd& potential) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) e += sample_bilinear(potential, pts(i, 0), pts(i, 1));
    return e;
}

void clamp_to(PointList<double>& pts, const GridXd& grid) {
    pts.col(0) = pts.col(0).cwiseMax(0.0).cwiseMin(static_cast<double>(grid.rows() - 1));
    pts.col(1) = pts.col(1).cwiseMax(0.0).cwiseMin(static_cast<double>(grid.cols() - 1));
}

}  // namespace

double snake_energy(const PointList<double>& pts, const GridXd& potential, const SnakeConfig& cfg) {
    require_inside(pts, potential);
    return internal_energy(pts, cfg.alpha, cfg.beta_bend) + external_energy(pts, potential);
}

double snake_energy(const Snake& snake, const Spectrogram& image, const SnakeConfig& cfg) {
    return snake_energy(snake.points, image_potential(image.intensity, cfg.w_line, cfg.w_edge), cfg);
}

Snake evolve(const Snake& snake, const Spectrogram& image, const SnakeConfig& cfg, EvolveTrace* trace) {
    return evolve(snake, image_potential(image.intensity, cfg.w_line, cfg.w_edge), cfg, trace);
}

Snake evolve(const Snake& snake, const GridXd& potential, const SnakeConfig& cfg, EvolveTrace* trace) {
    cfg.validate();
    Snake out = snake;
    const Eigen::Index n = snake.points.rows();
    require_inside(out.points, potential);
    out.energy = snake_energy(out.points, potential, cfg);
    if (trace) trace->energies.assign(1, out.energy);
    out.iterations = 0;
    out.converged = n <= 2;
    if (n <= 2) return out;

    // Damping mu interpolates between a Newton step on the internal energy
    // (small mu) and a short gradient step (large mu).
    constexpr double kMuFloor = 1e-9;
    constexpr double kMuCeiling = 1e12;
    constexpr double kMuConverged = 1e-4;
    const Eigen::Index m = n - 2;
    const Eigen::MatrixXd stiffness = stiffness_matrix<double>(n, cfg.alpha, cfg.beta_bend);
    const Eigen::MatrixXd interior = stiffness.block(1, 1, m, m);
    double mu = kMuFloor;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        PointList<double> grad = stiffness * out.points;
        for (Eigen::Index i = 1; i + 1 < n; ++i) {
            grad.row(i) += sample_bilinear_gradient(potential, out.points(i, 0), out.points(i, 1)).transpose();
        }
        const PointList<double> g = grad.middleRows(1, m);
        if (g.cwiseAbs().maxCoeff() == 0.0) {
            out.converged = true;
            break;
        }

        bool accepted = false;
        double displacement = 0.0;
        double used_mu = mu;
        while (mu <= kMuCeiling) {
            const Eigen::MatrixXd damped = interior + mu * Eigen::MatrixXd::Identity(m, m);
            PointList<double> step = -damped.ldlt().solve(g);
            const double longest = step.rowwise().norm().maxCoeff();
            if (longest > cfg.step_size) step *= cfg.step_size / longest;

            PointList<double> trial = out.points;
            trial.middleRows(1, m) += step;
            clamp_to(trial, potential);
            const double e = internal_energy(trial, cfg.alpha, cfg.beta_bend) + external_energy(trial, potential);
            if (e < out.energy) {
                displacement = (trial - out.points).rowwise().norm().maxCoeff();
                out.points = std::move(trial);
                out.energy = e;
                used_mu = mu;
                mu = std::max(kMuFloor, mu / 3.0);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }

        if (!accepted) {
            // No descent at any damping: a local minimum to working precision.
            out.converged = true;
            break;
        }
        ++out.iterations;
        if (trace) trace->energies.push_back(out.energy);
        if (displacement < cfg.convergence_tol && used_mu <= kMuConverged) {
            out.converged = true;
            break;
        }
    }
    return out;
}

double mean_point_distance(const Snake& a, const Snake& b) {
    if (a.points.rows() != b.points.rows() || a.points.rows() == 0) {
        throw InputError("snakes must have the same, non-zero number of points");
    }
    const double forward = (a.points - b.points).rowwise().norm().mean();
    const double backward = (a.points - b.points.colwise().reverse()).rowwise().norm().mean();
    return std::min(forward, backward);
}

std::vector<Snake> dedupe_snakes(const std::vector<Snake>& snakes, double distance) {
    std::vector<std::size_t> order(snakes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return snakes[i].energy < snakes[j].energy; });
    std::vector<bool> keep(snakes.size(), false);
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return mean_point_distance(snakes[i], snakes[k]) < distance;
        });
        if (!duplicate) {
            keep[i] = true;
            kept.push_back(i);
        }
    }
    std::vector<Snake> out;
    for (std::size_t i = 0; i < snakes.size(); ++i) {
        if (keep[i]) out.push_back(snakes[i]);
    }
    return out;
}

}  // namespace whistle
