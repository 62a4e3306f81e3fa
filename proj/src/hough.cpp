#include "whistle/hough.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "whistle/error.hpp"
#include "whistle/rng.hpp"

namespace whistle {

void HoughConfig::validate() const {
    if (!(theta_step > 0.0 && theta_step <= 90.0)) throw ConfigError("hough.theta_step must lie in (0, 90]");
    if (vote_threshold < 1) throw ConfigError("hough.vote_threshold must be at least 1");
    if (min_length <= 0) throw ConfigError("hough.min_length must be positive");
    if (max_gap < 0) throw ConfigError("hough.max_gap must be non-negative");
    if (!(band_low >= 0.0 && band_low < band_high && band_high <= 90.0)) {
        throw ConfigError("hough inclination band must satisfy 0 <= low < high <= 90");
    }
    if (line_tolerance < 0) throw ConfigError("hough.line_tolerance must be non-negative");
    if (clear_radius < 0.0) throw ConfigError("hough.clear_radius must be non-negative");
    if (refine_passes < 0) throw ConfigError("hough.refine_passes must be non-negative");
}

double inclination_degrees(const Eigen::Vector2i& p0, const Eigen::Vector2i& p1) {
    const int dx = std::abs(p1.x() - p0.x());
    const int dy = std::abs(p1.y() - p0.y());
    if (dx == 0) return 90.0;
    return std::atan(static_cast<double>(dy) / dx) * 180.0 / std::numbers::pi;
}

namespace {

struct ThetaTable {
    std::vector<double> cos, sin;
    int r_offset = 0;
    Eigen::Index n_r = 0;

    ThetaTable(double step_degrees, Eigen::Index rows, Eigen::Index cols) {
        const auto n_theta = static_cast<int>(std::ceil(180.0 / step_degrees - 1e-9));
        for (int t = 0; t < n_theta; ++t) {
            const double theta = t * step_degrees * std::numbers::pi / 180.0;
            cos.push_back(std::cos(theta));
            sin.push_back(std::sin(theta));
        }
        r_offset = static_cast<int>(std::ceil(std::hypot(static_cast<double>(rows), static_cast<double>(cols)))) + 1;
        n_r = 2 * r_offset + 1;
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(cos.size()); }

    Eigen::Index r_index(Eigen::Index t, int x, int y) const {
        const auto k = static_cast<std::size_t>(t);
        return static_cast<Eigen::Index>(std::lround(x * cos[k] + y * sin[k])) + r_offset;
    }
};

struct Run {
    std::vector<Eigen::Vector2i> hits;
    Eigen::Vector2i first{0, 0};  // extreme hit in the negative direction
    Eigen::Vector2i last{0, 0};   // extreme hit in the positive direction
};

class LineFollower {
public:
    LineFollower(const BitGrid& mask, const HoughConfig& cfg) : mask_(mask), cfg_(cfg) {}

    /// Walks from `start` along +/- `dir`, one pixel per step on the dominant
    /// axis, tolerating up to max_gap consecutive misses.
    Run follow(const Eigen::Vector2d& start, const Eigen::Vector2d& dir) const {
        const bool x_major = std::abs(dir.x()) >= std::abs(dir.y());
        const double major = x_major ? dir.x() : dir.y();
        const Eigen::Vector2d step = dir / std::abs(major);

        Run run;
        bool any = false;
        for (int sign : {+1, -1}) {
            int gap = 0;
            for (int k = (sign > 0 ? 0 : 1);; ++k) {
                const Eigen::Vector2d q = start + static_cast<double>(sign * k) * step;
                const auto hit = probe(q, x_major);
                if (hit == Probe::outside) break;
                if (hit == Probe::miss) {
                    if (++gap > cfg_.max_gap) break;
                    continue;
                }
                gap = 0;
                run.hits.push_back(last_hit_);
                if (!any) {
                    run.first = run.last = last_hit_;
                    any = true;
                } else if (sign > 0) {
                    run.last = last_hit_;
                } else {
                    run.first = last_hit_;
                }
            }
        }
        return run;
    }

private:
    enum class Probe { hit, miss, outside };

    Probe probe(const Eigen::Vector2d& q, bool x_major) const {
        const auto rows = mask_.rows();
        const auto cols = mask_.cols();
        const int mx = static_cast<int>(std::lround(q.x()));
        const int my = static_cast<int>(std::lround(q.y()));
        if (mx < 0 || my < 0 || mx >= rows || my >= cols) return Probe::outside;
        const double minor_exact = x_major ? q.y() : q.x();
        const int minor_center = x_major ? my : mx;
        int best = -1;
        double best_dist = 0.0;
        for (int o = -cfg_.line_tolerance; o <= cfg_.line_tolerance; ++o) {
            const int m = minor_center + o;
            const int px = x_major ? mx : m;
            const int py = x_major ? m : my;
            if (px < 0 || py < 0 || px >= rows || py >= cols || !mask_(px, py)) continue;
            const double d = std::abs(m - minor_exact);
            if (best < 0 || d < best_dist) {
                best = m;
                best_dist = d;
            }
        }
        if (best < 0) return Probe::miss;
        last_hit_ = x_major ? Eigen::Vector2i(mx, best) : Eigen::Vector2i(best, my);
        return Probe::hit;
    }

    const BitGrid& mask_;
    const HoughConfig& cfg_;
    mutable Eigen::Vector2i last_hit_{0, 0};
};

/// Centroid and principal direction of a pixel set.
std::pair<Eigen::Vector2d, Eigen::Vector2d> principal_axis(const std::vector<Eigen::Vector2i>& pts) {
    Eigen::Matrix<double, Eigen::Dynamic, 2> m(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].cast<double>().transpose();
    const Eigen::RowVector2d mean = m.colwise().mean();
    const Eigen::MatrixX2d centered = m.rowwise() - mean;
    const Eigen::Matrix2d cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
    return {mean.transpose(), solver.eigenvectors().col(1)};
}

}  // namespace

HoughAccumulator hough_accumulate(const BitGrid& binary, double theta_step) {
    if (!(theta_step > 0.0 && theta_step <= 90.0)) throw ConfigError("theta_step must lie in (0, 90]");
    const ThetaTable table(theta_step, binary.rows(), binary.cols());
    HoughAccumulator acc;
    acc.theta_step = theta_step;
    acc.r_offset = table.r_offset;
    acc.votes = Eigen::MatrixXi::Zero(table.size(), table.n_r);
    for (Eigen::Index y = 0; y < binary.cols(); ++y) {
        for (Eigen::Index x = 0; x < binary.rows(); ++x) {
            if (!binary(x, y)) continue;
            for (Eigen::Index t = 0; t < table.size(); ++t) {
                ++acc.votes(t, table.r_index(t, static_cast<int>(x), static_cast<int>(y)));
            }
        }
    }
    return acc;
}

std::vector<LineSegment> probabilistic_hough(const BitGrid& binary, const HoughConfig& cfg) {
    cfg.validate();
    const ThetaTable table(cfg.theta_step, binary.rows(), binary.cols());
    Eigen::MatrixXi acc = Eigen::MatrixXi::Zero(table.size(), table.n_r);

    std::vector<Eigen::Vector2i> points;
    for (Eigen::Index y = 0; y < binary.cols(); ++y) {
        for (Eigen::Index x = 0; x < binary.rows(); ++x) {
            if (binary(x, y)) points.emplace_back(static_cast<int>(x), static_cast<int>(y));
        }
    }
    Rng rng(cfg.rng_seed);
    shuffle(points.begin(), points.end(), rng);

    BitGrid mask = binary;
    BitGrid voted = BitGrid::Constant(binary.rows(), binary.cols(), false);
    const LineFollower follower(mask, cfg);

    auto unvote = [&](int x, int y) {
        for (Eigen::Index t = 0; t < table.size(); ++t) --acc(t, table.r_index(t, x, y));
        voted(x, y) = false;
    };

    std::vector<LineSegment> found;
    for (const auto& p : points) {
        if (!mask(p.x(), p.y())) continue;

        Eigen::Index best_t = 0;
        int best_votes = 0;
        for (Eigen::Index t = 0; t < table.size(); ++t) {
            const int v = ++acc(t, table.r_index(t, p.x(), p.y()));
            if (v > best_votes) {
                best_votes = v;
                best_t = t;
            }
        }
        voted(p.x(), p.y()) = true;
        if (best_votes < cfg.vote_threshold) continue;

        const auto k = static_cast<std::size_t>(best_t);
        const Eigen::Vector2d dir(-table.sin[k], table.cos[k]);
        Run run = follower.follow(p.cast<double>(), dir);
        for (int pass = 0; pass < cfg.refine_passes && run.hits.size() >= 3; ++pass) {
            const auto [center, axis] = principal_axis(run.hits);
            Run refined = follower.follow(center, axis);
            if (refined.hits.size() < run.hits.size()) break;
            run = std::move(refined);
        }

        const Eigen::Vector2d a = run.first.cast<double>();
        const Eigen::Vector2d b = run.last.cast<double>();
        const double length = (b - a).norm();
        const bool good = !run.hits.empty() && length >= cfg.min_length;

        if (!good) {
            for (const auto& h : run.hits) mask(h.x(), h.y()) = false;
            continue;
        }

        // Consume the foreground band around the accepted segment.
        const Eigen::Vector2d u = (b - a) / length;
        const double r = cfg.clear_radius + cfg.line_tolerance;
        const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - r)));
        const int x_hi = std::min(static_cast<int>(mask.rows()) - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + r)));
        const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - r)));
        const int y_hi = std::min(static_cast<int>(mask.cols()) - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + r)));
        for (int y = y_lo; y <= y_hi; ++y) {
            for (int x = x_lo; x <= x_hi; ++x) {
                if (!mask(x, y)) continue;
                const Eigen::Vector2d d = Eigen::Vector2d(x, y) - a;
                const double along = d.dot(u);
                const double across = std::abs(d.x() * u.y() - d.y() * u.x());
                if (along < -r || along > length + r || across > r) continue;
                mask(x, y) = false;
                if (voted(x, y)) unvote(x, y);
            }
        }
        for (const auto& h : run.hits) {
            mask(h.x(), h.y()) = false;
            if (voted(h.x(), h.y())) unvote(h.x(), h.y());
        }

        LineSegment seg;
        seg.p0 = run.first;
        seg.p1 = run.last;
        if (seg.p1.x() < seg.p0.x() || (seg.p1.x() == seg.p0.x() && seg.p1.y() < seg.p0.y())) std::swap(seg.p0, seg.p1);
        seg.inclination = inclination_degrees(seg.p0, seg.p1);
        seg.votes = best_votes;
        found.push_back(seg);
    }

    std::vector<LineSegment> out;
    for (const auto& s : found) {
        if (s.inclination >= cfg.band_low && s.inclination <= cfg.band_high) out.push_back(s);
    }
    return out;
}

}  // namespace whistle
