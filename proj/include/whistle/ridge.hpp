#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "whistle/image.hpp"

namespace whistle {

struct FrangiConfig {
    std::vector<double> scales{1.0, 2.0, 3.0};
    double beta = 0.5;
    /// Fixed c when > 0; otherwise c = max(S) / 2 over the image at each scale.
    double c = 0.0;
    double binarize_threshold = 0.15;

    bool adaptive_c() const { return !(c > 0.0); }
    void validate() const;
};

template <typename Scalar>
struct Hessian {
    Grid<Scalar> xx, xy, yy;
};

template <typename Scalar>
struct EigenPair {
    Scalar l1;  // smaller magnitude
    Scalar l2;  // larger magnitude
};

/// Closed-form eigenvalues of [[hxx, hxy], [hxy, hyy]], ordered |l2| >= |l1|.
template <typename Scalar>
EigenPair<Scalar> eigen2x2(Scalar hxx, Scalar hxy, Scalar hyy) {
    const Scalar mean = (hxx + hyy) / Scalar(2);
    const Scalar half_diff = (hxx - hyy) / Scalar(2);
    const Scalar radius = std::sqrt(half_diff * half_diff + hxy * hxy);
    Scalar a = mean + radius;
    Scalar b = mean - radius;
    if (std::abs(a) > std::abs(b)) return {b, a};
    return {a, b};
}

/// Single-scale vesselness for a dark ridge (bright background). Zero when
/// l2 < 0; R_B = 0 when both eigenvalues vanish.
template <typename Scalar>
Scalar vesselness(EigenPair<Scalar> e, Scalar beta, Scalar c) {
    if (e.l2 < Scalar(0)) return Scalar(0);
    const Scalar rb = e.l2 == Scalar(0) ? Scalar(0) : e.l1 / e.l2;
    const Scalar s2 = e.l1 * e.l1 + e.l2 * e.l2;
    return std::exp(-rb * rb / (Scalar(2) * beta * beta)) * (Scalar(1) - std::exp(-s2 / (Scalar(2) * c * c)));
}

namespace detail {

/// Sampled Gaussian derivative kernels of order 0, 1, 2 with radius ceil(4 sigma),
/// corrected so their discrete moments match the continuous ones:
/// sum g0 = 1, sum k g1(k) = -1, sum g2 = 0, sum k^2 g2(k) = 2.
template <typename Scalar>
std::vector<Eigen::Array<Scalar, Eigen::Dynamic, 1>> gaussian_kernels(Scalar sigma) {
    using Vec = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    const int radius = std::max(1, static_cast<int>(std::ceil(Scalar(4) * sigma)));
    const Vec k = Vec::LinSpaced(2 * radius + 1, Scalar(-radius), Scalar(radius));
    Vec g0 = (-(k * k) / (Scalar(2) * sigma * sigma)).exp();
    g0 /= g0.sum();
    Vec g1 = -k / (sigma * sigma) * g0;
    g1 /= -(k * g1).sum();
    Vec g2 = (k * k / (sigma * sigma) - Scalar(1)) / (sigma * sigma) * g0;
    g2 -= g2.mean();
    g2 *= Scalar(2) / (k * k * g2).sum();
    return {g0, g1, g2};
}

inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
    if (n == 1) return 0;
    const Eigen::Index period = 2 * n - 2;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

/// out(x, y) = sum_k in(x - k, y) kernel(k) along rows (axis 0) or cols (axis 1),
/// with mirror reflection at the borders.
template <typename Scalar>
Grid<Scalar> convolve_axis(const Grid<Scalar>& in, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& kernel, int axis) {
    const Eigen::Index radius = (kernel.size() - 1) / 2;
    const Eigen::Index n = axis == 0 ? in.rows() : in.cols();
    Grid<Scalar> out = Grid<Scalar>::Zero(in.rows(), in.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index t = -radius; t <= radius; ++t) {
            const Eigen::Index src = reflect(i - t, n);
            const Scalar w = kernel(t + radius);
            if (axis == 0) {
                out.row(i) += w * in.row(src);
            } else {
                out.col(i) += w * in.col(src);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Scale-normalized (sigma^2) Hessian via separable Gaussian derivative filters.
template <typename Derived>
Hessian<typename Derived::Scalar> hessian_at_scale(const Eigen::ArrayBase<Derived>& image,
                                                   typename Derived::Scalar sigma) {
    using Scalar = typename Derived::Scalar;
    const Grid<Scalar> src = image;
    const auto k = detail::gaussian_kernels(sigma);
    const Scalar norm = sigma * sigma;

    const Grid<Scalar> smooth_x = detail::convolve_axis(src, k[0], 0);
    const Grid<Scalar> d1_x = detail::convolve_axis(src, k[1], 0);
    const Grid<Scalar> d2_x = detail::convolve_axis(src, k[2], 0);

    Hessian<Scalar> h;
    h.xx = norm * detail::convolve_axis(d2_x, k[0], 1);
    h.xy = norm * detail::convolve_axis(d1_x, k[1], 1);
    h.yy = norm * detail::convolve_axis(smooth_x, k[2], 1);
    return h;
}

/// Multiscale vesselness: per-pixel maximum over the configured scales.
template <typename Derived>
Grid<typename Derived::Scalar> frangi(const Eigen::ArrayBase<Derived>& image, const FrangiConfig& cfg) {
    using Scalar = typename Derived::Scalar;
    cfg.validate();
    Grid<Scalar> best = Grid<Scalar>::Zero(image.rows(), image.cols());
    // Hessians at roundoff level mean a flat image
    const Scalar flat = Scalar(1024) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), image.abs().maxCoeff());
    for (double sigma : cfg.scales) {
        const auto h = hessian_at_scale(image, static_cast<Scalar>(sigma));
        Scalar c = static_cast<Scalar>(cfg.c);
        if (cfg.adaptive_c()) {
            const Scalar max_s = (h.xx.square() + Scalar(2) * h.xy.square() + h.yy.square()).sqrt().maxCoeff();
            // S = sqrt(l1^2 + l2^2) is the Frobenius norm of the Hessian.
            if (max_s <= flat) continue;
            c = max_s / Scalar(2);
        }
        if (!(c > Scalar(0))) continue;
        const auto beta = static_cast<Scalar>(cfg.beta);
        for (Eigen::Index y = 0; y < image.cols(); ++y) {
            for (Eigen::Index x = 0; x < image.rows(); ++x) {
                const auto e = eigen2x2(h.xx(x, y), h.xy(x, y), h.yy(x, y));
                best(x, y) = std::max(best(x, y), vesselness(e, beta, c));
            }
        }
    }
    return best;
}

template <typename Derived>
BitGrid binarize(const Eigen::ArrayBase<Derived>& map, double threshold) {
    return map >= static_cast<typename Derived::Scalar>(threshold);
}

}  // namespace whistle
