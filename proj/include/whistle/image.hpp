#pragma once

#include <algorithm>

#include <Eigen/Core>

namespace whistle {

/// Dense 2-D grid indexed as (x, y): x = time frame (rows), y = frequency bin (cols).
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using GridXd = Grid<double>;
using BitGrid = Grid<bool>;

/// Quarter-turn rotation: out(i, j) = in(j, cols - 1 - i).
template <typename Derived>
Grid<typename Derived::Scalar> rotate90(const Eigen::ArrayBase<Derived>& in) {
    return in.transpose().colwise().reverse();
}

/// Bilinear interpolation at a real coordinate inside [0, rows-1] x [0, cols-1].
template <typename Derived>
typename Derived::Scalar sample_bilinear(const Eigen::ArrayBase<Derived>& grid, double x, double y) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index rows = grid.rows();
    const Eigen::Index cols = grid.cols();
    const Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), rows > 1 ? rows - 2 : 0);
    const Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(y), cols > 1 ? cols - 2 : 0);
    const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, rows - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, cols - 1);
    const Scalar fx = static_cast<Scalar>(x - static_cast<double>(x0));
    const Scalar fy = static_cast<Scalar>(y - static_cast<double>(y0));
    const Scalar top = grid(x0, y0) * (Scalar(1) - fy) + grid(x0, y1) * fy;
    const Scalar bottom = grid(x1, y0) * (Scalar(1) - fy) + grid(x1, y1) * fy;
    return top * (Scalar(1) - fx) + bottom * fx;
}

/// Analytic gradient (d/dx, d/dy) of the bilinear interpolant at (x, y).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> sample_bilinear_gradient(const Eigen::ArrayBase<Derived>& grid,
                                                                       double x, double y) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index rows = grid.rows();
    const Eigen::Index cols = grid.cols();
    const Eigen::Index x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), rows > 1 ? rows - 2 : 0);
    const Eigen::Index y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(y), cols > 1 ? cols - 2 : 0);
    const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, rows - 1);
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, cols - 1);
    const Scalar fx = static_cast<Scalar>(x - static_cast<double>(x0));
    const Scalar fy = static_cast<Scalar>(y - static_cast<double>(y0));
    const Scalar a = grid(x0, y0), b = grid(x0, y1), c = grid(x1, y0), d = grid(x1, y1);
    const Scalar gx = (x1 == x0) ? Scalar(0) : (c - a) * (Scalar(1) - fy) + (d - b) * fy;
    const Scalar gy = (y1 == y0) ? Scalar(0) : (b - a) * (Scalar(1) - fx) + (d - c) * fx;
    return {gx, gy};
}

inline bool inside(const GridXd& grid, double x, double y) {
    return x >= 0.0 && y >= 0.0 && x <= static_cast<double>(grid.rows() - 1) &&
           y <= static_cast<double>(grid.cols() - 1);
}

}  // namespace whistle
