#include "whistle/ridge.hpp"

#include "whistle/error.hpp"

namespace whistle {

void FrangiConfig::validate() const {
    if (scales.empty()) throw ConfigError("frangi.scales must not be empty");
    for (double s : scales) {
        if (!(s > 0.0)) throw ConfigError("frangi.scales must all be positive");
    }
    if (!(beta > 0.0)) throw ConfigError("frangi.beta must be positive");
    if (c < 0.0) throw ConfigError("frangi.c must be positive (or 0 for adaptive)");
    if (!(binarize_threshold >= 0.0 && binarize_threshold <= 1.0)) {
        throw ConfigError("frangi.binarize_threshold must lie in [0, 1]");
    }
}

// Explicit instantiation for the pipeline's scalar type.
template Hessian<double> hessian_at_scale(const Eigen::ArrayBase<GridXd>&, double);
template GridXd frangi(const Eigen::ArrayBase<GridXd>&, const FrangiConfig&);

}  // namespace whistle
