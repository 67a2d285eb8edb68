#pragma once

#include <span>

namespace anisopr {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Requires >= 2 points with
/// distinct x. r2 is 1 when y is constant and fitted exactly.
LinearFit least_squares(std::span<const double> xs, std::span<const double> ys);

}  // namespace anisopr
