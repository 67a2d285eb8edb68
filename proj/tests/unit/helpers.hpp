#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace testutil {

inline std::vector<double> gaussian_vector(std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(d);
    for (auto& x : v) x = normal(rng);
    return v;
}

inline double rel_err(double got, double want) {
    const double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace testutil
