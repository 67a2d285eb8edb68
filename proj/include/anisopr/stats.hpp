#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anisopr/spectrum.hpp"

namespace anisopr {

/// Moment hierarchy of one weight vector at one time.
/// u[k-1] = <w, w*>_{Q^k}, s[k-1] = ||w||^2_{Q^k}.
struct StatRecord {
    std::size_t step = 0;
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> s;
    double mse = 0.0;
    double theta = 0.0;

    double u1() const { return u.at(0); }
    double s1() const { return s.at(0); }
    bool has_level(std::size_t k) const { return u.size() >= k && s.size() >= k; }
};

struct Trajectory {
    std::vector<StatRecord> records;
    std::string config_digest;
    std::uint64_t seed = 0;

    /// Weight snapshots parallel to `records`; empty unless requested.
    std::vector<std::vector<double>> weights;

    bool teacher_flipped = false;   // w* was replaced by -w* because u(0) < 0
    bool truncated = false;         // run stopped early (divergence)
    std::size_t descent_violations = 0;
    std::vector<std::string> warnings;

    bool has_weights() const { return !weights.empty(); }
};

/// u^(k), s^(k) for k = 1..K in one O(dK) pass. `t` and `theta` are left at 0.
StatRecord summary_stats(std::span<const double> w, const Teacher& teacher, const Spectrum& spec,
                         int K);

/// (1/d) min(||w - w*||^2, ||w + w*||^2).
double mse(std::span<const double> w, const Teacher& teacher);

/// Fills theta by the cumulative trapezoid of 1 - 3 s(t), Theta(0) = 0.
/// Throws InvalidArgument if times are not strictly increasing or s is missing.
Trajectory accumulate_theta(Trajectory traj);

}  // namespace anisopr
