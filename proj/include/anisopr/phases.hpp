#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anisopr/spectrum.hpp"
#include "anisopr/stats.hpp"

namespace anisopr {

struct PhaseOptions {
    double delta = 0.05;    // escape threshold for |u|, s, |u^(2)|
    double s0 = 0.05;       // band margin above s = 1/3
    double epsilon = 0.05;  // convergence accuracy
};

struct PhaseReport {
    std::optional<double> T1;
    std::optional<double> T1_prime;
    std::optional<double> T2;

    // Width of the record interval each crossing was interpolated in.
    double T1_gap = 0.0;
    double T1_prime_gap = 0.0;
    double T2_gap = 0.0;

    double delta = 0.0;
    double s0 = 0.0;
    double epsilon = 0.0;

    // Linearly interpolated at T1 (NaN when T1 is absent).
    double u_at_T1 = 0.0;
    double s_at_T1 = 0.0;
    double u2_at_T1 = 0.0;
};

/// T1: first t with |u|, s, |u^(2)| all >= delta.
/// T1': start of the final up-crossing of s over 1/3 + s0 (s stays above it to
///      the end of the record), clipped below at T1.
/// T2: first t >= T1' with min(|u|, s) >= 1 - epsilon.
/// Crossings are linearly interpolated between records. Throws InvalidArgument
/// if a record lacks u^(2) or a threshold is outside (0, 1).
PhaseReport detect_phases(const Trajectory& traj, const PhaseOptions& opts = {});

struct T2Prediction {
    double value = 0.0;       // predicted T2
    double T1_prime = 0.0;
    double lambda_eps = 0.0;
    std::size_t cutoff_index = 0;  // lambda_eps = lambdas[cutoff_index]
    double tail_threshold = 0.0;   // min(eps / 4, eps^2 / (16 s(T1')))
    double tail_at_cutoff = 0.0;   // T(lambda_eps)
    double head_sum = 0.0;         // S_>=(lambda_eps)
    double log_term = 0.0;         // max(0, log(4 S_>= / eps))
    bool below_resolution = false; // eps < d^{-(a-1)/2}
    std::vector<std::string> warnings;
};

/// T1' + log(4 S_>=(lambda_eps) / eps) / (4 s0 lambda_eps), with lambda_eps the
/// largest eigenvalue whose teacher tail mass is <= min(eps / 4, eps^2 / (16 s(T1'))).
T2Prediction predicted_T2(const Teacher& teacher, const Spectrum& spec, double T1_prime,
                          double s_at_T1_prime, std::span<const double> w_at_T1_prime,
                          double epsilon, double s0);

/// Same, reading T1' from detect_phases and w(T1') from the first weight
/// snapshot at or after T1'. Throws InvalidArgument without snapshots and
/// InsufficientData when T1' is absent.
T2Prediction predicted_T2(const Teacher& teacher, const Spectrum& spec, const Trajectory& traj,
                          double epsilon, double s0, const PhaseOptions& detect = {});

}  // namespace anisopr
