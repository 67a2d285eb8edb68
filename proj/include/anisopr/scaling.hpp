#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "anisopr/fit.hpp"
#include "anisopr/spectrum.hpp"
#include "anisopr/stats.hpp"

namespace anisopr {

/// Error-energy distribution over eigen-directions at T2:
/// pi_i = e_i^2 / sum_j e_j^2, e = w(T2) - sign(u(T2)) w*.
struct MixWeights {
    std::vector<double> pi;
    std::size_t t2_index = 0;
    double mse_at_t2 = 0.0;
    double error_energy = 0.0;  // sum_j e_j^2

    /// d * max_i pi_i.
    double spread() const;
};

MixWeights mix_weights_from_state(std::span<const double> w, const Teacher& teacher,
                                  const Spectrum& spec);
/// Uses the weight snapshot at record `t2_index`.
MixWeights mix_weights_from_trajectory(const Trajectory& traj, std::size_t t2_index,
                                       const Teacher& teacher, const Spectrum& spec);
MixWeights uniform_mix_weights(std::size_t d);

/// S_d(tau) = (1/d) sum_i exp(-16 lambda_i tau). DomainError for tau < 0.
double spectral_mix_exact(const Spectrum& spec, double tau);

/// Shat_d(tau) = sum_i pi_i exp(-16 lambda_i tau).
double spectral_mix_weighted(const Spectrum& spec, const MixWeights& weights, double tau);

enum class MixRegime { kEarly, kMeso, kLate };
const char* to_string(MixRegime regime);

struct AsymptoticMix {
    MixRegime regime = MixRegime::kEarly;
    double value = 0.0;
    bool upper_bound = false;  // LATE returns a bound, not an estimate
};

/// EARLY (beta tau < 0.1): 1 - 16 tau / d.
/// MESO: 1 - Gamma(1 - 1/a) x / d, x = (beta tau)^{1/a}; UnsupportedExponent if a <= 1.
/// LATE (x > d): exp(-beta tau d^{-a}).
AsymptoticMix spectral_mix_asymptotic(const Spectrum& spec, double tau);

struct Phase3Point {
    double tau = 0.0;
    double mse = 0.0;       // MSE(T2) Shat_d(tau)
    double envelope = 0.0;  // half-width of the error budget
};

/// Leading-order post-T2 MSE with the envelope
/// eps (MSE(T2) - pred) + eps^2 (1/d) sum_i (1 - exp(-8 lambda_i tau))^2 (w*_i)^2.
std::vector<Phase3Point> predict_phase3_mse(const Spectrum& spec, const Teacher& teacher,
                                            const MixWeights& weights,
                                            std::span<const double> tau_grid,
                                            double epsilon = 0.05);

/// e_i(tau) = e_i(0) exp(-8 lambda_i tau), the idealized post-T2 error flow.
std::vector<double> ideal_error_decay(const Spectrum& spec, std::span<const double> e0, double tau);

/// Least-squares slope of log y against log x on [first, last).
/// Needs >= 3 points; DomainError on non-positive values in the window.
LinearFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys,
                           std::size_t first = 0, std::size_t last = static_cast<std::size_t>(-1));

}  // namespace anisopr
