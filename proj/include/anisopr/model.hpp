#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "anisopr/spectrum.hpp"

namespace anisopr {

/// Population loss E[((x.w)^2 - (x.w*)^2)^2] for x ~ N(0, Q), together with the
/// two statistics it depends on.
struct LossEval {
    double value = 0.0;
    double s = 0.0;       // ||w||_Q^2
    double u = 0.0;       // <w, w*>_Q
    double s_star = 0.0;  // ||w*||_Q^2
};

/// Closed form 3 s^2 + 3 s*^2 - 4 u^2 - 2 s* s.
double loss_from_stats(double s, double u, double s_star);

LossEval loss_closed_form(std::span<const double> w, const Teacher& teacher, const Spectrum& spec);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
};

/// Empirical loss over n samples x_i = sqrt(lambda_i) z_i. Deterministic given seed.
MonteCarloEstimate loss_monte_carlo(std::span<const double> w, const Teacher& teacher,
                                    const Spectrum& spec, std::size_t n, std::uint64_t seed);

/// 12 s Qw - 4 s* Qw - 8 u Qw*.
std::vector<double> gradient(std::span<const double> w, const Teacher& teacher,
                             const Spectrum& spec);

/// [24 (Qw)(Qw)^T + (12 s - 4 s*) Q - 8 (Qw*)(Qw*)^T] v, matrix-free.
std::vector<double> hessian_apply(std::span<const double> w, std::span<const double> v,
                                  const Teacher& teacher, const Spectrum& spec);

enum class CriticalKind { kGlobalMin, kLocalMax, kSaddle, kNoncritical };

const char* to_string(CriticalKind kind);

struct ClassifyOptions {
    double grad_tol = 1e-8;
    double curvature_tol = 1e-10;
    int random_probes = 10;
    std::uint64_t probe_seed = 0x5eed;
};

/// Classifies w by gradient size and the sign pattern of the Hessian
/// curvature along w, w*, and random directions.
CriticalKind classify_critical_point(std::span<const double> w, const Teacher& teacher,
                                     const Spectrum& spec, const ClassifyOptions& opts = {});

/// A point with u = 0 and s = s*/3: the second coordinate direction, made
/// Q-orthogonal to w* and rescaled.
std::vector<double> construct_saddle_point(const Teacher& teacher, const Spectrum& spec);

}  // namespace anisopr
