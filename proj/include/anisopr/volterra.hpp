#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "anisopr/spectrum.hpp"
#include "anisopr/stats.hpp"

namespace anisopr {

/// K(t) = sum_i c_i exp(r_i t). Terms are stored by increasing rate.
struct ExpSumKernel {
    std::vector<double> weights;  // c_i
    std::vector<double> rates;    // r_i
    double b = 4.0;

    double at_zero() const;
};

/// Kernel of the Phase-I Volterra equation: c_i = (w*_i)^2 lambda_i^2, r_i = b lambda_i.
ExpSumKernel phase1_kernel(const Teacher& teacher, const Spectrum& spec, double b = 4.0);

/// Throws RangeError (safe_limit = 700 / max r_i) when t * max r_i > 700.
double kernel_eval(const ExpSumKernel& k, double t);

/// a_0(t) = sum_i w0_i w*_i lambda_i exp(4 lambda_i t).
double source_a0(std::span<const double> w0, const Teacher& teacher, const Spectrum& spec,
                 double t);

/// Khat(p) = sum_i (w*_i)^2 lambda_i^2 / (p - b lambda_i); DomainError for p <= b lambda_1.
double laplace_K(const Teacher& teacher, const Spectrum& spec, double b, double p);

/// ahat(p) = sum_i lambda_i w0_i w*_i / (p - b lambda_i).
double laplace_a0(std::span<const double> w0, const Teacher& teacher, const Spectrum& spec,
                  double b, double p);

struct DispersionResult {
    double rho_true = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};  // final bisection bracket
    int iterations = 0;
    double coefficient = 0.0;  // sqrt(d) ahat(rho) / D'(rho); 0 without w0
    double d_prime = 0.0;      // 8 sum c_i / (rho - b lambda_i)^2
    double residual = 0.0;     // 1 - 8 Khat(rho)
};

/// Root of 1 = 8 Khat(rho) on (b lambda_1, inf) by bracketed bisection.
/// `w0` is optional; when given, the growth coefficient is filled in.
DispersionResult solve_dispersion(const Teacher& teacher, const Spectrum& spec, double b = 4.0,
                                  std::span<const double> w0 = {});

struct VolterraSolution {
    double h = 0.0;
    std::vector<double> t;
    std::vector<double> u;

    /// Linear interpolation on the grid; t must lie in [0, t.back()].
    double at(double time) const;
};

/// Product-trapezoid solution of u(t) = a_0(t) + 8 int_0^t K(t - tau) u(tau) dtau
/// on the grid t_n = n h, n = 0..ceil(t_max / h). Throws InvalidArgument
/// ("step too large") unless 4 h K(0) < 1.
VolterraSolution solve_volterra_u(std::span<const double> w0, const Teacher& teacher,
                                  const Spectrum& spec, double h, double t_max);

struct EnvelopeLevel {
    int k = 0;
    std::size_t checked = 0;
    std::size_t lower_violations = 0;
    std::size_t upper_violations = 0;
    double worst_excess = 0.0;  // largest amount by which a bound was crossed

    bool ok() const { return lower_violations == 0 && upper_violations == 0; }
};

struct EnvelopeReport {
    std::vector<EnvelopeLevel> levels;  // k = 2..K
    double slack = 2.0;

    bool ok() const;
};

/// Two-sided bounds on u^(k)(t), k = 2..K, at every record with t <= T1:
///   -m_k(t) + 8 s*^(k) int_0^t u <= u^(k)(t) <= m_k(t) + lambda_1^{k-1} (u(t) - u(0)),
/// m_k(t) = slack * lambda_1^k sqrt(log d / d) exp(4 lambda_1 t).
EnvelopeReport moment_envelope_check(const Trajectory& traj, const Teacher& teacher,
                                     const Spectrum& spec, double T1, double slack = 2.0);

struct EscapeRateFit {
    double rate = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
};

/// Least-squares slope of log|u| vs t over records with |u| in [u_lo, u_hi],
/// restricted to the records after the last sign change of u.
/// Throws InsufficientData with fewer than 3 points in the window.
EscapeRateFit fit_escape_rate(const Trajectory& traj, double u_lo, double u_hi);

}  // namespace anisopr
