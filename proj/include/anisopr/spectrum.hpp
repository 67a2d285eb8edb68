#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace anisopr {

/// Diagonal covariance Q = diag(lambda_1..lambda_d) with lambda_i = i^{-a} / H_{d,a},
/// so that tr Q = 1. Eigenvalues are stored in decreasing order.
struct Spectrum {
    std::size_t d = 0;
    double a = 0.0;
    std::vector<double> lambdas;
    double harmonic_sum = 0.0;  // H_{d,a}

    double lambda_max() const { return lambdas.front(); }
    double lambda_min() const { return lambdas.back(); }
    /// beta_d = 16 / H_{d,a}, the time scale of the spectral mixing curves.
    double beta() const { return 16.0 / harmonic_sum; }
};

enum class TeacherNorm {
    kQUnit,   // ||Q^{1/2} w*|| = 1
    kEuclidD  // ||w*||^2 = d
};

inline constexpr int kDefaultMoments = 4;

struct Teacher {
    std::vector<double> w_star;
    TeacherNorm normalization = TeacherNorm::kQUnit;
    std::vector<double> s_star_moments;  // s*^(k), k = 1..K (index k-1)
    double sigma_star_sq = 0.0;          // (1/d) ||w*||^2
    std::uint64_t seed = 0;
    int resamples = 0;  // number of zero-norm redraws (practically always 0)

    double s_star() const { return s_star_moments.at(0); }
    /// s*^(k), 1-based.
    double moment(int k) const { return s_star_moments.at(static_cast<std::size_t>(k - 1)); }
};

/// Power-law spectrum. Throws InvalidArgument for d = 0 or non-finite/negative a.
Spectrum build_spectrum(std::size_t d, double a);

/// Gaussian teacher draw, normalized per `mode`. Deterministic in (spec.d, seed, mode).
Teacher sample_teacher(const Spectrum& spec, std::uint64_t seed,
                       TeacherNorm mode = TeacherNorm::kQUnit, int K = kDefaultMoments);

/// Wrap an explicit vector as a teacher (no renormalization). Useful for
/// handcrafted and synthetic teachers.
Teacher make_teacher(const Spectrum& spec, std::vector<double> w_star,
                     TeacherNorm mode = TeacherNorm::kQUnit, int K = kDefaultMoments);

/// sum_i lambda_i^k x_i y_i for any k >= 0.
double q_inner(const Spectrum& spec, std::span<const double> x, std::span<const double> y,
               int k = 1);

/// s*^(k) for arbitrary k (not limited to the stored moments).
double teacher_moment(const Spectrum& spec, const Teacher& teacher, int k);

/// T(lambda_c) = sum over lambda_i < lambda_c of lambda_i (w*_i)^2.
double tail_mass(const Spectrum& spec, const Teacher& teacher, double lambda_c);

struct TailExponentOptions {
    double top_index_fraction = 0.01;  // window top edge at lambda_{ceil(d * fraction)}
    double bin_ratio = 0.5;            // geometric bin ratio rho in (0, 1)
};

struct TailExponentFit {
    double slope = 0.0;
    double r2 = 0.0;
    double expected = 0.0;  // 1 - 1/a
    std::vector<double> bin_upper;  // upper bin edges
    std::vector<double> bin_mass;   // mu_d(B_k) = 8 * sum_{i in B_k} lambda_i (w*_i)^2
};

/// Fits the power-law exponent of the teacher-weighted spectral measure
/// mu_d = 8 sum_i lambda_i (w*_i)^2 delta_{lambda_i} near the bottom of the
/// spectrum, from the masses of geometric bins (increments of mu_d((0, lambda])).
/// Throws InsufficientData when fewer than 3 bins carry mass or the spectrum is flat.
TailExponentFit tail_mass_exponent_check(const Spectrum& spec, const Teacher& teacher,
                                         const TailExponentOptions& opts = {});

}  // namespace anisopr
