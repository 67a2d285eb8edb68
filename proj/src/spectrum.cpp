#include "anisopr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anisopr/error.hpp"
#include "anisopr/fit.hpp"
#include "anisopr/rng.hpp"

namespace anisopr {

Spectrum build_spectrum(std::size_t d, double a) {
    if (d == 0) throw InvalidArgument("build_spectrum: d must be >= 1");
    if (!std::isfinite(a) || a < 0.0) {
        throw InvalidArgument("build_spectrum: exponent a must be finite and >= 0");
    }
    Spectrum spec;
    spec.d = d;
    spec.a = a;
    spec.lambdas.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        spec.lambdas[i] = std::pow(static_cast<double>(i + 1), -a);
    }
    // Smallest terms first.
    double h = 0.0;
    for (std::size_t i = d; i-- > 0;) h += spec.lambdas[i];
    spec.harmonic_sum = h;
    for (auto& l : spec.lambdas) l /= h;
    return spec;
}

double q_inner(const Spectrum& spec, std::span<const double> x, std::span<const double> y,
               int k) {
    if (x.size() != spec.d || y.size() != spec.d) {
        throw InvalidArgument("q_inner: dimension mismatch");
    }
    if (k < 0) throw InvalidArgument("q_inner: k must be >= 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i) {
        double weight = 1.0;
        for (int j = 0; j < k; ++j) weight *= spec.lambdas[i];
        acc += weight * x[i] * y[i];
    }
    return acc;
}

namespace {

std::vector<double> moments_of(const Spectrum& spec, std::span<const double> w, int K) {
    std::vector<double> out(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = 0; i < spec.d; ++i) {
        double weight = spec.lambdas[i] * w[i] * w[i];
        for (int k = 0; k < K; ++k) {
            out[static_cast<std::size_t>(k)] += weight;
            weight *= spec.lambdas[i];
        }
    }
    return out;
}

}  // namespace

Teacher make_teacher(const Spectrum& spec, std::vector<double> w_star, TeacherNorm mode, int K) {
    if (w_star.size() != spec.d) throw InvalidArgument("make_teacher: dimension mismatch");
    if (K < 1) throw InvalidArgument("make_teacher: K must be >= 1");
    Teacher t;
    t.normalization = mode;
    t.s_star_moments = moments_of(spec, w_star, K);
    double sq = 0.0;
    for (double v : w_star) sq += v * v;
    t.sigma_star_sq = sq / static_cast<double>(spec.d);
    t.w_star = std::move(w_star);
    return t;
}

Teacher sample_teacher(const Spectrum& spec, std::uint64_t seed, TeacherNorm mode, int K) {
    std::uint64_t draw_seed = seed;
    int resamples = 0;
    for (;;) {
        Rng rng = make_rng(draw_seed, Stream::kTeacher);
        std::normal_distribution<double> normal;
        std::vector<double> g(spec.d);
        for (auto& v : g) v = normal(rng);

        double norm_sq = 0.0;
        if (mode == TeacherNorm::kQUnit) {
            for (std::size_t i = 0; i < spec.d; ++i) norm_sq += spec.lambdas[i] * g[i] * g[i];
        } else {
            for (double v : g) norm_sq += v * v;
        }
        if (norm_sq > 0.0 && std::isfinite(norm_sq)) {
            const double scale = mode == TeacherNorm::kQUnit
                                     ? 1.0 / std::sqrt(norm_sq)
                                     : std::sqrt(static_cast<double>(spec.d) / norm_sq);
            for (auto& v : g) v *= scale;
            Teacher t = make_teacher(spec, std::move(g), mode, K);
            t.seed = seed;
            t.resamples = resamples;
            return t;
        }
        ++draw_seed;
        ++resamples;
    }
}

double teacher_moment(const Spectrum& spec, const Teacher& teacher, int k) {
    return q_inner(spec, teacher.w_star, teacher.w_star, k);
}

double tail_mass(const Spectrum& spec, const Teacher& teacher, double lambda_c) {
    if (!(lambda_c > 0.0)) throw InvalidArgument("tail_mass: lambda_c must be > 0");
    double acc = 0.0;
    // Eigenvalues decrease with i, so the tail is a suffix; sum it smallest-first.
    for (std::size_t i = spec.d; i-- > 0;) {
        if (spec.lambdas[i] >= lambda_c) break;
        acc += spec.lambdas[i] * teacher.w_star[i] * teacher.w_star[i];
    }
    return acc;
}

TailExponentFit tail_mass_exponent_check(const Spectrum& spec, const Teacher& teacher,
                                         const TailExponentOptions& opts) {
    if (!(opts.bin_ratio > 0.0 && opts.bin_ratio < 1.0)) {
        throw InvalidArgument("tail_mass_exponent_check: bin_ratio must lie in (0, 1)");
    }
    if (spec.a == 0.0 || spec.lambda_max() == spec.lambda_min()) {
        throw InsufficientData("tail_mass_exponent_check: degenerate spectrum (no power-law tail)");
    }
    const auto top = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(static_cast<double>(spec.d) * opts.top_index_fraction)),
        1, spec.d);
    const double lambda_floor = spec.lambda_min();

    TailExponentFit fit;
    fit.expected = 1.0 - 1.0 / spec.a;
    double upper = spec.lambdas[top - 1];
    // Bins (rho*upper, upper] lying entirely above lambda_d.
    std::size_t i = top - 1;
    while (upper * opts.bin_ratio >= lambda_floor) {
        const double lower = upper * opts.bin_ratio;
        double mass = 0.0;
        while (i < spec.d && spec.lambdas[i] > lower) {
            mass += spec.lambdas[i] * teacher.w_star[i] * teacher.w_star[i];
            ++i;
        }
        if (mass > 0.0) {
            fit.bin_upper.push_back(upper);
            fit.bin_mass.push_back(8.0 * mass);
        }
        upper = lower;
    }
    if (fit.bin_mass.size() < 3) {
        throw InsufficientData("tail_mass_exponent_check: fewer than 3 bins with mass (have " +
                               std::to_string(fit.bin_mass.size()) + ")");
    }
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < fit.bin_mass.size(); ++k) {
        lx.push_back(std::log(fit.bin_upper[k]));
        ly.push_back(std::log(fit.bin_mass[k]));
    }
    const LinearFit lf = least_squares(lx, ly);
    fit.slope = lf.slope;
    fit.r2 = lf.r2;
    return fit;
}

}  // namespace anisopr
