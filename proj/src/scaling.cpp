#include "anisopr/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "anisopr/error.hpp"

namespace anisopr {

double MixWeights::spread() const {
    if (pi.empty()) return 0.0;
    return static_cast<double>(pi.size()) * *std::max_element(pi.begin(), pi.end());
}

MixWeights mix_weights_from_state(std::span<const double> w, const Teacher& teacher,
                                  const Spectrum& spec) {
    if (w.size() != spec.d || teacher.w_star.size() != spec.d) {
        throw InvalidArgument("mix_weights: dimension mismatch");
    }
    const double sign = q_inner(spec, w, teacher.w_star) < 0.0 ? -1.0 : 1.0;
    MixWeights mw;
    mw.pi.resize(spec.d);
    double total = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i) {
        const double e = w[i] - sign * teacher.w_star[i];
        mw.pi[i] = e * e;
        total += mw.pi[i];
    }
    if (!(total > 0.0)) throw InvalidArgument("mix_weights: zero error vector");
    for (auto& p : mw.pi) p /= total;
    mw.error_energy = total;
    mw.mse_at_t2 = mse(w, teacher);
    return mw;
}

MixWeights mix_weights_from_trajectory(const Trajectory& traj, std::size_t t2_index,
                                       const Teacher& teacher, const Spectrum& spec) {
    if (t2_index >= traj.weights.size()) {
        throw InvalidArgument("mix_weights: no weight snapshot at the requested record");
    }
    MixWeights mw = mix_weights_from_state(traj.weights[t2_index], teacher, spec);
    mw.t2_index = t2_index;
    return mw;
}

MixWeights uniform_mix_weights(std::size_t d) {
    if (d == 0) throw InvalidArgument("uniform_mix_weights: d must be >= 1");
    MixWeights mw;
    mw.pi.assign(d, 1.0 / static_cast<double>(d));
    return mw;
}

double spectral_mix_exact(const Spectrum& spec, double tau) {
    if (!(tau >= 0.0)) throw DomainError("spectral_mix_exact: tau must be >= 0");
    const double d = static_cast<double>(spec.d);
    // Near tau = 0 sum the decayed fractions instead, to keep 1 - S_d accurate.
    double gap = 0.0;
    for (std::size_t i = spec.d; i-- > 0;) gap -= std::expm1(-16.0 * spec.lambdas[i] * tau);
    gap /= d;
    if (gap < 0.5) return 1.0 - gap;
    double sum = 0.0;
    for (std::size_t i = spec.d; i-- > 0;) sum += std::exp(-16.0 * spec.lambdas[i] * tau);
    return sum / d;
}

double spectral_mix_weighted(const Spectrum& spec, const MixWeights& weights, double tau) {
    if (!(tau >= 0.0)) throw DomainError("spectral_mix_weighted: tau must be >= 0");
    if (weights.pi.size() != spec.d) throw InvalidArgument("spectral_mix_weighted: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = spec.d; i-- > 0;) sum += weights.pi[i] * std::exp(-16.0 * spec.lambdas[i] * tau);
    return sum;
}

const char* to_string(MixRegime regime) {
    switch (regime) {
        case MixRegime::kEarly: return "EARLY";
        case MixRegime::kMeso: return "MESO";
        case MixRegime::kLate: return "LATE";
    }
    return "?";
}

AsymptoticMix spectral_mix_asymptotic(const Spectrum& spec, double tau) {
    if (!(tau >= 0.0)) throw DomainError("spectral_mix_asymptotic: tau must be >= 0");
    const double d = static_cast<double>(spec.d);
    const double bt = spec.beta() * tau;
    AsymptoticMix out;
    if (bt < 0.1) {
        out.regime = MixRegime::kEarly;
        out.value = 1.0 - 16.0 * tau / d;
        return out;
    }
    if (!(spec.a > 0.0)) {
        throw UnsupportedExponent("spectral_mix_asymptotic: a = 0 has no power-law regimes");
    }
    const double x = std::pow(bt, 1.0 / spec.a);
    if (x > d) {
        out.regime = MixRegime::kLate;
        out.value = std::exp(-bt * std::pow(d, -spec.a));
        out.upper_bound = true;
        return out;
    }
    if (!(spec.a > 1.0)) {
        throw UnsupportedExponent("spectral_mix_asymptotic: the mesoscopic form needs a > 1");
    }
    out.regime = MixRegime::kMeso;
    out.value = 1.0 - std::tgamma(1.0 - 1.0 / spec.a) * x / d;
    return out;
}

std::vector<Phase3Point> predict_phase3_mse(const Spectrum& spec, const Teacher& teacher,
                                            const MixWeights& weights,
                                            std::span<const double> tau_grid, double epsilon) {
    if (teacher.w_star.size() != spec.d) throw InvalidArgument("predict_phase3_mse: dimension mismatch");
    std::vector<Phase3Point> out;
    out.reserve(tau_grid.size());
    const double d = static_cast<double>(spec.d);
    for (double tau : tau_grid) {
        Phase3Point p;
        p.tau = tau;
        p.mse = weights.mse_at_t2 * spectral_mix_weighted(spec, weights, tau);
        double drift = 0.0;
        for (std::size_t i = spec.d; i-- > 0;) {
            const double f = 1.0 - std::exp(-8.0 * spec.lambdas[i] * tau);
            drift += f * f * teacher.w_star[i] * teacher.w_star[i];
        }
        p.envelope = epsilon * (weights.mse_at_t2 - p.mse) + epsilon * epsilon * drift / d;
        out.push_back(p);
    }
    return out;
}

std::vector<double> ideal_error_decay(const Spectrum& spec, std::span<const double> e0, double tau) {
    if (e0.size() != spec.d) throw InvalidArgument("ideal_error_decay: dimension mismatch");
    std::vector<double> e(spec.d);
    for (std::size_t i = 0; i < spec.d; ++i) e[i] = e0[i] * std::exp(-8.0 * spec.lambdas[i] * tau);
    return e;
}

LinearFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys,
                           std::size_t first, std::size_t last) {
    if (xs.size() != ys.size()) throw InvalidArgument("fit_loglog_slope: size mismatch");
    last = std::min(last, xs.size());
    if (first >= last || last - first < 3) {
        throw InvalidArgument("fit_loglog_slope: need >= 3 points in the window");
    }
    std::vector<double> lx, ly;
    lx.reserve(last - first);
    ly.reserve(last - first);
    for (std::size_t i = first; i < last; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw DomainError("fit_loglog_slope: non-positive value in window");
        }
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
    }
    return least_squares(lx, ly);
}

}  // namespace anisopr
