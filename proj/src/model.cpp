#include "anisopr/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anisopr/error.hpp"
#include "anisopr/rng.hpp"

namespace anisopr {

namespace {

void check_dims(std::span<const double> w, const Teacher& teacher, const Spectrum& spec,
                const char* who) {
    if (w.size() != spec.d || teacher.w_star.size() != spec.d) {
        throw InvalidArgument(std::string(who) + ": dimension mismatch");
    }
}

struct SU {
    double s = 0.0;
    double u = 0.0;
};

SU stats_of(std::span<const double> w, const Teacher& teacher, const Spectrum& spec) {
    SU r;
    for (std::size_t i = 0; i < spec.d; ++i) {
        const double lw = spec.lambdas[i] * w[i];
        r.s += lw * w[i];
        r.u += lw * teacher.w_star[i];
    }
    return r;
}

}  // namespace

double loss_from_stats(double s, double u, double s_star) {
    return 3.0 * s * s + 3.0 * s_star * s_star - 4.0 * u * u - 2.0 * s_star * s;
}

LossEval loss_closed_form(std::span<const double> w, const Teacher& teacher, const Spectrum& spec) {
    check_dims(w, teacher, spec, "loss_closed_form");
    const SU su = stats_of(w, teacher, spec);
    LossEval e;
    e.s = su.s;
    e.u = su.u;
    e.s_star = teacher.s_star();
    e.value = loss_from_stats(e.s, e.u, e.s_star);
    return e;
}

MonteCarloEstimate loss_monte_carlo(std::span<const double> w, const Teacher& teacher,
                                    const Spectrum& spec, std::size_t n, std::uint64_t seed) {
    check_dims(w, teacher, spec, "loss_monte_carlo");
    if (n < 1) throw InvalidArgument("loss_monte_carlo: n must be >= 1");
    Rng rng = make_rng(seed, Stream::kMonteCarlo);
    std::normal_distribution<double> normal;
    std::vector<double> sqrt_lambda(spec.d);
    for (std::size_t i = 0; i < spec.d; ++i) sqrt_lambda[i] = std::sqrt(spec.lambdas[i]);

    // Welford accumulation.
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double xw = 0.0, xws = 0.0;
        for (std::size_t i = 0; i < spec.d; ++i) {
            const double x = sqrt_lambda[i] * normal(rng);
            xw += x * w[i];
            xws += x * teacher.w_star[i];
        }
        const double r = xw * xw - xws * xws;
        const double sample = r * r;
        const double delta = sample - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (sample - mean);
    }
    MonteCarloEstimate est;
    est.mean = mean;
    est.n = n;
    est.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return est;
}

std::vector<double> gradient(std::span<const double> w, const Teacher& teacher,
                             const Spectrum& spec) {
    check_dims(w, teacher, spec, "gradient");
    const SU su = stats_of(w, teacher, spec);
    const double cw = 12.0 * su.s - 4.0 * teacher.s_star();
    const double cs = -8.0 * su.u;
    std::vector<double> g(spec.d);
    for (std::size_t i = 0; i < spec.d; ++i) {
        g[i] = spec.lambdas[i] * (cw * w[i] + cs * teacher.w_star[i]);
    }
    return g;
}

std::vector<double> hessian_apply(std::span<const double> w, std::span<const double> v,
                                  const Teacher& teacher, const Spectrum& spec) {
    check_dims(w, teacher, spec, "hessian_apply");
    if (v.size() != spec.d) throw InvalidArgument("hessian_apply: dimension mismatch");
    double s = 0.0, qw_v = 0.0, qws_v = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i) {
        s += spec.lambdas[i] * w[i] * w[i];
        qw_v += spec.lambdas[i] * w[i] * v[i];
        qws_v += spec.lambdas[i] * teacher.w_star[i] * v[i];
    }
    const double diag = 12.0 * s - 4.0 * teacher.s_star();
    std::vector<double> out(spec.d);
    for (std::size_t i = 0; i < spec.d; ++i) {
        const double l = spec.lambdas[i];
        out[i] = 24.0 * l * w[i] * qw_v + diag * l * v[i] - 8.0 * l * teacher.w_star[i] * qws_v;
    }
    return out;
}

const char* to_string(CriticalKind kind) {
    switch (kind) {
        case CriticalKind::kGlobalMin: return "GLOBAL_MIN";
        case CriticalKind::kLocalMax: return "LOCAL_MAX";
        case CriticalKind::kSaddle: return "SADDLE";
        case CriticalKind::kNoncritical: return "NONCRITICAL";
    }
    return "?";
}

CriticalKind classify_critical_point(std::span<const double> w, const Teacher& teacher,
                                     const Spectrum& spec, const ClassifyOptions& opts) {
    if (!(opts.grad_tol > 0.0)) throw InvalidArgument("classify_critical_point: tol must be > 0");
    const auto g = gradient(w, teacher, spec);
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    if (gmax > opts.grad_tol) return CriticalKind::kNoncritical;

    std::vector<std::vector<double>> probes;
    probes.emplace_back(w.begin(), w.end());
    probes.push_back(teacher.w_star);
    Rng rng = make_rng(opts.probe_seed, Stream::kProbe);
    std::normal_distribution<double> normal;
    for (int k = 0; k < opts.random_probes; ++k) {
        std::vector<double> v(spec.d);
        for (auto& x : v) x = normal(rng);
        probes.push_back(std::move(v));
    }

    int positive = 0, negative = 0;
    for (const auto& v : probes) {
        double vv = 0.0;
        for (double x : v) vv += x * x;
        if (vv == 0.0) continue;  // w = 0 probe
        const auto hv = hessian_apply(w, v, teacher, spec);
        double vhv = 0.0;
        for (std::size_t i = 0; i < spec.d; ++i) vhv += v[i] * hv[i];
        const double curvature = vhv / vv;
        if (curvature > opts.curvature_tol) ++positive;
        else if (curvature < -opts.curvature_tol) ++negative;
    }
    if (positive > 0 && negative == 0) return CriticalKind::kGlobalMin;
    if (negative > 0 && positive == 0) return CriticalKind::kLocalMax;
    // Mixed signs, or a flat (degenerate) critical point.
    return CriticalKind::kSaddle;
}

std::vector<double> construct_saddle_point(const Teacher& teacher, const Spectrum& spec) {
    if (spec.d < 2) throw InvalidArgument("construct_saddle_point: needs d >= 2");
    std::vector<double> v(spec.d, 0.0);
    v[1] = 1.0;
    const double s_star = teacher.s_star();
    const double proj = spec.lambdas[1] * teacher.w_star[1] / s_star;  // <e_2, w*>_Q / s*
    for (std::size_t i = 0; i < spec.d; ++i) v[i] -= proj * teacher.w_star[i];
    double s = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i) s += spec.lambdas[i] * v[i] * v[i];
    if (!(s > 0.0)) throw NumericalFailure("construct_saddle_point: e_2 is Q-parallel to w*");
    const double scale = std::sqrt(s_star / (3.0 * s));
    for (auto& x : v) x *= scale;
    return v;
}

}  // namespace anisopr
