#include "anisopr/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "anisopr/error.hpp"
#include "anisopr/fit.hpp"

namespace anisopr {

namespace {

constexpr double kExpLimit = 700.0;

void check_dims(const Teacher& teacher, const Spectrum& spec, const char* who) {
    if (teacher.w_star.size() != spec.d) {
        throw InvalidArgument(std::string(who) + ": dimension mismatch");
    }
}

}  // namespace

double ExpSumKernel::at_zero() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

ExpSumKernel phase1_kernel(const Teacher& teacher, const Spectrum& spec, double b) {
    check_dims(teacher, spec, "phase1_kernel");
    ExpSumKernel k;
    k.b = b;
    k.weights.resize(spec.d);
    k.rates.resize(spec.d);
    // lambdas are decreasing; store by increasing rate (for b >= 0)
    for (std::size_t j = 0; j < spec.d; ++j) {
        const std::size_t i = spec.d - 1 - j;
        const double l = spec.lambdas[i];
        const double ws = teacher.w_star[i];
        k.weights[j] = ws * ws * l * l;
        k.rates[j] = b * l;
    }
    return k;
}

double kernel_eval(const ExpSumKernel& k, double t) {
    if (k.weights.size() != k.rates.size()) throw InvalidArgument("kernel_eval: size mismatch");
    double r_max = 0.0;
    for (double r : k.rates) r_max = std::max(r_max, std::abs(r));
    if (t * r_max > kExpLimit) {
        throw RangeError("kernel_eval: exp overflow beyond t = " + std::to_string(kExpLimit / r_max),
                         kExpLimit / r_max);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k.weights.size(); ++i) sum += k.weights[i] * std::exp(k.rates[i] * t);
    return sum;
}

double source_a0(std::span<const double> w0, const Teacher& teacher, const Spectrum& spec,
                 double t) {
    check_dims(teacher, spec, "source_a0");
    if (w0.size() != spec.d) throw InvalidArgument("source_a0: dimension mismatch");
    if (t * 4.0 * spec.lambda_max() > kExpLimit) {
        const double safe = kExpLimit / (4.0 * spec.lambda_max());
        throw RangeError("source_a0: exp overflow beyond t = " + std::to_string(safe), safe);
    }
    double sum = 0.0;
    for (std::size_t j = spec.d; j-- > 0;) {
        const double l = spec.lambdas[j];
        sum += w0[j] * teacher.w_star[j] * l * std::exp(4.0 * l * t);
    }
    return sum;
}

double laplace_K(const Teacher& teacher, const Spectrum& spec, double b, double p) {
    check_dims(teacher, spec, "laplace_K");
    if (!(p > b * spec.lambda_max())) {
        throw DomainError("laplace_K: p must exceed b * lambda_1");
    }
    double sum = 0.0;
    for (std::size_t j = spec.d; j-- > 0;) {
        const double l = spec.lambdas[j];
        const double ws = teacher.w_star[j];
        sum += ws * ws * l * l / (p - b * l);
    }
    return sum;
}

double laplace_a0(std::span<const double> w0, const Teacher& teacher, const Spectrum& spec,
                  double b, double p) {
    check_dims(teacher, spec, "laplace_a0");
    if (w0.size() != spec.d) throw InvalidArgument("laplace_a0: dimension mismatch");
    if (!(p > b * spec.lambda_max())) {
        throw DomainError("laplace_a0: p must exceed b * lambda_1");
    }
    double sum = 0.0;
    for (std::size_t j = spec.d; j-- > 0;) {
        const double l = spec.lambdas[j];
        sum += l * w0[j] * teacher.w_star[j] / (p - b * l);
    }
    return sum;
}

DispersionResult solve_dispersion(const Teacher& teacher, const Spectrum& spec, double b,
                                  std::span<const double> w0) {
    check_dims(teacher, spec, "solve_dispersion");
    if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("solve_dispersion: b must be > 0");
    const double s2 = teacher_moment(spec, teacher, 2);
    if (!(s2 > 0.0)) throw InvalidArgument("solve_dispersion: degenerate teacher (s*^(2) = 0)");

    const double pole = b * spec.lambda_max();
    auto f = [&](double p) { return 1.0 - 8.0 * laplace_K(teacher, spec, b, p); };

    double lo = pole * (1.0 + 1e-12);
    double hi = pole + 16.0 * 8.0 * s2;
    // The left end can sit on the pole itself when lambda_1 (1 + 1e-12) rounds to lambda_1.
    if (!(lo > pole)) lo = std::nextafter(pole, INFINITY);
    int doublings = 0;
    while (f(hi) <= 0.0) {
        if (++doublings > 60) throw NumericalFailure("solve_dispersion: no sign change in bracket");
        hi = pole + 2.0 * (hi - pole);
    }
    if (f(lo) >= 0.0) {
        throw NumericalFailure("solve_dispersion: left bracket end not below the root");
    }

    DispersionResult res;
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    while (std::abs(fm) > 1e-12) {
        if (fm < 0.0) lo = mid;
        else hi = mid;
        const double next = 0.5 * (lo + hi);
        ++res.iterations;
        if (next == lo || next == hi) break;  // bracket exhausted at double resolution
        mid = next;
        fm = f(mid);
    }
    res.rho_true = mid;
    res.residual = fm;
    res.bracket = {lo, hi};

    double dp = 0.0;
    for (std::size_t j = spec.d; j-- > 0;) {
        const double l = spec.lambdas[j];
        const double ws = teacher.w_star[j];
        const double gap = mid - b * l;
        dp += ws * ws * l * l / (gap * gap);
    }
    res.d_prime = 8.0 * dp;
    if (!w0.empty()) {
        res.coefficient = std::sqrt(static_cast<double>(spec.d)) *
                          laplace_a0(w0, teacher, spec, b, mid) / res.d_prime;
    }
    return res;
}

double VolterraSolution::at(double time) const {
    if (t.empty()) throw InvalidArgument("VolterraSolution::at: empty solution");
    if (time < 0.0 || time > t.back() * (1.0 + 1e-12)) {
        throw DomainError("VolterraSolution::at: time outside the grid");
    }
    const double x = time / h;
    const auto n = std::min(static_cast<std::size_t>(x), t.size() - 1);
    if (n + 1 >= t.size()) return u.back();
    const double frac = x - static_cast<double>(n);
    return u[n] + frac * (u[n + 1] - u[n]);
}

VolterraSolution solve_volterra_u(std::span<const double> w0, const Teacher& teacher,
                                  const Spectrum& spec, double h, double t_max) {
    check_dims(teacher, spec, "solve_volterra_u");
    if (w0.size() != spec.d) throw InvalidArgument("solve_volterra_u: dimension mismatch");
    if (!(h > 0.0) || !(t_max >= 0.0)) throw InvalidArgument("solve_volterra_u: need h > 0, t_max >= 0");
    const ExpSumKernel kernel = phase1_kernel(teacher, spec, 4.0);
    const double k0 = kernel.at_zero();
    const double diag = 1.0 - 4.0 * h * k0;
    if (!(diag > 0.0)) {
        throw InvalidArgument("solve_volterra_u: step too large (4 h K(0) must be < 1)");
    }
    const auto n_max = static_cast<std::size_t>(std::ceil(t_max / h - 1e-9));

    VolterraSolution sol;
    sol.h = h;
    sol.t.resize(n_max + 1);
    sol.u.resize(n_max + 1);
    std::vector<double> kgrid(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) {
        sol.t[n] = static_cast<double>(n) * h;
        kgrid[n] = kernel_eval(kernel, sol.t[n]);
    }
    sol.u[0] = source_a0(w0, teacher, spec, 0.0);
    for (std::size_t n = 1; n <= n_max; ++n) {
        double conv = 0.5 * kgrid[n] * sol.u[0];
        for (std::size_t j = 1; j < n; ++j) conv += kgrid[n - j] * sol.u[j];
        sol.u[n] = (source_a0(w0, teacher, spec, sol.t[n]) + 8.0 * h * conv) / diag;
    }
    return sol;
}

bool EnvelopeReport::ok() const {
    return std::all_of(levels.begin(), levels.end(), [](const EnvelopeLevel& l) { return l.ok(); });
}

EnvelopeReport moment_envelope_check(const Trajectory& traj, const Teacher& teacher,
                                     const Spectrum& spec, double T1, double slack) {
    check_dims(teacher, spec, "moment_envelope_check");
    EnvelopeReport rep;
    rep.slack = slack;
    if (traj.records.empty()) return rep;
    std::size_t K = traj.records.front().u.size();
    for (const auto& r : traj.records) K = std::min(K, r.u.size());

    const double d = static_cast<double>(spec.d);
    const double noise = d > 1.0 ? std::sqrt(std::log(d) / d) : 0.0;
    const double l1 = spec.lambda_max();
    const double u0 = traj.records.front().u1();

    for (std::size_t k = 2; k <= K; ++k) {
        EnvelopeLevel lvl;
        lvl.k = static_cast<int>(k);
        const double sk = teacher_moment(spec, teacher, static_cast<int>(k));
        const double lk = std::pow(l1, static_cast<double>(k));
        const double lk1 = std::pow(l1, static_cast<double>(k - 1));
        double integral = 0.0;
        for (std::size_t j = 0; j < traj.records.size(); ++j) {
            const auto& r = traj.records[j];
            if (r.t > T1) break;
            if (j > 0) {
                const auto& p = traj.records[j - 1];
                integral += 0.5 * (r.t - p.t) * (r.u1() + p.u1());
            }
            const double m = slack * lk * noise * std::exp(4.0 * l1 * r.t);
            const double lower = -m + 8.0 * sk * integral;
            const double upper = m + lk1 * (r.u1() - u0);
            const double uk = r.u[k - 1];
            ++lvl.checked;
            if (uk < lower) {
                ++lvl.lower_violations;
                lvl.worst_excess = std::max(lvl.worst_excess, lower - uk);
            }
            if (uk > upper) {
                ++lvl.upper_violations;
                lvl.worst_excess = std::max(lvl.worst_excess, uk - upper);
            }
        }
        rep.levels.push_back(lvl);
    }
    return rep;
}

EscapeRateFit fit_escape_rate(const Trajectory& traj, double u_lo, double u_hi) {
    if (!(u_lo > 0.0) || !(u_hi > u_lo)) throw InvalidArgument("fit_escape_rate: need 0 < u_lo < u_hi");
    const auto& recs = traj.records;
    std::size_t start = 0;
    for (std::size_t j = 1; j < recs.size(); ++j) {
        if (recs[j].u1() * recs[j - 1].u1() <= 0.0) start = j;
    }
    std::vector<double> ts, logs;
    for (std::size_t j = start; j < recs.size(); ++j) {
        const double au = std::abs(recs[j].u1());
        if (au >= u_lo && au <= u_hi) {
            ts.push_back(recs[j].t);
            logs.push_back(std::log(au));
        }
    }
    if (ts.size() < 3) throw InsufficientData("fit_escape_rate: fewer than 3 records in the window");
    const LinearFit fit = least_squares(ts, logs);
    return {fit.slope, fit.r2, ts.size(), ts.front(), ts.back()};
}

}  // namespace anisopr
