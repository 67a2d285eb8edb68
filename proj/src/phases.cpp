#include "anisopr/phases.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "anisopr/error.hpp"

namespace anisopr {

namespace {

// Time at which a linear interpolant from (ta, va) to (tb, vb) reaches thr, va < thr <= vb.
double crossing(double ta, double va, double tb, double vb, double thr) {
    if (!(vb > va)) return tb;
    const double f = std::clamp((thr - va) / (vb - va), 0.0, 1.0);
    return ta + f * (tb - ta);
}

double lerp_at(const std::vector<StatRecord>& recs, std::size_t j, double t, double (*get)(const StatRecord&)) {
    if (j == 0 || recs[j].t == recs[j - 1].t) return get(recs[j]);
    const double f = (t - recs[j - 1].t) / (recs[j].t - recs[j - 1].t);
    return get(recs[j - 1]) + f * (get(recs[j]) - get(recs[j - 1]));
}

double abs_u(const StatRecord& r) { return std::abs(r.u[0]); }
double s_of(const StatRecord& r) { return r.s[0]; }
double abs_u2(const StatRecord& r) { return std::abs(r.u[1]); }
double u_of(const StatRecord& r) { return r.u[0]; }
double u2_of(const StatRecord& r) { return r.u[1]; }
double min_us(const StatRecord& r) { return std::min(std::abs(r.u[0]), r.s[0]); }

void check_unit(double x, const char* name) {
    if (!(x > 0.0 && x < 1.0)) {
        throw InvalidArgument(std::string("detect_phases: ") + name + " must lie in (0, 1)");
    }
}

}  // namespace

PhaseReport detect_phases(const Trajectory& traj, const PhaseOptions& opts) {
    check_unit(opts.delta, "delta");
    check_unit(opts.s0, "s0");
    check_unit(opts.epsilon, "epsilon");
    const auto& recs = traj.records;
    for (const auto& r : recs) {
        if (!r.has_level(2)) throw InvalidArgument("detect_phases: records must include u^(2)");
    }
    PhaseReport rep;
    rep.delta = opts.delta;
    rep.s0 = opts.s0;
    rep.epsilon = opts.epsilon;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.u_at_T1 = rep.s_at_T1 = rep.u2_at_T1 = nan;
    if (recs.empty()) return rep;

    // T1
    std::size_t j1 = recs.size();
    for (std::size_t j = 0; j < recs.size(); ++j) {
        if (abs_u(recs[j]) >= opts.delta && s_of(recs[j]) >= opts.delta &&
            abs_u2(recs[j]) >= opts.delta) {
            j1 = j;
            break;
        }
    }
    if (j1 == recs.size()) return rep;
    double T1 = recs[j1].t;
    if (j1 > 0) {
        const auto& a = recs[j1 - 1];
        const auto& b = recs[j1];
        T1 = a.t;
        for (auto get : {abs_u, s_of, abs_u2}) {
            if (get(a) < opts.delta) T1 = std::max(T1, crossing(a.t, get(a), b.t, get(b), opts.delta));
        }
        rep.T1_gap = b.t - a.t;
    }
    rep.T1 = T1;
    rep.u_at_T1 = lerp_at(recs, j1, T1, u_of);
    rep.s_at_T1 = lerp_at(recs, j1, T1, s_of);
    rep.u2_at_T1 = lerp_at(recs, j1, T1, u2_of);

    // T1': the last record at or below the band edge, if s ends above it.
    const double band = 1.0 / 3.0 + opts.s0;
    if (!(recs.back().s[0] > band)) return rep;
    std::size_t last_below = recs.size();
    for (std::size_t j = recs.size(); j-- > 0;) {
        if (!(recs[j].s[0] > band)) {
            last_below = j;
            break;
        }
    }
    double T1p = recs.front().t;
    std::size_t jp = 0;
    if (last_below < recs.size()) {
        const auto& a = recs[last_below];
        const auto& b = recs[last_below + 1];
        T1p = crossing(a.t, a.s[0], b.t, b.s[0], band);
        rep.T1_prime_gap = b.t - a.t;
        jp = last_below + 1;
    }
    if (T1p < T1) {
        T1p = T1;
        rep.T1_prime_gap = rep.T1_gap;
        jp = j1;
    }
    rep.T1_prime = T1p;

    // T2
    const double conv = 1.0 - opts.epsilon;
    for (std::size_t j = std::max<std::size_t>(jp, 1) - 1; j < recs.size(); ++j) {
        if (recs[j].t < T1p || min_us(recs[j]) < conv) continue;
        double T2 = recs[j].t;
        if (j > 0) {
            const auto& a = recs[j - 1];
            if (min_us(a) < conv) T2 = crossing(a.t, min_us(a), recs[j].t, min_us(recs[j]), conv);
            rep.T2_gap = recs[j].t - a.t;
        }
        rep.T2 = std::max(T2, T1p);
        break;
    }
    return rep;
}

T2Prediction predicted_T2(const Teacher& teacher, const Spectrum& spec, double T1_prime,
                          double s_at_T1_prime, std::span<const double> w_at_T1_prime,
                          double epsilon, double s0) {
    if (!(epsilon > 0.0)) throw InvalidArgument("predicted_T2: epsilon must be > 0");
    if (!(s0 > 0.0)) throw InvalidArgument("predicted_T2: s0 must be > 0");
    if (!(s_at_T1_prime > 0.0)) throw InvalidArgument("predicted_T2: s(T1') must be > 0");
    if (w_at_T1_prime.size() != spec.d || teacher.w_star.size() != spec.d) {
        throw InvalidArgument("predicted_T2: dimension mismatch");
    }
    T2Prediction p;
    p.T1_prime = T1_prime;
    p.tail_threshold = std::min(epsilon / 4.0, epsilon * epsilon / (16.0 * s_at_T1_prime));

    const std::size_t d = spec.d;
    const auto& lam = spec.lambdas;
    const auto& ws = teacher.w_star;
    // suffix[i] = sum_{j >= i} lambda_j (w*_j)^2, accumulated smallest-first
    std::vector<double> suffix(d + 1, 0.0);
    for (std::size_t i = d; i-- > 0;) suffix[i] = suffix[i + 1] + lam[i] * ws[i] * ws[i];

    // Scan from the top; `first_below` is the first index with lambda < lambda_m.
    std::size_t first_below = 0;
    std::size_t m = d - 1;
    for (std::size_t i = 0; i < d; ++i) {
        first_below = std::max(first_below, i + 1);
        while (first_below < d && !(lam[first_below] < lam[i])) ++first_below;
        if (suffix[first_below] <= p.tail_threshold) {
            m = i;
            break;
        }
    }
    p.cutoff_index = m;
    p.lambda_eps = lam[m];
    std::size_t end = m + 1;
    while (end < d && !(lam[end] < lam[m])) ++end;
    p.tail_at_cutoff = suffix[end];

    double head = 0.0;
    for (std::size_t i = end; i-- > 0;) head += lam[i] * std::abs(ws[i] * w_at_T1_prime[i]);
    p.head_sum = head;
    p.log_term = head > 0.0 ? std::max(0.0, std::log(4.0 * head / epsilon)) : 0.0;
    p.value = T1_prime + p.log_term / (4.0 * s0 * p.lambda_eps);

    const double resolution = std::pow(static_cast<double>(d), -(spec.a - 1.0) / 2.0);
    if (epsilon < resolution) {
        p.below_resolution = true;
        p.warnings.push_back("epsilon below d^{-(a-1)/2}: finite-d tail dominates");
    }
    return p;
}

T2Prediction predicted_T2(const Teacher& teacher, const Spectrum& spec, const Trajectory& traj,
                          double epsilon, double s0, const PhaseOptions& detect) {
    if (!traj.has_weights() || traj.weights.size() != traj.records.size()) {
        throw InvalidArgument("predicted_T2: trajectory has no weight snapshots");
    }
    const PhaseReport rep = detect_phases(traj, detect);
    if (!rep.T1_prime) throw InsufficientData("predicted_T2: T1' not reached in the trajectory");
    const double t1p = *rep.T1_prime;
    std::size_t j = 0;
    while (j + 1 < traj.records.size() && traj.records[j].t < t1p) ++j;
    return predicted_T2(teacher, spec, t1p, traj.records[j].s1(), traj.weights[j], epsilon, s0);
}

}  // namespace anisopr
