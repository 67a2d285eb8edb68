#include "anisopr/stats.hpp"

#include <algorithm>

#include "anisopr/error.hpp"

namespace anisopr {

StatRecord summary_stats(std::span<const double> w, const Teacher& teacher, const Spectrum& spec,
                         int K) {
    if (K < 1) throw InvalidArgument("summary_stats: K must be >= 1");
    if (w.size() != spec.d || teacher.w_star.size() != spec.d) {
        throw InvalidArgument("summary_stats: dimension mismatch");
    }
    StatRecord rec;
    rec.u.assign(static_cast<std::size_t>(K), 0.0);
    rec.s.assign(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = 0; i < spec.d; ++i) {
        const double l = spec.lambdas[i];
        double wu = l * w[i] * teacher.w_star[i];
        double ws = l * w[i] * w[i];
        for (std::size_t k = 0; k < rec.u.size(); ++k) {
            rec.u[k] += wu;
            rec.s[k] += ws;
            wu *= l;
            ws *= l;
        }
    }
    rec.mse = mse(w, teacher);
    return rec;
}

double mse(std::span<const double> w, const Teacher& teacher) {
    if (w.size() != teacher.w_star.size() || w.empty()) {
        throw InvalidArgument("mse: dimension mismatch");
    }
    double minus = 0.0, plus = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double dm = w[i] - teacher.w_star[i];
        const double dp = w[i] + teacher.w_star[i];
        minus += dm * dm;
        plus += dp * dp;
    }
    return std::min(minus, plus) / static_cast<double>(w.size());
}

Trajectory accumulate_theta(Trajectory traj) {
    auto& recs = traj.records;
    for (std::size_t j = 0; j < recs.size(); ++j) {
        if (recs[j].s.empty()) throw InvalidArgument("accumulate_theta: record without s");
        if (j > 0 && !(recs[j].t > recs[j - 1].t)) {
            throw InvalidArgument("accumulate_theta: times must be strictly increasing");
        }
    }
    if (recs.empty()) return traj;
    recs[0].theta = 0.0;
    for (std::size_t j = 1; j < recs.size(); ++j) {
        const double dt = recs[j].t - recs[j - 1].t;
        const double f0 = 1.0 - 3.0 * recs[j - 1].s1();
        const double f1 = 1.0 - 3.0 * recs[j].s1();
        recs[j].theta = recs[j - 1].theta + 0.5 * dt * (f0 + f1);
    }
    return traj;
}

}  // namespace anisopr
