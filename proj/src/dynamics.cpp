#include "anisopr/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

#include "anisopr/error.hpp"
#include "anisopr/model.hpp"

namespace anisopr {

std::vector<std::size_t> record_steps(const RecordSchedule& schedule, std::size_t n_steps) {
    std::vector<std::size_t> steps{0};
    if (schedule.kind == RecordSchedule::Kind::kEvery) {
        if (schedule.every == 0) throw InvalidArgument("record_steps: every must be >= 1");
        for (std::size_t k = schedule.every; k < n_steps; k += schedule.every) steps.push_back(k);
    } else {
        if (schedule.n_points < 2) throw InvalidArgument("record_steps: need >= 2 log-spaced points");
        const std::size_t m = schedule.n_points - 1;  // points in [1, n_steps]
        const double top = std::log(static_cast<double>(std::max<std::size_t>(n_steps, 1)));
        for (std::size_t j = 0; j < m; ++j) {
            const double frac = m == 1 ? 1.0 : static_cast<double>(j) / static_cast<double>(m - 1);
            steps.push_back(static_cast<std::size_t>(std::llround(std::exp(top * frac))));
        }
    }
    steps.push_back(n_steps);
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    while (!steps.empty() && steps.back() > n_steps) steps.pop_back();
    return steps;
}

void RunConfig::validate() const {
    if (d == 0) throw InvalidArgument("config: d must be >= 1");
    if (!std::isfinite(a) || a < 0.0) throw InvalidArgument("config: a must be finite and >= 0");
    if (!std::isfinite(eta) || eta < 0.0) throw InvalidArgument("config: eta must be >= 0");
    if (K < 2) throw InvalidArgument("config: K must be >= 2 (u2, s2 are always recorded)");
    if (!(sgd_noise_sigma >= 0.0)) throw InvalidArgument("config: sgd_noise_sigma must be >= 0");
    if (!(init_radius > 0.0) || !std::isfinite(init_radius)) {
        throw InvalidArgument("config: init_radius must be > 0");
    }
    if (record_schedule.kind == RecordSchedule::Kind::kLogSpaced && record_schedule.n_points < 2) {
        throw InvalidArgument("config: log-spaced schedule needs >= 2 points");
    }
    if (record_schedule.kind == RecordSchedule::Kind::kEvery && record_schedule.every == 0) {
        throw InvalidArgument("config: record every must be >= 1");
    }
}

std::string RunConfig::digest() const {
    std::ostringstream os;
    os.precision(17);
    os << "d=" << d << ";a=" << a << ";seed=" << seed << ";eta=" << eta << ";n=" << n_steps
       << ";sched=" << (record_schedule.kind == RecordSchedule::Kind::kLogSpaced ? "log" : "every")
       << ":" << record_schedule.n_points << ":" << record_schedule.every
       << ";mode=" << (mode == RunMode::kPopulation ? "pop" : "sgd") << ";sigma=" << sgd_noise_sigma
       << ";teacher=" << (teacher_mode == TeacherNorm::kQUnit ? "q_unit" : "euclid_d") << ";K=" << K
       << ";r0=" << init_radius << ";int=" << (integrator == Integrator::kEuler ? "euler" : "rk4")
       << ";flip=" << flip_to_positive_overlap << ";hook=" << sgd_population_gradient;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

Problem make_problem(const RunConfig& cfg) {
    cfg.validate();
    Problem p;
    p.spec = build_spectrum(cfg.d, cfg.a);
    p.teacher = sample_teacher(p.spec, cfg.seed, cfg.teacher_mode, cfg.K);

    Rng rng = make_rng(cfg.seed, Stream::kInit);
    std::normal_distribution<double> normal;
    p.w0.resize(cfg.d);
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (auto& v : p.w0) {
            v = normal(rng);
            norm_sq += v * v;
        }
    } while (norm_sq == 0.0);
    const double scale = cfg.init_radius / std::sqrt(norm_sq);
    for (auto& v : p.w0) v *= scale;

    if (cfg.flip_to_positive_overlap && q_inner(p.spec, p.w0, p.teacher.w_star) < 0.0) {
        for (auto& v : p.teacher.w_star) v = -v;
        p.teacher_flipped = true;
    }
    return p;
}

namespace {

void check_problem(const RunConfig& cfg, const Problem& p) {
    cfg.validate();
    if (p.spec.d != cfg.d || p.w0.size() != cfg.d || p.teacher.w_star.size() != cfg.d) {
        throw InvalidArgument("run: problem dimension does not match config");
    }
}

// Collects records; owns the partial-trajectory bookkeeping shared by all runners.
class Recorder {
public:
    Recorder(const RunConfig& cfg, const Problem& p)
        : cfg_(cfg), p_(p), steps_(record_steps(cfg.record_schedule, cfg.n_steps)) {
        traj_.config_digest = cfg.digest();
        traj_.seed = cfg.seed;
        traj_.teacher_flipped = p.teacher_flipped;
        if (cfg.eta * 12.0 * p.spec.lambda_max() >= 1.0) {
            traj_.warnings.push_back("eta * 12 * lambda_1 >= 1: outside the linearized stability bound");
        }
    }

    bool due(std::size_t step) const { return next_ < steps_.size() && steps_[next_] == step; }

    const StatRecord& record(std::size_t step, std::span<const double> w) {
        StatRecord rec = summary_stats(w, p_.teacher, p_.spec, cfg_.K);
        return push(step, std::move(rec), w);
    }

    const StatRecord& push(std::size_t step, StatRecord rec, std::span<const double> w) {
        rec.step = step;
        rec.t = static_cast<double>(step) * cfg_.eta;
        traj_.records.push_back(std::move(rec));
        if (cfg_.keep_weights) traj_.weights.emplace_back(w.begin(), w.end());
        ++next_;
        return traj_.records.back();
    }

    Trajectory& trajectory() { return traj_; }

    Trajectory finish() {
        if (cfg_.eta > 0.0) {
            traj_ = accumulate_theta(std::move(traj_));
        }
        return std::move(traj_);
    }

    [[noreturn]] void diverge(std::size_t step) {
        traj_.truncated = true;
        auto partial = std::make_shared<Trajectory>(finish());
        throw DivergenceError("non-finite state at step " + std::to_string(step) +
                                  " (step size too large?)",
                              step, std::move(partial));
    }

private:
    const RunConfig& cfg_;
    const Problem& p_;
    std::vector<std::size_t> steps_;
    std::size_t next_ = 0;
    Trajectory traj_;
};

struct StepStats {
    double s = 0.0;
    double u = 0.0;
};

StepStats su_of(std::span<const double> w, const Problem& p) {
    StepStats r;
    const auto& lam = p.spec.lambdas;
    const auto& ws = p.teacher.w_star;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double lw = lam[i] * w[i];
        r.s += lw * w[i];
        r.u += lw * ws[i];
    }
    return r;
}

// One explicit-Euler step of the population flow; returns s, u of the new iterate.
StepStats euler_step(std::vector<double>& w, const Problem& p, double eta, StepStats cur) {
    const auto& lam = p.spec.lambdas;
    const auto& ws = p.teacher.w_star;
    const double c = eta * 4.0 * (p.teacher.s_star() - 3.0 * cur.s);
    const double g = eta * 8.0 * cur.u;
    StepStats next;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double wi = w[i] + lam[i] * (c * w[i] + g * ws[i]);
        w[i] = wi;
        const double lw = lam[i] * wi;
        next.s += lw * wi;
        next.u += lw * ws[i];
    }
    return next;
}

void drift(std::span<const double> w, const Problem& p, std::vector<double>& out) {
    const StepStats st = su_of(w, p);
    const auto& lam = p.spec.lambdas;
    const auto& ws = p.teacher.w_star;
    const double c = 4.0 * (p.teacher.s_star() - 3.0 * st.s);
    const double g = 8.0 * st.u;
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = lam[i] * (c * w[i] + g * ws[i]);
}

StepStats rk4_step(std::vector<double>& w, const Problem& p, double eta) {
    const std::size_t d = w.size();
    std::vector<double> k1(d), k2(d), k3(d), k4(d), tmp(d);
    drift(w, p, k1);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = w[i] + 0.5 * eta * k1[i];
    drift(tmp, p, k2);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = w[i] + 0.5 * eta * k2[i];
    drift(tmp, p, k3);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = w[i] + eta * k3[i];
    drift(tmp, p, k4);
    for (std::size_t i = 0; i < d; ++i) {
        w[i] += eta / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return su_of(w, p);
}

bool finite(StepStats st) { return std::isfinite(st.s) && std::isfinite(st.u); }

}  // namespace

Trajectory run_population_flow(const RunConfig& cfg) {
    const Problem p = make_problem(cfg);
    return run_population_flow(cfg, p);
}

Trajectory run_population_flow(const RunConfig& cfg, const Problem& p, const StopPredicate& stop) {
    check_problem(cfg, p);
    Recorder rec(cfg, p);
    std::vector<double> w = p.w0;
    StepStats cur = su_of(w, p);
    const double s_star = p.teacher.s_star();
    double loss_prev = loss_from_stats(cur.s, cur.u, s_star);

    for (std::size_t step = 0;; ++step) {
        if (rec.due(step)) {
            const StatRecord& r = rec.record(step, w);
            if (stop && stop(r)) break;
        }
        if (step == cfg.n_steps) break;
        cur = cfg.integrator == Integrator::kEuler ? euler_step(w, p, cfg.eta, cur)
                                                   : rk4_step(w, p, cfg.eta);
        if (!finite(cur)) rec.diverge(step + 1);
        const double loss = loss_from_stats(cur.s, cur.u, s_star);
        if (loss > loss_prev + 1e-9) ++rec.trajectory().descent_violations;
        loss_prev = loss;
    }
    Trajectory traj = rec.finish();
    if (traj.descent_violations > 0) {
        traj.warnings.push_back("loss increased by > 1e-9 on " +
                                std::to_string(traj.descent_violations) + " steps");
    }
    return traj;
}

std::vector<double> sgd_sample_gradient(std::span<const double> w, const Teacher& teacher,
                                        const Spectrum& spec, double noise_sigma, Rng& rng) {
    if (w.size() != spec.d || teacher.w_star.size() != spec.d) {
        throw InvalidArgument("sgd_sample_gradient: dimension mismatch");
    }
    std::normal_distribution<double> normal;
    std::vector<double> x(spec.d);
    double xw = 0.0, xws = 0.0;
    for (std::size_t i = 0; i < spec.d; ++i) {
        x[i] = std::sqrt(spec.lambdas[i]) * normal(rng);
        xw += x[i] * w[i];
        xws += x[i] * teacher.w_star[i];
    }
    const double y = xws * xws + noise_sigma * normal(rng);
    const double coef = 4.0 * (xw * xw - y) * xw;
    for (auto& v : x) v *= coef;
    return x;
}

Trajectory run_online_sgd(const RunConfig& cfg) {
    const Problem p = make_problem(cfg);
    return run_online_sgd(cfg, p);
}

Trajectory run_online_sgd(const RunConfig& cfg, const Problem& p, const StopPredicate& stop) {
    check_problem(cfg, p);
    if (cfg.mode != RunMode::kSgd) throw InvalidArgument("run_online_sgd: mode must be SGD");
    Recorder rec(cfg, p);
    std::vector<double> w = p.w0;
    const auto& lam = p.spec.lambdas;
    const auto& ws = p.teacher.w_star;
    std::vector<double> sqrt_lambda(cfg.d), x(cfg.d);
    for (std::size_t i = 0; i < cfg.d; ++i) sqrt_lambda[i] = std::sqrt(lam[i]);
    Rng rng = make_rng(cfg.seed, Stream::kSgdSamples);
    std::normal_distribution<double> normal;
    StepStats cur = su_of(w, p);

    for (std::size_t step = 0;; ++step) {
        if (rec.due(step)) {
            const StatRecord& r = rec.record(step, w);
            if (stop && stop(r)) break;
        }
        if (step == cfg.n_steps) break;
        if (cfg.sgd_population_gradient) {
            cur = euler_step(w, p, cfg.eta, cur);
            if (!finite(cur)) rec.diverge(step + 1);
            continue;
        }
        double xw = 0.0, xws = 0.0;
        for (std::size_t i = 0; i < cfg.d; ++i) {
            x[i] = sqrt_lambda[i] * normal(rng);
            xw += x[i] * w[i];
            xws += x[i] * ws[i];
        }
        const double y = xws * xws + cfg.sgd_noise_sigma * normal(rng);
        const double coef = cfg.eta * 4.0 * (xw * xw - y) * xw;
        if (!std::isfinite(coef)) rec.diverge(step);
        for (std::size_t i = 0; i < cfg.d; ++i) w[i] -= coef * x[i];
    }
    return rec.finish();
}

Trajectory run_truncated_hierarchy(const RunConfig& cfg, int k_trunc, Closure closure) {
    const Problem p = make_problem(cfg);
    return run_truncated_hierarchy(cfg, p, k_trunc, closure);
}

Trajectory run_truncated_hierarchy(const RunConfig& cfg, const Problem& p, int k_trunc,
                                   Closure closure) {
    check_problem(cfg, p);
    if (k_trunc < 2) throw InvalidArgument("run_truncated_hierarchy: k_trunc must be >= 2");
    const auto K = static_cast<std::size_t>(k_trunc);

    // Levels 1..K+2 (index k-1). Levels above K are closure-supplied.
    std::vector<double> s_star(K + 2);
    for (std::size_t k = 0; k < K + 2; ++k) {
        s_star[k] = teacher_moment(p.spec, p.teacher, static_cast<int>(k + 1));
    }
    const StatRecord init = summary_stats(p.w0, p.teacher, p.spec, k_trunc);
    std::vector<double> u(K + 2, 0.0), s(K + 2, 0.0);
    std::copy(init.u.begin(), init.u.end(), u.begin());
    std::copy(init.s.begin(), init.s.end(), s.begin());

    auto close = [&] {
        for (std::size_t k = K; k < K + 2; ++k) {
            if (closure == Closure::kZero) {
                u[k] = 0.0;
                s[k] = 0.0;
            } else {
                const double ratio = s_star[K - 1] > 0.0 ? s_star[k] / s_star[K - 1] : 0.0;
                u[k] = u[K - 1] * ratio;
                s[k] = s[K - 1] * ratio;
            }
        }
    };

    Recorder rec(cfg, p);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> nu(K), ns(K);
    const std::vector<double> no_weights;
    for (std::size_t step = 0;; ++step) {
        if (rec.due(step)) {
            StatRecord r;
            r.u.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(K));
            r.s.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(K));
            r.mse = nan;
            rec.push(step, std::move(r), no_weights);
        }
        if (step == cfg.n_steps) break;
        close();
        const double c = cfg.eta * 4.0 * (s_star[0] - 3.0 * s[0]);
        const double g = cfg.eta * 8.0 * u[0];
        for (std::size_t k = 0; k < K; ++k) {
            nu[k] = u[k] + c * u[k + 1] + g * s_star[k + 1];
            ns[k] = s[k] + 2.0 * (c * s[k + 1] + g * u[k + 1]) +
                    (c * c * s[k + 2] + 2.0 * c * g * u[k + 2] + g * g * s_star[k + 2]);
        }
        std::copy(nu.begin(), nu.end(), u.begin());
        std::copy(ns.begin(), ns.end(), s.begin());
        if (!std::isfinite(u[0]) || !std::isfinite(s[0])) rec.diverge(step + 1);
    }
    return rec.finish();
}

}  // namespace anisopr
