// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria (capped at 100).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "anisopr/dynamics.hpp"
#include "anisopr/error.hpp"
#include "anisopr/experiments.hpp"
#include "anisopr/fit.hpp"
#include "anisopr/model.hpp"
#include "anisopr/phases.hpp"
#include "anisopr/scaling.hpp"
#include "anisopr/spectrum.hpp"
#include "anisopr/volterra.hpp"

using namespace anisopr;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> normal_vector(std::size_t d, Rng& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(d);
    for (auto& x : v) x = normal(rng);
    return v;
}

double rel_vec_err(const std::vector<double>& got, const std::vector<double>& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        num = std::max(num, std::abs(got[i] - want[i]));
        den = std::max(den, std::abs(want[i]));
    }
    return num / std::max(den, 1e-300);
}

// Linear interpolation of a record field at time t.
double interp(const Trajectory& tr, double t, double (*field)(const StatRecord&)) {
    const auto& r = tr.records;
    for (std::size_t j = 1; j < r.size(); ++j) {
        if (r[j].t >= t) {
            const double w = (t - r[j - 1].t) / (r[j].t - r[j - 1].t);
            return field(r[j - 1]) + w * (field(r[j]) - field(r[j - 1]));
        }
    }
    return field(r.back());
}

RunConfig fig3_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.d = 1000;
    cfg.a = 2.0;
    cfg.eta = 1e-2;
    cfg.n_steps = 10'000'000;
    cfg.seed = seed;
    return cfg;
}

bool reached_T2(const StatRecord& r) { return std::min(std::abs(r.u1()), r.s1()) >= 0.95; }

// ------------------------------------------------------------------ criteria

Verdict loss_vs_monte_carlo() {
    const Spectrum spec = build_spectrum(8, 1.5);
    const Teacher t = sample_teacher(spec, kSeed);
    Rng rng = make_rng(kSeed, Stream::kProbe);
    int agree = 0;
    for (int k = 0; k < 100; ++k) {
        const auto w = normal_vector(8, rng);
        const MonteCarloEstimate mc = loss_monte_carlo(w, t, spec, 100'000, kSeed + 1000 + k);
        if (std::abs(mc.mean - loss_closed_form(w, t, spec).value) <= 3 * mc.std_error) ++agree;
    }
    return {agree >= 95, fmt("%d/100 within 3 SE (need >= 95)", agree)};
}

Verdict derivatives_vs_finite_differences() {
    double worst_g = 0.0, worst_h = 0.0;
    Rng rng = make_rng(kSeed, Stream::kProbe);
    for (std::size_t d : {1u, 4u, 10u}) {
        const Spectrum spec = build_spectrum(d, 1.5);
        const Teacher t = sample_teacher(spec, kSeed);
        for (int k = 0; k < 100; ++k) {
            const auto w = normal_vector(d, rng);
            const auto v = normal_vector(d, rng);
            std::vector<double> fg(d), fh(d);
            const double hg = 1e-5, hh = 1e-5;
            for (std::size_t i = 0; i < d; ++i) {
                auto wp = w, wm = w;
                wp[i] += hg;
                wm[i] -= hg;
                fg[i] = (loss_closed_form(wp, t, spec).value - loss_closed_form(wm, t, spec).value) / (2 * hg);
            }
            auto wp = w, wm = w;
            for (std::size_t i = 0; i < d; ++i) {
                wp[i] += hh * v[i];
                wm[i] -= hh * v[i];
            }
            const auto gp = gradient(wp, t, spec), gm = gradient(wm, t, spec);
            for (std::size_t i = 0; i < d; ++i) fh[i] = (gp[i] - gm[i]) / (2 * hh);
            worst_g = std::max(worst_g, rel_vec_err(gradient(w, t, spec), fg));
            worst_h = std::max(worst_h, rel_vec_err(hessian_apply(w, v, t, spec), fh));
        }
    }
    return {worst_g <= 1e-6 && worst_h <= 1e-5,
            fmt("worst gradient rel err %.2e (<= 1e-6), Hessian action %.2e (<= 1e-5)", worst_g, worst_h)};
}

Verdict critical_points() {
    const Spectrum spec = build_spectrum(50, 2.0);
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Teacher t = sample_teacher(spec, seed);
        auto neg = t.w_star;
        for (auto& x : neg) x = -x;
        const bool good = classify_critical_point(t.w_star, t, spec) == CriticalKind::kGlobalMin &&
                          classify_critical_point(neg, t, spec) == CriticalKind::kGlobalMin &&
                          classify_critical_point(std::vector<double>(50, 0.0), t, spec) == CriticalKind::kLocalMax &&
                          classify_critical_point(construct_saddle_point(t, spec), t, spec) == CriticalKind::kSaddle;
        if (good) ++ok;
    }
    return {ok == 10, fmt("%d/10 seeds classify +-w*, 0, saddle correctly", ok)};
}

Verdict isotropic_dispersion() {
    double worst_iso = 0.0, worst_res = 0.0;
    bool monotone = true;
    for (std::size_t d : {1u, 10u, 1000u}) {
        const Spectrum spec = build_spectrum(d, 0.0);
        const DispersionResult r = solve_dispersion(sample_teacher(spec, kSeed), spec);
        worst_iso = std::max(worst_iso, std::abs(r.rho_true - 12.0 / static_cast<double>(d)));
    }
    for (double a : {0.0, 0.5, 1.0, 1.5, 2.0, 4.0}) {
        for (std::size_t d : {1u, 10u, 1000u, 10000u}) {
            const Spectrum spec = build_spectrum(d, a);
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                const Teacher t = sample_teacher(spec, seed);
                double prev = 0.0;
                for (double b : {2.0, 4.0, 8.0}) {
                    const DispersionResult r = solve_dispersion(t, spec, b);
                    worst_res = std::max(worst_res, std::abs(1.0 - 8.0 * laplace_K(t, spec, b, r.rho_true)));
                    if (!(r.rho_true > prev)) monotone = false;
                    prev = r.rho_true;
                }
            }
        }
    }
    return {worst_iso <= 1e-10 && worst_res <= 1e-12 && monotone,
            fmt("|rho - 12/d| max %.1e (<= 1e-10); residual max %.1e (<= 1e-12); rho(b) increasing: %s",
                worst_iso, worst_res, monotone ? "yes" : "no")};
}

Verdict rate_law() {
    std::string detail;
    bool pass = true;
    double prev_rate = 0.0;
    for (double a : {1.5, 2.0, 4.0}) {
        RunConfig cfg;
        cfg.d = 1000;
        cfg.a = a;
        cfg.eta = 1e-3;
        cfg.seed = kSeed;
        cfg.n_steps = 2'000'000;
        // At unit radius u(0) is already above 1e-3, leaving no window below 0.01.
        cfg.init_radius = 1e-2;
        cfg.record_schedule = RecordSchedule::every_k(10);
        const Problem p = make_problem(cfg);
        const Trajectory tr = run_population_flow(cfg, p, [](const StatRecord& r) { return std::abs(r.u1()) > 0.02; });
        const double u0 = std::abs(tr.records.front().u1());
        const EscapeRateFit f = fit_escape_rate(tr, 10 * u0, 0.01);
        const double rho = solve_dispersion(p.teacher, p.spec).rho_true;
        const double err = std::abs(f.rate - rho) / rho;
        if (err > 0.05 || !(f.rate > prev_rate)) pass = false;
        prev_rate = f.rate;
        detail += fmt("a=%g fit %.4f vs rho %.4f (%.1f%%, %zu pts); ", a, f.rate, rho, 100 * err, f.points);
    }
    return {pass, detail + "need <= 5% and increasing in a"};
}

Verdict volterra_vs_simulation() {
    RunConfig cfg;
    // The Volterra equation describes the continuous flow; eta = 1e-4 keeps the
    // Euler bias well below the tolerance.
    cfg.d = 200;
    cfg.a = 2.0;
    cfg.eta = 1e-4;
    cfg.seed = kSeed;
    cfg.n_steps = 10'000'000;
    cfg.record_schedule = RecordSchedule::every_k(100);
    const Problem p = make_problem(cfg);
    const Trajectory tr = run_population_flow(cfg, p, [](const StatRecord& r) { return r.s1() > 0.06; });
    double t_end = 0.0;
    for (const auto& r : tr.records) {
        if (r.s1() > 0.05) break;
        t_end = r.t;
    }
    const VolterraSolution sol = solve_volterra_u(p.w0, p.teacher, p.spec, 2.5e-4, t_end);
    double worst = 0.0, worst_t = 0.0;
    std::size_t n = 0;
    for (const auto& r : tr.records) {
        if (r.t > t_end) break;
        const double err = std::abs(sol.at(r.t) - r.u1()) / std::abs(r.u1());
        if (err > worst) {
            worst = err;
            worst_t = r.t;
        }
        ++n;
    }
    return {worst <= 0.05, fmt("eta=1e-4: max rel err %.2f%% at t=%.3f over %zu records with s <= 0.05 (t <= %.3f); need <= 5%%",
                               100 * worst, worst_t, n, t_end)};
}

Verdict threshold_persistence() {
    const RunConfig cfg = fig3_config(kSeed);
    const Trajectory tr = run_population_flow(cfg);
    const PhaseReport ph = detect_phases(tr);
    if (!ph.T1_prime) return {false, "T1' not detected"};
    std::size_t checked = 0, bad = 0;
    for (const auto& r : tr.records) {
        if (r.t < *ph.T1_prime) continue;
        ++checked;
        if (!(r.s1() > 1.0 / 3.0)) ++bad;
    }
    const auto& last = tr.records.back();
    const bool final_ok = last.u1() >= 0.95 && last.s1() >= 0.95;
    return {bad == 0 && final_ok,
            fmt("T1'=%.4f; %zu/%zu records after T1' with s <= 1/3; final u=%.6f s=%.6f (need >= 0.95)",
                *ph.T1_prime, bad, checked, last.u1(), last.s1())};
}

Verdict plateau() {
    std::vector<std::future<std::pair<double, double>>> jobs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        jobs.push_back(std::async(std::launch::async, [seed] {
            const RunConfig cfg = fig3_config(seed);
            const Problem p = make_problem(cfg);
            const Trajectory tr = run_population_flow(cfg, p, reached_T2);
            const PhaseReport ph = detect_phases(tr);
            if (!ph.T2) return std::make_pair(std::nan(""), p.teacher.sigma_star_sq);
            const double m = interp(tr, *ph.T2, [](const StatRecord& r) { return r.mse; });
            return std::make_pair(m, p.teacher.sigma_star_sq);
        }));
    }
    bool pass = true;
    std::string detail;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        const auto [m, sig] = jobs[k].get();
        const double rel = std::abs(m - sig) / sig;
        if (!(rel <= 0.2)) pass = false;
        detail += fmt("seed %zu: %.4f vs %.4f (%.1f%%); ", k + 1, m, sig, 100 * rel);
    }
    return {pass, detail + "need <= 20%"};
}

Verdict phase3_prediction() {
    RunConfig cfg;
    cfg.d = 300;
    cfg.a = 2.0;
    cfg.eta = 1e-3;
    cfg.seed = kSeed;
    cfg.n_steps = 100'000'000;
    cfg.record_schedule = RecordSchedule::log_spaced(4000);
    cfg.keep_weights = true;
    const Problem p = make_problem(cfg);
    const Trajectory tr = run_population_flow(cfg, p);
    const PhaseReport ph = detect_phases(tr);
    if (!ph.T2) return {false, "T2 not detected"};
    std::size_t j2 = 0;
    while (tr.records[j2].t < *ph.T2) ++j2;
    const MixWeights mw = mix_weights_from_trajectory(tr, j2, p.teacher, p.spec);
    const double t2 = tr.records[j2].t;
    double worst = 0.0, worst_tau = 0.0;
    std::size_t n = 0, inside = 0;
    std::vector<double> taus;
    for (std::size_t j = j2; j < tr.records.size(); ++j) taus.push_back(tr.records[j].t - t2);
    const auto curve = predict_phase3_mse(p.spec, p.teacher, mw, taus);
    for (std::size_t k = 0; k < curve.size(); ++k) {
        const double sim = tr.records[j2 + k].mse;
        if (sim < 1e-3 * mw.mse_at_t2) break;
        const double err = std::abs(sim - curve[k].mse) / sim;
        if (err > worst) {
            worst = err;
            worst_tau = curve[k].tau;
        }
        if (std::abs(sim - curve[k].mse) <= curve[k].envelope) ++inside;
        ++n;
    }
    return {n > 10 && worst <= 0.1,
            fmt("T2=%.3f, MSE(T2)=%.4f; max rel err %.2f%% at tau=%.3g over %zu records; envelope coverage %zu/%zu; need <= 10%%",
                t2, mw.mse_at_t2, 100 * worst, worst_tau, n, inside, n)};
}

Verdict mesoscopic_exponent() {
    bool pass = true;
    std::string detail;
    std::size_t late_points = 0, late_bad = 0, early_points = 0, early_bad = 0;
    for (double a : {1.5, 2.0, 4.0}) {
        const Spectrum spec = build_spectrum(100000, a);
        const double beta = spec.beta();
        std::vector<double> taus, gap;
        for (int i = 0; i < 40; ++i) {
            const double x = 10.0 * std::pow(10.0, i / 39.0);  // x_d in [10, 100]
            const double tau = std::pow(x, a) / beta;
            taus.push_back(tau);
            gap.push_back(1.0 - spectral_mix_exact(spec, tau));
        }
        const double slope = fit_loglog_slope(taus, gap).slope;
        const double rel = std::abs(slope * a - 1.0);
        if (rel > 0.05) pass = false;
        detail += fmt("a=%g slope %.4f vs %.4f (%.1f%%); ", a, slope, 1.0 / a, 100 * rel);

        for (int i = 0; i < 20; ++i) {
            const double tau = 0.05 * std::pow(10.0, -i / 5.0) / beta;
            const AsymptoticMix e = spectral_mix_asymptotic(spec, tau);
            ++early_points;
            if (e.regime != MixRegime::kEarly ||
                std::abs(e.value - spectral_mix_exact(spec, tau)) > 2 * std::pow(16 * tau, 2) / 1e5) {
                ++early_bad;
            }
        }
        // 100-point grid across all regimes, up to x_d = 100 d.
        const double tau_max = std::pow(100.0 * 1e5, a) / beta;
        for (int i = 0; i < 100; ++i) {
            const double tau = 1e-3 / beta * std::pow(tau_max * beta / 1e-3, i / 99.0);
            const AsymptoticMix m = spectral_mix_asymptotic(spec, tau);
            if (m.regime != MixRegime::kLate) continue;
            ++late_points;
            if (!(m.value >= spectral_mix_exact(spec, tau))) ++late_bad;
        }
    }
    pass = pass && early_bad == 0 && late_bad == 0 && late_points > 0;
    return {pass, detail + fmt("EARLY violations %zu/%zu; LATE bound violations %zu/%zu", early_bad,
                               early_points, late_bad, late_points)};
}

Verdict t2_scaling() {
    // Exponent: finite-d corrections are large at d = 1000, so the exponent is
    // read at d = 1e5.
    RunConfig big;
    big.d = 100000;
    big.a = 2.0;
    big.eta = 1e-2;
    big.seed = kSeed;
    big.n_steps = 100000;
    big.keep_weights = true;
    big.record_schedule = RecordSchedule::every_k(1);
    const Problem pb = make_problem(big);
    const Trajectory tb = run_population_flow(big, pb, [](const StatRecord& r) { return r.s1() > 0.6; });
    std::vector<double> le, lg;
    std::string detail;
    for (double eps : {0.2, 0.1, 0.05}) {
        const T2Prediction q = predicted_T2(pb.teacher, pb.spec, tb, eps, 0.05);
        le.push_back(std::log(1.0 / eps));
        lg.push_back(std::log((q.value - q.T1_prime) / std::log(1.0 / eps)));
    }
    const double expo = least_squares(le, lg).slope;
    const double want = 2 * 2.0 / (2.0 - 1.0);
    const double rel = std::abs(expo - want) / want;
    detail += fmt("exponent %.3f vs %.1f (%.1f%%, d=1e5); ", expo, want, 100 * rel);

    std::vector<std::future<std::pair<double, double>>> jobs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        jobs.push_back(std::async(std::launch::async, [seed] {
            RunConfig cfg = fig3_config(seed);
            cfg.keep_weights = true;
            const Problem p = make_problem(cfg);
            const Trajectory tr = run_population_flow(cfg, p, reached_T2);
            const PhaseReport ph = detect_phases(tr);
            const double pred = predicted_T2(p.teacher, p.spec, tr, 0.05, 0.05).value;
            return std::make_pair(ph.T2 ? *ph.T2 : std::nan(""), pred);
        }));
    }
    int bounded = 0;
    double worst_ratio = 0.0;
    for (auto& j : jobs) {
        const auto [det, pred] = j.get();
        if (det <= pred) ++bounded;
        worst_ratio = std::max(worst_ratio, det / pred);
    }
    detail += fmt("detected <= predicted on %d/10 seeds (max ratio %.2e)", bounded, worst_ratio);
    return {rel <= 0.15 && bounded == 10, detail};
}

Verdict tail_exponent() {
    bool pass = true;
    std::string detail;
    for (double a : {2.0, 4.0}) {
        const Spectrum spec = build_spectrum(10000, a);
        double mean = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            mean += tail_mass_exponent_check(spec, sample_teacher(spec, seed)).slope / 20.0;
        }
        const double want = 1.0 - 1.0 / a;
        if (std::abs(mean - want) > 0.05) pass = false;
        detail += fmt("a=%g mean slope %.4f vs %.4f; ", a, mean, want);
    }
    return {pass, detail + "need +- 0.05"};
}

Verdict sgd_sanity() {
    RunConfig cfg;
    cfg.d = 500;
    cfg.a = 1.0;
    cfg.eta = 1e-3;
    cfg.sgd_noise_sigma = 0.05;
    cfg.n_steps = 1'000'000;
    cfg.mode = RunMode::kSgd;
    cfg.seed = kSeed;
    const Trajectory tr = run_online_sgd(cfg);
    double max_u = 0.0, max_s = 0.0;
    for (const auto& r : tr.records) {
        max_u = std::max(max_u, r.u1());
        max_s = std::max(max_s, r.s1());
    }

    // Unbiasedness of the per-sample gradient at 20 random states.
    const Problem p = make_problem(cfg);
    Rng probe = make_rng(kSeed, Stream::kProbe);
    Rng samples = make_rng(kSeed, Stream::kSgdSamples);
    const std::size_t d = cfg.d, n = 20000;
    int states_ok = 0;
    double worst_fraction = 1.0;
    for (int k = 0; k < 20; ++k) {
        auto w = normal_vector(d, probe);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& x : w) x *= scale * (0.5 + k / 10.0);
        std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const auto g = sgd_sample_gradient(w, p.teacher, p.spec, cfg.sgd_noise_sigma, samples);
            for (std::size_t i = 0; i < d; ++i) {
                sum[i] += g[i];
                sumsq[i] += g[i] * g[i];
            }
        }
        const auto exact = gradient(w, p.teacher, p.spec);
        std::size_t within = 0;
        for (std::size_t i = 0; i < d; ++i) {
            const double mean = sum[i] / n;
            const double var = (sumsq[i] / n - mean * mean) * n / (n - 1.0);
            if (std::abs(mean - exact[i]) <= 3 * std::sqrt(var / n)) ++within;
        }
        const double frac = static_cast<double>(within) / d;
        worst_fraction = std::min(worst_fraction, frac);
        if (frac >= 0.95) ++states_ok;
    }
    const bool dyn_ok = max_u > 0.5 && max_s > 1.0 / 3.0;
    return {dyn_ok && states_ok == 20,
            fmt("max u %.4f (> 0.5), max s %.4f (> 1/3); %d/20 states with >= 95%% of coordinates within 3 SE "
                "(worst %.1f%%)",
                max_u, max_s, states_ok, 100 * worst_fraction)};
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "anisopr_acceptance_determinism";
    fs::remove_all(root);
    std::size_t files = 0, differ = 0;
    auto slurp = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    struct Case {
        FigureTarget target;
        ReproduceOptions opts;
    };
    ReproduceOptions fig3;
    fig3.n_steps = 1'000'000;
    for (const Case& c : {Case{FigureTarget::kFig7, {}}, Case{FigureTarget::kFig3, fig3}}) {
        const fs::path a = root / (std::string(to_string(c.target)) + "_a");
        const fs::path b = root / (std::string(to_string(c.target)) + "_b");
        ReproduceOptions first = c.opts, second = c.opts;
        second.threads = 1;
        reproduce(c.target, a, first);
        reproduce(c.target, b, second);
        for (const auto& e : fs::directory_iterator(a)) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            if (slurp(e.path()) != slurp(b / e.path().filename())) ++differ;
        }
    }
    fs::remove_all(root);
    return {files > 0 && differ == 0, fmt("FIG7 and FIG3 reproduced twice: %zu CSVs, %zu differ", files, differ)};
}

struct Criterion {
    const char* name;
    std::function<Verdict()> run;
    double budget_seconds;  // 0: none
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"closed-form loss vs Monte-Carlo", loss_vs_monte_carlo, 30},
        {"gradient and Hessian action vs finite differences", derivatives_vs_finite_differences, 5},
        {"critical-point classification", critical_points, 0},
        {"isotropic dispersion closed form", isotropic_dispersion, 0},
        {"Phase-I rate law", rate_law, 120},
        {"Volterra vs simulation", volterra_vs_simulation, 0},
        {"threshold persistence", threshold_persistence, 0},
        {"plateau", plateau, 0},
        {"Phase-III prediction", phase3_prediction, 0},
        {"mesoscopic exponent", mesoscopic_exponent, 0},
        {"T2 scaling", t2_scaling, 0},
        {"tail-exponent statistic", tail_exponent, 0},
        {"SGD sanity", sgd_sanity, 0},
        {"determinism", determinism, 0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0 && secs > c.budget_seconds) {
            v.pass = false;
            v.detail += fmt("; over the %.0f s budget", c.budget_seconds);
        }
        if (!v.pass) ++failed;
        std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return std::min(failed, 100);
}
