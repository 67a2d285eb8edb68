#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "anisopr/dynamics.hpp"
#include "anisopr/error.hpp"
#include "anisopr/experiments.hpp"
#include "anisopr/phases.hpp"
#include "anisopr/scaling.hpp"
#include "anisopr/spectrum.hpp"
#include "anisopr/volterra.hpp"

namespace {

using namespace anisopr;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

// Flags that override fields of the run configuration; names mirror the JSON keys.
struct Overrides {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> d;
    std::optional<double> a;
    std::optional<double> eta;
    std::optional<std::size_t> n_steps;
    std::optional<double> sgd_noise_sigma;
    std::optional<std::string> teacher_mode;
    std::optional<int> K;
    std::optional<double> init_radius;
    std::optional<std::string> integrator;
    std::optional<std::size_t> record_points;
    std::optional<std::size_t> record_every;
    std::optional<std::string> experiment_id;
    std::optional<unsigned> threads;
    std::optional<double> delta;
    std::optional<double> s0;
    std::optional<double> epsilon;

    void add_problem(CLI::App* app) {
        app->add_option("--config", config, "JSON configuration file");
        app->add_option("--seed", seed, "Experiment seed");
        app->add_option("--d", d, "Dimension");
        app->add_option("--a", a, "Spectral decay exponent");
        app->add_option("--teacher_mode", teacher_mode, "q_unit or euclid_d");
        app->add_option("--init_radius", init_radius, "Radius of the initial sphere");
    }

    void add_run(CLI::App* app) {
        add_problem(app);
        app->add_option("--out", out, "Output directory");
        app->add_option("--eta", eta, "Step size");
        app->add_option("--n_steps", n_steps, "Number of steps");
        app->add_option("--sgd_noise_sigma", sgd_noise_sigma, "Label noise standard deviation");
        app->add_option("--K", K, "Number of recorded moments");
        app->add_option("--integrator", integrator, "euler or rk4");
        app->add_option("--record_points", record_points, "Log-spaced record count");
        app->add_option("--record_every", record_every, "Record every k steps instead");
        app->add_option("--experiment_id", experiment_id, "Prefix of the output files");
        app->add_option("--threads", threads, "Worker threads (0: all cores)");
        add_thresholds(app);
    }

    void add_thresholds(CLI::App* app) {
        app->add_option("--delta", delta, "Escape threshold");
        app->add_option("--s0", s0, "Band margin above 1/3");
        app->add_option("--epsilon", epsilon, "Convergence accuracy");
    }

    ExperimentConfig build(ExperimentConfig base = {}) const {
        ExperimentConfig cfg = config ? load_config(*config, std::move(base)) : std::move(base);
        json j = json::object();
        if (seed) j["seed"] = *seed;
        if (out) j["output_dir"] = *out;
        if (d) j["d"] = *d;
        if (a) j["a"] = *a;
        if (eta) j["eta"] = *eta;
        if (n_steps) j["n_steps"] = *n_steps;
        if (sgd_noise_sigma) j["sgd_noise_sigma"] = *sgd_noise_sigma;
        if (teacher_mode) j["teacher_mode"] = *teacher_mode;
        if (K) j["K"] = *K;
        if (init_radius) j["init_radius"] = *init_radius;
        if (integrator) j["integrator"] = *integrator;
        if (record_points) j["record_schedule"] = {{"kind", "log_spaced"}, {"n_points", *record_points}};
        if (record_every) j["record_schedule"] = {{"kind", "every"}, {"every", *record_every}};
        if (experiment_id) j["experiment_id"] = *experiment_id;
        if (threads) j["threads"] = *threads;
        json ph = json::object();
        if (delta) ph["delta"] = *delta;
        if (s0) ph["s0"] = *s0;
        if (epsilon) ph["epsilon"] = *epsilon;
        if (!ph.empty()) j["phases"] = ph;
        cfg = config_from_json(j, std::move(cfg));
        cfg.validate();
        return cfg;
    }
};

int report(const ExperimentResult& res) {
    std::cout << "manifest: " << res.manifest.string() << " (" << res.points.size() << " point(s), "
              << res.wall_seconds << " s)\n";
    for (const auto& p : res.points) {
        if (p.diverged) std::cerr << "diverged: " << p.label << " at step " << p.divergence_step << '\n';
    }
    return res.any_diverged() ? kExitDivergence : 0;
}

json phase_json(const PhaseReport& r) {
    auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
    return {{"T1", opt(r.T1)},         {"T1_gap", r.T1_gap},         {"T1_prime", opt(r.T1_prime)},
            {"T1_prime_gap", r.T1_prime_gap}, {"T2", opt(r.T2)},   {"T2_gap", r.T2_gap},
            {"delta", r.delta},        {"s0", r.s0},                 {"epsilon", r.epsilon},
            {"u_at_T1", std::isfinite(r.u_at_T1) ? json(r.u_at_T1) : json(nullptr)},
            {"s_at_T1", std::isfinite(r.s_at_T1) ? json(r.s_at_T1) : json(nullptr)},
            {"u2_at_T1", std::isfinite(r.u2_at_T1) ? json(r.u2_at_T1) : json(nullptr)}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anisotropic phase retrieval: dynamics, phase detection and scaling predictions"};
    app.set_version_flag("--version", anisopr::library_version());
    app.require_subcommand(1);

    Overrides sim_o, sgd_o, disp_o, volt_o, scal_o;

    auto* simulate = app.add_subcommand("simulate", "Population gradient descent run (or sweep)");
    sim_o.add_run(simulate);

    auto* sgd = app.add_subcommand("sgd", "Online SGD run (or sweep)");
    sgd_o.add_run(sgd);

    auto* dispersion = app.add_subcommand("dispersion", "Escape rate from the dispersion relation");
    disp_o.add_problem(dispersion);
    double disp_b = 4.0;
    dispersion->add_option("--b", disp_b, "Clock rate b");

    auto* volterra = app.add_subcommand("volterra", "Numerical Phase-I Volterra solution u(t)");
    volt_o.add_problem(volterra);
    volterra->add_option("--out", volt_o.out, "Output directory");
    double volt_h = 1e-2, volt_tmax = 10.0;
    volterra->add_option("--step", volt_h, "Grid step h");
    volterra->add_option("--t_max", volt_tmax, "Horizon");

    auto* phases = app.add_subcommand("phases", "Detect T1, T1', T2 in a trajectory CSV");
    std::string phases_in;
    phases->add_option("--in", phases_in, "Trajectory CSV")->required();
    Overrides ph_o;
    ph_o.add_thresholds(phases);

    auto* scaling = app.add_subcommand("scaling", "Spectral mixing curve S_d and its asymptotic regimes");
    scal_o.add_problem(scaling);
    scaling->add_option("--out", scal_o.out, "Output directory");
    double tau_min = 1e-3, tau_max = 1e6;
    std::size_t tau_points = 200;
    scaling->add_option("--tau_min", tau_min, "Smallest tau (> 0)");
    scaling->add_option("--tau_max", tau_max, "Largest tau");
    scaling->add_option("--points", tau_points, "Log-spaced grid size");

    auto* repro = app.add_subcommand("reproduce", "Run the canned configuration of a figure");
    std::string target_name;
    std::optional<std::uint64_t> repro_seed;
    std::optional<std::size_t> repro_steps;
    std::string repro_out = "out";
    unsigned repro_threads = 0;
    repro->add_option("target", target_name, "FIG1, FIG3, FIG4, FIG6, FIG7 or FIG8")->required();
    repro->add_option("--out", repro_out, "Output directory");
    repro->add_option("--seed", repro_seed, "Seed override");
    repro->add_option("--n_steps", repro_steps, "Shorter run for smoke tests");
    repro->add_option("--threads", repro_threads, "Worker threads (0: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate || *sgd) {
            const bool is_sgd = static_cast<bool>(*sgd);
            ExperimentConfig base;
            base.run.mode = is_sgd ? RunMode::kSgd : RunMode::kPopulation;
            ExperimentConfig cfg = (is_sgd ? sgd_o : sim_o).build(base);
            cfg.run.mode = base.run.mode;
            return report(run_experiment(cfg, &std::cerr));
        }
        if (*dispersion) {
            const RunConfig rc = disp_o.build().run;
            const Problem p = make_problem(rc);
            const DispersionResult r = solve_dispersion(p.teacher, p.spec, disp_b, p.w0);
            const double l1 = p.spec.lambda_max();
            json out = {{"d", rc.d},
                        {"a", rc.a},
                        {"seed", rc.seed},
                        {"b", disp_b},
                        {"rho_true", r.rho_true},
                        {"bracket", {r.bracket.first, r.bracket.second}},
                        {"iterations", r.iterations},
                        {"residual", r.residual},
                        {"d_prime", r.d_prime},
                        {"coefficient", r.coefficient},
                        {"lambda_1", l1},
                        {"gap_over_b_lambda_1", r.rho_true - disp_b * l1}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (*volterra) {
            ExperimentConfig cfg = volt_o.build();
            const Problem p = make_problem(cfg.run);
            const VolterraSolution sol = solve_volterra_u(p.w0, p.teacher, p.spec, volt_h, volt_tmax);
            std::filesystem::create_directories(cfg.output_dir);
            const auto path = cfg.output_dir / "volterra.csv";
            std::ofstream os(path);
            if (!os) throw InvalidArgument("cannot write " + path.string());
            os << "t,u\n";
            for (std::size_t i = 0; i < sol.t.size(); ++i) {
                os << format_double(sol.t[i]) << ',' << format_double(sol.u[i]) << '\n';
            }
            std::cout << path.string() << '\n';
            return 0;
        }
        if (*phases) {
            std::ifstream in(phases_in);
            if (!in) throw InvalidArgument("cannot open " + phases_in);
            const Trajectory traj = read_trajectory_csv(in);
            PhaseOptions opts;
            if (ph_o.delta) opts.delta = *ph_o.delta;
            if (ph_o.s0) opts.s0 = *ph_o.s0;
            if (ph_o.epsilon) opts.epsilon = *ph_o.epsilon;
            std::cout << phase_json(detect_phases(traj, opts)).dump(2) << '\n';
            return 0;
        }
        if (*scaling) {
            ExperimentConfig cfg = scal_o.build();
            if (!(tau_min > 0.0) || !(tau_max > tau_min) || tau_points < 2) {
                throw InvalidArgument("scaling: need 0 < tau_min < tau_max and >= 2 points");
            }
            const Spectrum spec = build_spectrum(cfg.run.d, cfg.run.a);
            std::filesystem::create_directories(cfg.output_dir);
            const auto path = cfg.output_dir / "scaling.csv";
            std::ofstream os(path);
            if (!os) throw InvalidArgument("cannot write " + path.string());
            os << "tau,s_exact,regime,s_asymptotic,upper_bound\n";
            for (std::size_t k = 0; k < tau_points; ++k) {
                const double f = static_cast<double>(k) / static_cast<double>(tau_points - 1);
                const double tau = tau_min * std::pow(tau_max / tau_min, f);
                os << format_double(tau) << ',' << format_double(spectral_mix_exact(spec, tau)) << ',';
                try {
                    const AsymptoticMix m = spectral_mix_asymptotic(spec, tau);
                    os << to_string(m.regime) << ',' << format_double(m.value) << ',' << (m.upper_bound ? 1 : 0);
                } catch (const UnsupportedExponent&) {
                    os << "MESO,nan,0";
                }
                os << '\n';
            }
            std::cout << path.string() << '\n';
            return 0;
        }
        if (*repro) {
            ReproduceOptions opts;
            opts.seed = repro_seed;
            opts.n_steps = repro_steps;
            opts.threads = repro_threads;
            return report(reproduce(parse_figure_target(target_name), repro_out, opts, &std::cerr));
        }
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
