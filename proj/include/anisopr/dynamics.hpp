#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "anisopr/rng.hpp"
#include "anisopr/spectrum.hpp"
#include "anisopr/stats.hpp"

namespace anisopr {

struct RecordSchedule {
    enum class Kind { kLogSpaced, kEvery };
    Kind kind = Kind::kLogSpaced;
    std::size_t n_points = 2000;  // kLogSpaced
    std::size_t every = 1;        // kEvery

    static RecordSchedule log_spaced(std::size_t n) { return {Kind::kLogSpaced, n, 1}; }
    static RecordSchedule every_k(std::size_t k) { return {Kind::kEvery, 0, k}; }
};

/// Sorted, unique step indices at which a run records; always contains 0 and n_steps.
std::vector<std::size_t> record_steps(const RecordSchedule& schedule, std::size_t n_steps);

enum class RunMode { kPopulation, kSgd };
enum class Integrator { kEuler, kRk4 };

struct RunConfig {
    std::size_t d = 1000;
    double a = 2.0;
    std::uint64_t seed = 1;
    double eta = 1e-2;
    std::size_t n_steps = 1000;
    RecordSchedule record_schedule{};
    RunMode mode = RunMode::kPopulation;
    double sgd_noise_sigma = 0.0;
    TeacherNorm teacher_mode = TeacherNorm::kQUnit;
    int K = kDefaultMoments;

    /// Radius of the initial sphere; 1 draws w(0) uniformly on S^{d-1}.
    double init_radius = 1.0;
    Integrator integrator = Integrator::kEuler;
    /// Store w at every record (memory d * records).
    bool keep_weights = false;
    /// Flip w* once at t = 0 so that u(0) >= 0.
    bool flip_to_positive_overlap = true;
    /// Test hook: SGD steps use the population gradient instead of a sample.
    bool sgd_population_gradient = false;

    /// Throws InvalidArgument on inconsistent fields.
    void validate() const;
    /// Short stable identifier of every field that influences the output.
    std::string digest() const;
};

/// Spectrum, teacher and initial point of one run, after the sign convention.
struct Problem {
    Spectrum spec;
    Teacher teacher;
    std::vector<double> w0;
    bool teacher_flipped = false;
};

Problem make_problem(const RunConfig& cfg);

/// Optional early stop, evaluated at every record.
using StopPredicate = std::function<bool(const StatRecord&)>;

/// Explicit-Euler (or RK4) discretization of the population gradient flow,
/// w <- w - eta * grad L(w). Throws DivergenceError on non-finite state.
Trajectory run_population_flow(const RunConfig& cfg);
Trajectory run_population_flow(const RunConfig& cfg, const Problem& problem,
                               const StopPredicate& stop = {});

/// One-pass SGD on fresh samples y = (x.w*)^2 + xi.
Trajectory run_online_sgd(const RunConfig& cfg);
Trajectory run_online_sgd(const RunConfig& cfg, const Problem& problem,
                          const StopPredicate& stop = {});

/// Per-sample gradient 4((x.w)^2 - y)(x.w) x for one draw of (x, xi).
std::vector<double> sgd_sample_gradient(std::span<const double> w, const Teacher& teacher,
                                        const Spectrum& spec, double noise_sigma, Rng& rng);

enum class Closure { kZero, kGeometric };

/// Integrates the moment hierarchy u^(k), s^(k), k <= k_trunc, with the exact
/// moment map of the Euler step; levels above k_trunc come from `closure`.
/// Records carry no MSE (NaN).
Trajectory run_truncated_hierarchy(const RunConfig& cfg, int k_trunc, Closure closure);
Trajectory run_truncated_hierarchy(const RunConfig& cfg, const Problem& problem, int k_trunc,
                                   Closure closure);

}  // namespace anisopr
