#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anisopr/dynamics.hpp"
#include "anisopr/phases.hpp"

namespace anisopr {

const char* library_version();

enum class FigureTarget { kNone, kFig1, kFig3, kFig4, kFig6, kFig7, kFig8 };
const char* to_string(FigureTarget target);
/// Accepts "FIG3", "fig3", "3", "NONE". Throws InvalidArgument otherwise.
FigureTarget parse_figure_target(const std::string& name);

struct Sweep {
    std::vector<double> a;
    std::vector<std::size_t> d;
    std::vector<double> eta;
    std::vector<std::uint64_t> seed;

    bool empty() const { return a.empty() && d.empty() && eta.empty() && seed.empty(); }
    /// Size of the cross product (1 when empty).
    std::size_t size() const;
};

struct ExperimentConfig {
    RunConfig run;
    std::string experiment_id = "run";
    std::filesystem::path output_dir = "out";
    FigureTarget figure_target = FigureTarget::kNone;
    Sweep sweep;
    PhaseOptions phases;
    unsigned threads = 0;  // 0: hardware concurrency
    std::vector<std::string> notes;

    void validate() const;
};

/// JSON round trip. Unknown keys and wrong types raise InvalidArgument.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

struct SweepPoint {
    RunConfig run;
    std::string label;  // file-name safe, e.g. "a2_d1000"
    nlohmann::json coords = nlohmann::json::object();
};

/// Cross product of the sweep lists. Points get seed (swept or base) XOR
/// fnv1a(coordinates of a, d, eta); a single unswept run keeps its seed.
std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg);

struct PointOutcome {
    std::string label;
    std::uint64_t seed = 0;
    nlohmann::json coords;
    std::vector<std::string> files;
    bool diverged = false;
    std::size_t divergence_step = 0;
    PhaseReport phases;
    std::optional<double> predicted_T2;
    std::vector<std::string> warnings;
};

struct ExperimentResult {
    std::vector<PointOutcome> points;
    std::filesystem::path manifest;
    double wall_seconds = 0.0;

    bool any_diverged() const;
};

/// Runs every sweep point on a worker pool and writes, under output_dir:
///   <id>__<label>.csv          t,u,s,u2,s2,mse,theta
///   <id>__phases.csv           detected and predicted boundaries per point
///   <id>__manifest.json
/// plus figure-specific series (FIG6: <id>__<label>__phase3.csv,
/// FIG8: <id>__<label>__one_minus_u.csv). Divergent points keep their partial
/// CSV and are flagged in the manifest.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Canned configuration of a figure target.
ExperimentConfig canned_config(FigureTarget target);

struct ReproduceOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_steps;  // shortens the run; recorded in the notes
    unsigned threads = 0;
};

ExperimentResult reproduce(FigureTarget target, const std::filesystem::path& out_dir,
                           const ReproduceOptions& opts = {}, std::ostream* log = nullptr);

/// "%.17g"; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double x);

extern const char* const kTrajectoryHeader;  // "t,u,s,u2,s2,mse,theta"

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Reads the fixed-column CSV back (K = 2 moments per record).
/// Throws InvalidArgument on a wrong header or malformed row.
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace anisopr
