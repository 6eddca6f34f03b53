#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "passive/core_types.hpp"
#include "passive/forward_solvers.hpp"

namespace passive {

enum class ExperimentMode { forward_wave, forward_heat, extract, invert_wave, invert_heat, compare_pairs };

std::string_view to_string(ExperimentMode mode);
ExperimentMode experiment_mode_from_string(std::string_view text);

/// One profile section of a config. Families (on [0, 1], `value` is the
/// background level added to every family):
///   constant  value
///   raised    value + amplitude sin^4(pi x)
///   bump      value + amplitude exp(1 - 1/(1 - r^2)), r = (x - center)/width
///   pulse     value + amplitude sin^4(pi (x - left)/(right - left)) on [left, right]
///   sine      value + amplitude sin(frequency pi x)
///   file      profile CSV at `path` (relative to the config file)
struct ProfileSpec {
    std::string family = "constant";
    double value = 0.0;
    double amplitude = 0.0;
    double left = 0.0;
    double right = 1.0;
    double center = 0.5;
    double width = 0.4;
    int frequency = 1;
    std::filesystem::path path;
};

Profile realize(const ProfileSpec& spec, ProfileKind kind, std::size_t nodes);

/// Parsed experiment description. INI layout, every key optional unless
/// noted (unknown sections or keys are parse errors):
///
///   [experiment] schema_version (required, = 1), mode, seed, output_dir, noise
///   [grid]       nodes, c0, t_max, cfl, nodes_per_unit,
///                heat_t0, heat_t1, heat_samples, heat_modes
///   [speed] [initial] [convection], and [speed_2] [initial_2] [convection_2]
///                for the second pair of a comparison: ProfileSpec fields
///   [extract]    source (wave | heat), modes
///   [inversion]  epsilon, regularization, basis_count, max_iterations, speed_modes
///   [compare]    pde (wave | heat)
///   [tolerance]  c_sup, f_l2, b_sup, g_l2 (f_l2 and g_l2 relative to the truth)
///
/// The noise level is relative to the largest trace sample and drawn from
/// the seed. A missing mode may be supplied by the caller (the CLI
/// subcommand) before validation.
struct ExperimentConfig {
    int schema_version = 1;
    std::optional<ExperimentMode> mode;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    double noise = 0.0;

    std::map<std::string, ProfileSpec> profiles;

    std::size_t nodes = 1025;
    WaveRunOptions wave;
    double heat_t0 = 0.02;
    double heat_t1 = 0.6;
    std::size_t heat_samples = 400;
    std::size_t heat_modes = 40;

    std::string extract_source = "wave";
    std::size_t extract_modes = 12;

    double epsilon = 0.1;
    double regularization = 1e-6;
    std::size_t basis_count = 16;
    std::size_t max_iterations = 50;
    std::size_t speed_modes = 12;

    std::string compare_pde = "wave";

    std::map<std::string, double> tolerances{{"c_sup", 1e-2}, {"f_l2", 2e-2}, {"b_sup", 5e-2}, {"g_l2", 1e-1}};

    /// Directory used for relative profile paths.
    std::filesystem::path base_dir;

    const ProfileSpec& profile(const std::string& name) const;
    HeatRunOptions heat_options() const;

    /// Errors: validation (non-positive resolution or tolerance, missing
    /// profile required by the mode, no mode).
    void validate() const;
};

/// Errors: parse (malformed INI, unknown section or key, bad value, missing
/// schema_version; messages carry the line and field).
ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct SummaryEntry {
    std::string name;
    double value = 0.0;
    /// Checks carry a tolerance; plain diagnostics leave it empty.
    std::optional<double> tolerance;
    bool pass = true;
};

/// Files written by a run plus the summary rows (also written as summary.csv).
struct ReportBundle {
    std::filesystem::path output_dir;
    std::vector<std::filesystem::path> files;
    std::vector<SummaryEntry> summary;

    bool passed() const;
    double value(std::string_view name) const;
};

/// Summary CSV: `# name,value,tolerance,status` then one row per entry, with
/// status `info`, `pass` or `fail` and an empty tolerance for info rows.
void write_summary(std::ostream& out, const std::vector<SummaryEntry>& rows);
std::vector<SummaryEntry> read_summary(std::istream& in);

/// Runs the configured workflow and writes its artifacts into output_dir.
/// Errors: validation (config), any library error from a stage, rethrown
/// with the stage named in the message.
ReportBundle run_experiment(const ExperimentConfig& config);

struct PairComparison {
    double l2 = 0.0;   // sqrt(dt sum (trace_1 - trace_2)^2)
    double sup = 0.0;
    /// Largest difference between each trace and its refinement run.
    double floor = 0.0;
    bool distinguishable = false;  // l2 above the floor
    BoundaryTrace first, second;
};

/// Forward solves for (speed, initial) and (speed_2, initial_2) (wave) or
/// (convection, initial) and (convection_2, initial_2) (heat). The wave
/// floor doubles the grid; the heat floor doubles the mode count and the
/// profile grid. Errors: validation naming c_cond or F_supp (wave), supp_cond
/// (heat: g outside [0, epsilon], or the convections differing on
/// [1/2 - epsilon, 1]).
PairComparison compare_pairs(const ExperimentConfig& config);

}  // namespace passive
