// Command-line front end for the experiment runner.
//
//   passive_cli <forward-wave|forward-heat|extract|invert-wave|invert-heat|compare>
//               --config PATH [--out DIR] [--seed N] [--verbose]
//   passive_cli selftest
//
// Relative output directories are placed under $PASSIVE_OUTPUT_ROOT when it
// is set. Exit codes: 0 success, 1 a tolerance check failed, 2 usage or
// config error, 3 a stage failed.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "passive/experiment.hpp"
#include "passive/liouville_transform.hpp"
#include "passive/spectral_extraction.hpp"
#include "passive/sturm_liouville.hpp"

using namespace passive;

namespace {

using std::numbers::pi;

std::filesystem::path output_dir(const std::filesystem::path& chosen)
{
    if (chosen.is_absolute()) return chosen;
    if (const char* root = std::getenv("PASSIVE_OUTPUT_ROOT"); root && *root) return std::filesystem::path(root) / chosen;
    return std::filesystem::current_path() / chosen;
}

double sine4(double s)
{
    const double v = std::sin(pi * s);
    return v * v * v * v;
}

// Quick desk checks against closed forms.
int selftest()
{
    int failed = 0;
    auto report = [&](const char* name, double value, double tol) {
        const bool ok = value < tol;
        failed += !ok;
        fmt::print("{} {}: {:.3e} (tol {:.0e})\n", ok ? "PASS" : "FAIL", name, value, tol);
    };

    const auto zero = Profile::constant({0, 1}, 257, 0.0, ProfileKind::potential);
    const auto ev = dirichlet_eigenvalues(zero, 10);
    double err = 0.0;
    for (std::size_t k = 0; k < ev.size(); ++k) {
        const double exact = std::pow((k + 1) * pi, 2);
        err = std::max(err, std::abs(ev.modes[k].lambda - exact) / exact);
    }
    report("zero-potential eigenvalues", err, 1e-9);

    const auto c1 = Profile::constant({0, 1}, 1025, 1.0, ProfileKind::speed);
    const auto f = Profile::from_function({0, 1}, 1025, [](double x) { return x > 0.2 && x < 0.8 ? sine4((x - 0.2) / 0.6) : 0.0; },
                                          ProfileKind::initial_data);
    WaveRunOptions o;
    o.t_max = 2.5;
    const auto tr = solve_wave(c1, f, o);
    err = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.time(i);
        const double exact = t < 1.0 ? 0.5 * f(1.0 - t) : t < 2.0 ? -0.5 * f(t - 1.0) : 0.0;
        err = std::max(err, std::abs(tr.value(i) - exact));
    }
    report("wave trace vs d'Alembert", err, 1e-4);

    const auto c = Profile::from_function({0, 1}, 1025, [](double x) { return 1.0 + 0.3 * sine4(x); }, ProfileKind::speed);
    // recovered speed lives on [0, x(L)] with x(L) = 1 up to integration error
    const auto back = potential_to_speed(speed_to_potential(c, 1.0).q, 1.0, 1025);
    err = 0.0;
    for (std::size_t i = 0; i < back.size(); ++i) err = std::max(err, std::abs(back.sample(i) - c(std::min(back.node(i), 1.0))));
    report("speed round trip", err, 1e-6);

    std::vector<double> v(200);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = 0.01 + 0.005 * double(i);
        v[i] = std::exp(-10.0 * t) - 0.5 * std::exp(-40.0 * t);
    }
    const auto fit = fit_exponential_modes(BoundaryTrace(0.01, 0.005, v, TraceFlavor::neumann), 2);
    err = fit.modes.size() == 2 ? std::max(std::abs(fit.modes.modes[0].lambda / 10.0 - 1.0),
                                           std::abs(fit.modes.modes[1].lambda / 40.0 - 1.0))
                                : 1.0;
    report("two-exponential fit", err, 1e-8);
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Passive boundary-observation experiments: forward runs, spectral extraction, inversion"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::optional<std::uint64_t> seed;
    bool verbose = false;

    const std::pair<const char*, ExperimentMode> commands[] = {
        {"forward-wave", ExperimentMode::forward_wave}, {"forward-heat", ExperimentMode::forward_heat},
        {"extract", ExperimentMode::extract},           {"invert-wave", ExperimentMode::invert_wave},
        {"invert-heat", ExperimentMode::invert_heat},   {"compare", ExperimentMode::compare_pairs},
    };
    std::map<CLI::App*, ExperimentMode> modes;
    for (const auto& [name, mode] : commands) {
        auto* sub = app.add_subcommand(name, fmt::format("run the {} workflow", to_string(mode)));
        sub->add_option("--config", config_path, "experiment INI file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides experiment.output_dir)");
        sub->add_option("--seed", seed, "seed for noise injection (overrides experiment.seed)");
        sub->add_flag("--verbose", verbose, "print every summary row");
        modes[sub] = mode;
    }
    auto* self = app.add_subcommand("selftest", "closed-form checks of the core solvers");

    CLI11_PARSE(app, argc, argv);
    if (self->parsed()) {
        try {
            return selftest();
        } catch (const std::exception& e) {
            std::cerr << e.what() << '\n';
            return 3;
        }
    }

    ExperimentMode mode{};
    for (const auto& [sub, m] : modes)
        if (sub->parsed()) mode = m;

    ExperimentConfig config;
    try {
        config = load_experiment_config(config_path);
        if (config.mode && *config.mode != mode)
            throw Error(ErrorKind::validation, fmt::format("config mode {} does not match subcommand {}",
                                                           to_string(*config.mode), to_string(mode)));
        config.mode = mode;
        if (seed) config.seed = *seed;
        config.output_dir = output_dir(!out.empty()                   ? std::filesystem::path(out)
                                       : !config.output_dir.empty() ? config.output_dir
                                                                    : std::filesystem::path(to_string(mode)));
        config.validate();
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }

    ReportBundle report;
    try {
        report = run_experiment(config);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 3;
    }

    for (const auto& row : report.summary) {
        if (!row.tolerance && !verbose) continue;
        if (row.tolerance)
            fmt::print("{} {} = {:.6e} (tol {:.1e})\n", row.pass ? "pass" : "FAIL", row.name, row.value, *row.tolerance);
        else
            fmt::print("     {} = {:.17g}\n", row.name, row.value);
    }
    fmt::print("wrote {} files to {}\n", report.files.size(), report.output_dir.string());
    return report.passed() ? 0 : 1;
}
