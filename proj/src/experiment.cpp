#include "passive/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "passive/csv_io.hpp"
#include "passive/inverse_reconstruction.hpp"
#include "passive/liouville_transform.hpp"
#include "passive/spectral_extraction.hpp"
#include "passive/sturm_liouville.hpp"

namespace passive {

namespace {

using std::numbers::pi;
namespace pt = boost::property_tree;

constexpr std::pair<ExperimentMode, std::string_view> mode_names[] = {
    {ExperimentMode::forward_wave, "forward_wave"}, {ExperimentMode::forward_heat, "forward_heat"},
    {ExperimentMode::extract, "extract"},           {ExperimentMode::invert_wave, "invert_wave"},
    {ExperimentMode::invert_heat, "invert_heat"},   {ExperimentMode::compare_pairs, "compare_pairs"},
};

const std::set<std::string> profile_sections{"speed", "initial", "convection", "speed_2", "initial_2", "convection_2"};
const std::set<std::string> profile_keys{"family", "value",  "amplitude", "left", "right",
                                         "center", "width", "frequency", "path"};
const std::map<std::string, std::set<std::string>> section_keys{
    {"experiment", {"schema_version", "mode", "seed", "output_dir", "noise"}},
    {"grid", {"nodes", "c0", "t_max", "cfl", "nodes_per_unit", "heat_t0", "heat_t1", "heat_samples", "heat_modes"}},
    {"extract", {"source", "modes"}},
    {"inversion", {"epsilon", "regularization", "basis_count", "max_iterations", "speed_modes"}},
    {"compare", {"pde"}},
    {"tolerance", {"c_sup", "f_l2", "b_sup", "g_l2"}},
};

// Line of `key` inside `[section]` in the raw text (0 when not found).
std::size_t line_of(const std::string& text, const std::string& section, const std::string& key)
{
    std::istringstream in(text);
    std::string line, current;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto a = line.find_first_not_of(" \t");
        if (a == std::string::npos || line[a] == ';' || line[a] == '#') continue;
        if (line[a] == '[') {
            const auto b = line.find(']', a);
            current = line.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1);
            if (key.empty() && current == section) return n;
            continue;
        }
        if (current != section) continue;
        const auto eq = line.find('=');
        std::string k = line.substr(a, eq == std::string::npos ? std::string::npos : eq - a);
        k.erase(k.find_last_not_of(" \t\r") + 1);
        if (k == key) return n;
    }
    return 0;
}

class IniReader {
public:
    IniReader(std::string text, pt::ptree tree) : text_(std::move(text)), tree_(std::move(tree)) {}

    const pt::ptree& tree() const { return tree_; }

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const
    {
        const std::size_t line = line_of(text_, section, key);
        const std::string field = key.empty() ? "[" + section + "]" : section + "." + key;
        throw Error(ErrorKind::parse, line ? fmt::format("line {}: {}: {}", line, field, what)
                                           : fmt::format("{}: {}", field, what));
    }

    template <class T>
    void get(const std::string& section, const std::string& key, T& target) const
    {
        const auto node = tree_.get_child_optional(pt::ptree::path_type(section + "/" + key, '/'));
        if (!node) return;
        std::string s = node->data();
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        if constexpr (std::is_same_v<T, std::string>) {
            target = s;
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
            target = s;
        } else {
            T v{};
            const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || ec != std::errc() || end != s.data() + s.size())
                fail(section, key, "'" + s + "' is not a valid " + (std::is_floating_point_v<T> ? "number" : "integer"));
            target = v;
        }
    }

private:
    std::string text_;
    pt::ptree tree_;
};

double sine4(double s)
{
    const double v = std::sin(pi * s);
    return v * v * v * v;
}

template <class F>
auto run_stage(const std::string& stage, F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        std::string message = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + " error: ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    Error out(e.kind(), stage + ": " + message);
        if (e.limit()) out.with_limit(*e.limit());
        if (e.location()) out.with_location(*e.location());
        throw out;
    }
}

// Collects artifacts and summary rows for one run.
class Recorder {
public:
    explicit Recorder(const std::filesystem::path& dir) { bundle_.output_dir = dir; }

    template <class T>
    void save(const std::string& name, const T& value)
    {
        const auto path = bundle_.output_dir / name;
        csv::save(path, value);
        bundle_.files.push_back(path);
    }
    void info(const std::string& name, double value) { bundle_.summary.push_back({name, value, std::nullopt, true}); }
    void check(const std::string& name, double value, double tolerance)
    {
        bundle_.summary.push_back({name, value, tolerance, value < tolerance});
    }
    void note(const std::string& name, const std::string& text)
    {
        if (text.empty()) return;
        const auto path = bundle_.output_dir / name;
        std::ofstream out(path);
        out << text << '\n';
        bundle_.files.push_back(path);
    }

    ReportBundle finish()
    {
        const auto path = bundle_.output_dir / "summary.csv";
        std::ofstream out(path);
        if (!out) throw Error(ErrorKind::data, "cannot open '" + path.string() + "' for writing");
        write_summary(out, bundle_.summary);
        bundle_.files.push_back(path);
        return std::move(bundle_);
    }

private:
    ReportBundle bundle_;
};

BoundaryTrace noisy(const ExperimentConfig& cfg, BoundaryTrace trace)
{
    return cfg.noise > 0.0 ? with_noise(trace, cfg.noise, cfg.seed) : trace;
}

BoundaryTrace wave_run(const ExperimentConfig& cfg, const Profile& c, const Profile& f)
{
    return run_stage("wave forward solve", [&] { return solve_wave(c, f, cfg.wave); });
}

BoundaryTrace heat_run(const ExperimentConfig& cfg, const Profile& b, const Profile& g,
                       double* truncation = nullptr)
{
    auto r = run_stage("heat forward solve", [&] { return solve_heat_modal(b, g, cfg.heat_options()); });
    if (truncation) *truncation = r.truncation_bound;
    return r.trace;
}

InversionSettings inversion_settings(const ExperimentConfig& cfg)
{
    InversionSettings s;
    s.regularization = cfg.regularization;
    s.basis_count = cfg.basis_count;
    s.max_iterations = cfg.max_iterations;
    return s;
}

void trace_diagnostics(Recorder& rec, const BoundaryTrace& trace)
{
    rec.info("samples", double(trace.size()));
    rec.info("dt", trace.dt());
    rec.info("max_abs", trace.max_abs());
    if (trace.decay_rate_estimate()) rec.info("decay_rate", *trace.decay_rate_estimate());
}

void check_wave_hypotheses(const Profile& c, const Profile& f, double c0)
{
    const double tol = 1e-10;
    if (!(c.min_value() > 0.0) || std::abs(c.sample(0) - c0) > tol || std::abs(c.samples().back() - c0) > tol)
        throw Error(ErrorKind::validation, "c_cond violated: speed must be positive and equal c0 at 0 and 1");
    if (std::abs(f.sample(0)) > tol || std::abs(f.samples().back()) > tol)
        throw Error(ErrorKind::validation, "F_supp violated: initial data must vanish at 0 and 1");
}

void check_heat_hypotheses(const Profile& b1, const Profile& b2, const Profile& g, double eps)
{
    const double tol = 1e-12 * (1.0 + g.max_abs());
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.node(i) > eps + 1e-12 && std::abs(g.sample(i)) > tol)
            throw Error(ErrorKind::validation,
                        fmt::format("supp_cond violated: initial data nonzero at x = {} > epsilon", g.node(i)));
    const double split = 0.5 - eps;
    const double btol = 1e-12 * (1.0 + std::max(b1.max_abs(), b2.max_abs()));
    for (std::size_t i = 0; i < b1.size(); ++i)
        if (b1.node(i) >= split - 1e-12 && std::abs(b1.sample(i) - b2(b1.node(i))) > btol)
            throw Error(ErrorKind::validation,
                        fmt::format("supp_cond violated: convections differ at x = {} >= 1/2 - epsilon", b1.node(i)));
}

// Trace distance after evaluating `fine` (a spline through its samples) at
// the sample times of `coarse` that both records cover.
double trace_gap(const BoundaryTrace& coarse, const BoundaryTrace& fine)
{
    const Profile spline({fine.t0(), fine.t_last()}, {fine.values().begin(), fine.values().end()});
    double acc = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const double t = coarse.time(i);
        if (t > fine.t_last() + 1e-12) break;
        const double d = coarse.value(i) - spline(std::min(t, fine.t_last()));
        acc += d * d;
    }
    return std::sqrt(acc * coarse.dt());
}

BoundaryTrace forward_wave(const ExperimentConfig& cfg, Recorder& rec)
{
    const auto c = realize(cfg.profile("speed"), ProfileKind::speed, cfg.nodes);
    const auto f = realize(cfg.profile("initial"), ProfileKind::initial_data, cfg.nodes);
    const auto trace = noisy(cfg, wave_run(cfg, c, f));
    rec.save("speed.csv", c);
    rec.save("initial.csv", f);
    rec.save("trace.csv", trace);
    trace_diagnostics(rec, trace);
    return trace;
}

BoundaryTrace forward_heat(const ExperimentConfig& cfg, Recorder& rec)
{
    const auto b = realize(cfg.profile("convection"), ProfileKind::convection, cfg.nodes);
    const auto g = realize(cfg.profile("initial"), ProfileKind::initial_data, cfg.nodes);
    double truncation = 0.0;
    const auto flux = noisy(cfg, heat_run(cfg, b, g, &truncation));
    rec.save("convection.csv", b);
    rec.save("initial.csv", g);
    rec.save("flux.csv", flux);
    trace_diagnostics(rec, flux);
    rec.info("truncation_bound", truncation);
    return flux;
}

void extract(const ExperimentConfig& cfg, Recorder& rec)
{
    if (cfg.extract_source == "wave") {
        const auto trace = forward_wave(cfg, rec);
        const auto c = realize(cfg.profile("speed"), ProfileKind::speed, cfg.nodes);
        const double c0 = cfg.wave.c0;
        const auto zeros = run_stage("travel-time scan", [&] {
            return cosine_transform_zeros(trace, c0, cfg.extract_modes, pi / 64.0).confident(0.5);
        });
        const double L = run_stage("travel-time fit", [&] { return travel_time_from_spectrum(zeros, 1.0); });
        const auto ext = run_stage("extended spectrum",
                                   [&] { return extended_interval_spectrum(trace, c0, L, cfg.extract_modes); });
        rec.save("scan_modes.csv", zeros);
        rec.save("modes.csv", ext.modes);
        rec.info("travel_time", L);
        rec.info("travel_time_true", speed_to_potential(c, c0).map.L);
        rec.info("modes_requested", double(ext.requested));
        rec.info("modes_confident", double(ext.confident));
        return;
    }
    const auto flux = forward_heat(cfg, rec);
    const auto b = realize(cfg.profile("convection"), ProfileKind::convection, cfg.nodes);
    const auto fit = run_stage("mode extraction", [&] { return fit_exponential_modes(flux, cfg.extract_modes); });
    rec.save("modes.csv", fit.modes);
    rec.info("rank", double(fit.rank));
    rec.info("fit_residual", fit.residual);

    const auto V = convection_to_potential(b);
    const auto confident = fit.modes.confident(0.5);
    double lam_max = 0.0;
    for (double l : confident.lambdas()) lam_max = std::max(lam_max, l);
    const std::size_t K = std::min<std::size_t>(max_reliable_count(V),
                                                std::size_t(std::sqrt(1.5 * std::max(lam_max, 0.0)) / pi) + 5);
    // reference eigenvalues up to the largest observed rate; higher ones are
    // unresolved rather than vanishing
    auto reference = dirichlet_eigenvalues(V, K);
    std::erase_if(reference.modes, [&](const Mode& m) { return m.lambda > lam_max * (1.0 + matching_tolerance); });
    const auto density = run_stage("density audit", [&] { return mode_density_report(confident, reference, cfg.epsilon); });
    rec.save("counts.csv", density.counts);
    rec.info("max_vanishing_density", density.max_vanishing_density);
    rec.info("density_bound", density.bound());
}

void invert_wave(const ExperimentConfig& cfg, Recorder& rec)
{
    const auto c = realize(cfg.profile("speed"), ProfileKind::speed, cfg.nodes);
    const auto f = realize(cfg.profile("initial"), ProfileKind::initial_data, cfg.nodes);
    const auto trace = noisy(cfg, wave_run(cfg, c, f));
    rec.save("speed.csv", c);
    rec.save("initial.csv", f);
    rec.save("trace.csv", trace);

    SpeedPipelineOptions po;
    po.mode_count = cfg.speed_modes;
    po.speed_nodes = cfg.nodes;
    const auto r = recover_speed_pipeline(trace, cfg.wave.c0, inversion_settings(cfg), po);
    WaveInversionOptions wo;
    wo.run = cfg.wave;
    const auto w = run_stage("initial data", [&] { return recover_wave_initial_data(r.c, trace, wo); });

    rec.save("modes.csv", r.spectrum.modes);
    rec.save("potential_hat.csv", r.q);
    rec.save("speed_hat.csv", r.c);
    rec.save("initial_hat.csv", w.f);
    rec.info("travel_time", r.L);
    rec.info("travel_time_scan", r.L_scan);
    rec.info("potential_misfit", r.inversion.misfit);
    rec.info("potential_iterations", double(r.inversion.iterations));
    rec.info("trace_misfit", w.relative_misfit);
    rec.check("c_sup", sup_distance(c, r.c), cfg.tolerances.at("c_sup"));
    rec.check("f_l2", l2_distance(f, w.f) / l2_norm(f), cfg.tolerances.at("f_l2"));
}

void invert_heat(const ExperimentConfig& cfg, Recorder& rec)
{
    const auto b = realize(cfg.profile("convection"), ProfileKind::convection, cfg.nodes);
    const auto g = realize(cfg.profile("initial"), ProfileKind::initial_data, cfg.nodes);
    check_heat_hypotheses(b, b, g, cfg.epsilon);
    const auto flux = noisy(cfg, heat_run(cfg, b, g));
    rec.save("convection.csv", b);
    rec.save("initial.csv", g);
    rec.save("flux.csv", flux);

    const auto b_known = b.on({0.5 - cfg.epsilon, 1.0}, std::max<std::size_t>(65, (cfg.nodes - 1) / 4 + 1));
    HeatPipelineOptions ho;
    ho.grid_size = cfg.nodes;
    const auto r = invert_heat_pipeline(flux, b_known, cfg.epsilon, inversion_settings(cfg), ho);

    rec.save("modes.csv", r.extraction.modes);
    rec.save("counts.csv", r.density.counts);
    rec.save("potential_hat.csv", r.V);
    rec.save("convection_hat.csv", r.b);
    rec.save("initial_hat.csv", r.g);
    rec.note("warnings.txt", r.warning);
    rec.info("extracted_modes", double(r.extraction.modes.size()));
    rec.info("observed_fraction", r.observed_fraction);
    rec.info("information_deficit", r.information_deficit ? 1.0 : 0.0);
    rec.info("max_vanishing_density", r.density.max_vanishing_density);
    rec.info("density_bound", r.density.bound());
    rec.info("data_misfit", r.data_misfit);
    rec.check("b_sup", sup_distance(b, r.b), cfg.tolerances.at("b_sup"));
    rec.check("g_l2", l2_distance(g, r.g) / l2_norm(g), cfg.tolerances.at("g_l2"));
}

void compare(const ExperimentConfig& cfg, Recorder& rec)
{
    const auto r = compare_pairs(cfg);
    rec.save("trace_1.csv", r.first);
    rec.save("trace_2.csv", r.second);
    rec.info("distance_l2", r.l2);
    rec.info("distance_sup", r.sup);
    rec.info("solver_floor", r.floor);
    rec.info("distance_over_floor", r.floor > 0.0 ? r.l2 / r.floor : HUGE_VAL);
    rec.info("distinguishable", r.distinguishable ? 1.0 : 0.0);
}

}  // namespace

std::string_view to_string(ExperimentMode mode)
{
    for (const auto& [m, name] : mode_names)
        if (m == mode) return name;
    return "unknown";
}

ExperimentMode experiment_mode_from_string(std::string_view text)
{
    for (const auto& [m, name] : mode_names)
        if (name == text) return m;
    throw Error(ErrorKind::parse, "unknown experiment mode '" + std::string(text) + "'");
}

Profile realize(const ProfileSpec& s, ProfileKind kind, std::size_t nodes)
{
    const Interval unit{0.0, 1.0};
    std::function<double(double)> f;
    if (s.family == "constant") {
        f = [](double) { return 0.0; };
    } else if (s.family == "raised") {
        f = [&](double x) { return s.amplitude * sine4(x); };
    } else if (s.family == "bump") {
        if (!(s.width > 0.0)) throw Error(ErrorKind::validation, "bump width must be positive");
        f = [&](double x) {
            const double r = (x - s.center) / s.width;
            return std::abs(r) < 1.0 ? s.amplitude * std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
        };
    } else if (s.family == "pulse") {
        if (!(s.right > s.left)) throw Error(ErrorKind::validation, "pulse needs left < right");
        f = [&](double x) {
            return x > s.left && x < s.right ? s.amplitude * sine4((x - s.left) / (s.right - s.left)) : 0.0;
        };
    } else if (s.family == "sine") {
        f = [&](double x) { return s.amplitude * std::sin(s.frequency * pi * x); };
    } else if (s.family == "file") {
        return csv::load_profile(s.path).with_kind(kind);
    } else {
        throw Error(ErrorKind::validation, "unknown profile family '" + s.family + "'");
    }
    return Profile::from_function(unit, nodes, [&](double x) { return s.value + f(x); }, kind);
}

const ProfileSpec& ExperimentConfig::profile(const std::string& name) const
{
    const auto it = profiles.find(name);
    if (it == profiles.end()) throw Error(ErrorKind::validation, "profile [" + name + "] is required by this mode");
    return it->second;
}

HeatRunOptions ExperimentConfig::heat_options() const
{
    auto o = HeatRunOptions::uniform(heat_t0, heat_t1, heat_samples);
    o.mode_count = heat_modes;
    return o;
}

void ExperimentConfig::validate() const
{
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorKind::validation, what);
    };
    need(mode.has_value(), "no experiment mode given");
    need(schema_version == 1, "schema_version must be 1");
    need(nodes >= 8, "grid.nodes must be at least 8");
    need(wave.nodes_per_unit > 0, "grid.nodes_per_unit must be positive");
    need(wave.t_max > 0.0, "grid.t_max must be positive");
    need(wave.c0 > 0.0, "grid.c0 must be positive");
    need(wave.cfl > 0.0 && wave.cfl < 1.0, "grid.cfl must lie in (0, 1)");
    need(heat_t0 > 0.0 && heat_t1 > heat_t0, "grid.heat_t0 and heat_t1 must satisfy 0 < t0 < t1");
    need(heat_samples >= 4, "grid.heat_samples must be at least 4");
    need(heat_modes > 0, "grid.heat_modes must be positive");
    need(extract_modes > 0 && speed_modes > 0, "mode counts must be positive");
    need(epsilon > 0.0 && epsilon < 0.5, "inversion.epsilon must lie in (0, 1/2)");
    need(regularization >= 0.0, "inversion.regularization must be non-negative");
    need(basis_count > 0 && max_iterations > 0, "inversion counts must be positive");
    need(noise >= 0.0, "experiment.noise must be non-negative");
    need(extract_source == "wave" || extract_source == "heat", "extract.source must be wave or heat");
    need(compare_pde == "wave" || compare_pde == "heat", "compare.pde must be wave or heat");
    for (const auto& [name, v] : tolerances) need(v > 0.0, "tolerance." + name + " must be positive");

    std::vector<std::string> required;
    const bool heat = *mode == ExperimentMode::forward_heat || *mode == ExperimentMode::invert_heat ||
                      (*mode == ExperimentMode::extract && extract_source == "heat") ||
                      (*mode == ExperimentMode::compare_pairs && compare_pde == "heat");
    required = {heat ? "convection" : "speed", "initial"};
    if (*mode == ExperimentMode::compare_pairs) {
        required.push_back(heat ? "convection_2" : "speed_2");
        required.push_back("initial_2");
    }
    for (const auto& name : required) need(profiles.count(name) > 0, "profile [" + name + "] is required by this mode");
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir)
{
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    pt::ptree tree;
    try {
        std::istringstream ss(text);
        pt::ini_parser::read_ini(ss, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::parse, fmt::format("line {}: {}", e.line(), e.message()));
    }
    const IniReader ini(text, tree);

    for (const auto& [section, node] : tree) {
        if (node.empty()) ini.fail("", section, "key outside any section");
        const bool is_profile = profile_sections.count(section) > 0;
        const auto known = section_keys.find(section);
        if (!is_profile && known == section_keys.end()) ini.fail(section, "", "unknown section");
        for (const auto& [key, value] : node) {
            const auto& allowed = is_profile ? profile_keys : known->second;
            if (!allowed.count(key)) ini.fail(section, key, "unknown key");
        }
    }
    if (!tree.get_child_optional("experiment.schema_version"))
        throw Error(ErrorKind::parse, "experiment.schema_version: missing (required field)");

    ExperimentConfig c;
    c.base_dir = base_dir;
    ini.get("experiment", "schema_version", c.schema_version);
    if (c.schema_version != 1) ini.fail("experiment", "schema_version", "unsupported version");
    std::string mode;
    ini.get("experiment", "mode", mode);
    if (!mode.empty()) {
        try {
            c.mode = experiment_mode_from_string(mode);
        } catch (const Error&) {
            ini.fail("experiment", "mode", "unknown mode '" + mode + "'");
        }
    }
    ini.get("experiment", "seed", c.seed);
    ini.get("experiment", "output_dir", c.output_dir);
    ini.get("experiment", "noise", c.noise);

    ini.get("grid", "nodes", c.nodes);
    ini.get("grid", "c0", c.wave.c0);
    ini.get("grid", "t_max", c.wave.t_max);
    ini.get("grid", "cfl", c.wave.cfl);
    ini.get("grid", "nodes_per_unit", c.wave.nodes_per_unit);
    ini.get("grid", "heat_t0", c.heat_t0);
    ini.get("grid", "heat_t1", c.heat_t1);
    ini.get("grid", "heat_samples", c.heat_samples);
    ini.get("grid", "heat_modes", c.heat_modes);

    ini.get("extract", "source", c.extract_source);
    ini.get("extract", "modes", c.extract_modes);
    ini.get("inversion", "epsilon", c.epsilon);
    ini.get("inversion", "regularization", c.regularization);
    ini.get("inversion", "basis_count", c.basis_count);
    ini.get("inversion", "max_iterations", c.max_iterations);
    ini.get("inversion", "speed_modes", c.speed_modes);
    ini.get("compare", "pde", c.compare_pde);
    for (auto& [name, v] : c.tolerances) ini.get("tolerance", name, v);

    for (const auto& section : profile_sections) {
        if (!tree.get_child_optional(section)) continue;
        ProfileSpec s;
        ini.get(section, "family", s.family);
        ini.get(section, "value", s.value);
        ini.get(section, "amplitude", s.amplitude);
        ini.get(section, "left", s.left);
        ini.get(section, "right", s.right);
        ini.get(section, "center", s.center);
        ini.get(section, "width", s.width);
        ini.get(section, "frequency", s.frequency);
        ini.get(section, "path", s.path);
        static const std::set<std::string> families{"constant", "raised", "bump", "pulse", "sine", "file"};
        if (!families.count(s.family)) ini.fail(section, "family", "unknown family '" + s.family + "'");
        if (s.family == "file") {
            if (s.path.empty()) ini.fail(section, "path", "file family needs a path");
            if (s.path.is_relative()) s.path = base_dir / s.path;
        }
        c.profiles[section] = s;
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::data, "cannot open config '" + path.string() + "'");
    return parse_experiment_config(in, path.parent_path());
}

bool ReportBundle::passed() const
{
    return std::all_of(summary.begin(), summary.end(), [](const SummaryEntry& e) { return e.pass; });
}

double ReportBundle::value(std::string_view name) const
{
    for (const auto& e : summary)
        if (e.name == name) return e.value;
    throw Error(ErrorKind::validation, "no summary entry '" + std::string(name) + "'");
}

void write_summary(std::ostream& out, const std::vector<SummaryEntry>& rows)
{
    out << "# name,value,tolerance,status\n";
    for (const auto& e : rows)
        out << e.name << ',' << csv::format(e.value) << ',' << (e.tolerance ? csv::format(*e.tolerance) : "") << ','
            << (!e.tolerance ? "info" : e.pass ? "pass" : "fail") << '\n';
}

std::vector<SummaryEntry> read_summary(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("# name,value,tolerance,status", 0) != 0)
        throw Error(ErrorKind::parse, "line 1: missing summary header");
    std::vector<SummaryEntry> out;
    for (std::size_t n = 2; std::getline(in, line); ++n) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ss(line);
        for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 4) throw Error(ErrorKind::parse, fmt::format("line {}: expected 4 fields", n));
        auto number = [&](const std::string& s) {
            double v = 0.0;
            const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || ec != std::errc() || end != s.data() + s.size())
                throw Error(ErrorKind::parse, fmt::format("line {}: '{}' is not a number", n, s));
            return v;
        };
        SummaryEntry e{f[0], number(f[1]), std::nullopt, true};
        if (f[3] == "info") {
            if (!f[2].empty()) throw Error(ErrorKind::parse, fmt::format("line {}: info row with a tolerance", n));
        } else if (f[3] == "pass" || f[3] == "fail") {
            e.tolerance = number(f[2]);
            e.pass = f[3] == "pass";
        } else {
            throw Error(ErrorKind::parse, fmt::format("line {}: unknown status '{}'", n, f[3]));
        }
        out.push_back(std::move(e));
    }
    return out;
}

PairComparison compare_pairs(const ExperimentConfig& cfg)
{
    const bool heat = cfg.compare_pde == "heat";
    const auto coef_name = heat ? "convection" : "speed";
    const auto coef_kind = heat ? ProfileKind::convection : ProfileKind::speed;
    auto pair = [&](const std::string& suffix, std::size_t nodes) {
        return std::pair{realize(cfg.profile(coef_name + suffix), coef_kind, nodes),
                         realize(cfg.profile("initial" + suffix), ProfileKind::initial_data, nodes)};
    };
    const auto [a1, f1] = pair("", cfg.nodes);
    const auto [a2, f2] = pair("_2", cfg.nodes);
    if (heat) {
        check_heat_hypotheses(a1, a2, f1, cfg.epsilon);
        check_heat_hypotheses(a2, a1, f2, cfg.epsilon);
    } else {
        check_wave_hypotheses(a1, f1, cfg.wave.c0);
        check_wave_hypotheses(a2, f2, cfg.wave.c0);
    }

    auto solve = [&](const Profile& a, const Profile& f, bool refined) {
        if (heat) {
            auto o = cfg.heat_options();
            if (refined) o.mode_count *= 2;
            return run_stage("heat forward solve", [&] { return solve_heat_modal(a, f, o).trace; });
        }
        auto o = cfg.wave;
        if (refined) o.nodes_per_unit *= 2;
        return run_stage("wave forward solve", [&] { return solve_wave(a, f, o); });
    };

    PairComparison out{.first = solve(a1, f1, false), .second = solve(a2, f2, false)};
    const std::size_t fine_nodes = 2 * cfg.nodes - 1;
    const auto [a1f, f1f] = pair("", fine_nodes);
    const auto [a2f, f2f] = pair("_2", fine_nodes);
    out.floor = std::max(trace_gap(out.first, solve(a1f, f1f, true)), trace_gap(out.second, solve(a2f, f2f, true)));
    // never below rounding of the trace itself
    out.floor = std::max(out.floor, 64.0 * 2.2e-16 * std::sqrt(out.first.dt() * double(out.first.size())) *
                                        std::max(out.first.max_abs(), out.second.max_abs()));

    const std::size_t n = std::min(out.first.size(), out.second.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = out.first.value(i) - out.second.value(i);
        acc += d * d;
        out.sup = std::max(out.sup, std::abs(d));
    }
    out.l2 = std::sqrt(acc * out.first.dt());
    out.distinguishable = out.l2 > out.floor;
    return out;
}

ReportBundle run_experiment(const ExperimentConfig& config)
{
    config.validate();
    if (config.output_dir.empty()) throw Error(ErrorKind::validation, "output_dir is not set");
    std::filesystem::create_directories(config.output_dir);
    Recorder rec(config.output_dir);
    rec.info("schema_version", config.schema_version);
    rec.info("seed", double(config.seed));
    switch (*config.mode) {
    case ExperimentMode::forward_wave: forward_wave(config, rec); break;
    case ExperimentMode::forward_heat: forward_heat(config, rec); break;
    case ExperimentMode::extract: extract(config, rec); break;
    case ExperimentMode::invert_wave: invert_wave(config, rec); break;
    case ExperimentMode::invert_heat: invert_heat(config, rec); break;
    case ExperimentMode::compare_pairs: compare(config, rec); break;
    }
    return rec.finish();
}

}  // namespace passive
