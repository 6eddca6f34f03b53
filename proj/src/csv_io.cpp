#include "passive/csv_io.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace passive::csv {

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto a = field.find_first_not_of(" \t\r");
        const auto b = field.find_last_not_of(" \t\r");
        out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
    }
    return out;
}

double to_double(const std::string& s, std::size_t line)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error(ErrorKind::parse, fmt::format("line {}: '{}' is not a number", line, s));
    return v;
}

std::size_t to_count(const std::string& s, std::size_t line)
{
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || v < 0)
        throw Error(ErrorKind::parse, fmt::format("line {}: '{}' is not a count", line, s));
    return std::size_t(v);
}

std::vector<std::string> header(std::istream& in, std::size_t fields)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("#", 0) != 0)
        throw Error(ErrorKind::parse, "line 1: missing '#' header");
    auto parts = split(line.substr(1));
    if (parts.size() != fields)
        throw Error(ErrorKind::parse, fmt::format("line 1: header needs {} fields, found {}", fields, parts.size()));
    return parts;
}

std::vector<std::vector<std::string>> rows(std::istream& in, std::size_t expected, std::size_t min_fields,
                                           std::size_t max_fields)
{
    std::vector<std::vector<std::string>> out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto parts = split(line);
        if (parts.size() < min_fields || parts.size() > max_fields)
            throw Error(ErrorKind::parse, fmt::format("line {}: unexpected field count {}", lineno, parts.size()));
        out.push_back(std::move(parts));
    }
    if (out.size() != expected)
        throw Error(ErrorKind::parse, fmt::format("header declares {} rows, found {}", expected, out.size()));
    return out;
}

}  // namespace

std::string format(double value)
{
    return fmt::format("{:.17g}", value);
}

void write(std::ostream& out, const Profile& p)
{
    out << "# " << to_string(p.kind()) << ',' << format(p.left()) << ',' << format(p.right()) << ','
        << p.size() << '\n';
    for (double v : p.samples()) out << format(v) << '\n';
}

Profile read_profile(std::istream& in)
{
    const auto h = header(in, 4);
    const auto kind = profile_kind_from_string(h[0]);
    const double left = to_double(h[1], 1), right = to_double(h[2], 1);
    const auto count = to_count(h[3], 1);
    const auto body = rows(in, count, 1, 1);
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = to_double(body[i][0], i + 2);
    return Profile({left, right}, std::move(s), kind);
}

void write(std::ostream& out, const BoundaryTrace& trace)
{
    out << "# " << to_string(trace.flavor()) << ',' << format(trace.t0()) << ',' << format(trace.dt()) << ','
        << trace.size() << '\n';
    for (double v : trace.values()) out << format(v) << '\n';
}

BoundaryTrace read_trace(std::istream& in)
{
    const auto h = header(in, 4);
    const auto flavor = trace_flavor_from_string(h[0]);
    const double t0 = to_double(h[1], 1), dt = to_double(h[2], 1);
    const auto count = to_count(h[3], 1);
    const auto body = rows(in, count, 1, 1);
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = to_double(body[i][0], i + 2);
    return BoundaryTrace(t0, dt, std::move(v), flavor);
}

void write(std::ostream& out, const ModeSet& modes)
{
    bool indexed = false;
    for (const auto& m : modes.modes) indexed = indexed || m.index != 0;
    out << "# " << format(modes.interval_length) << ',' << modes.size() << '\n';
    for (const auto& m : modes.modes) {
        out << format(m.lambda) << ',' << format(m.amplitude) << ',' << format(m.confidence);
        if (indexed) out << ',' << m.index;
        out << '\n';
    }
}

ModeSet read_modes(std::istream& in)
{
    const auto h = header(in, 2);
    ModeSet ms;
    ms.interval_length = to_double(h[0], 1);
    const auto count = to_count(h[1], 1);
    const auto body = rows(in, count, 3, 4);
    for (std::size_t i = 0; i < count; ++i) {
        Mode m;
        m.lambda = to_double(body[i][0], i + 2);
        m.amplitude = to_double(body[i][1], i + 2);
        m.confidence = to_double(body[i][2], i + 2);
        if (body[i].size() == 4) m.index = to_count(body[i][3], i + 2);
        ms.modes.push_back(m);
    }
    ms.validate();
    return ms;
}

void write(std::ostream& out, const SpectrumCounts& counts)
{
    out << "# thresholds," << counts.size() << '\n';
    for (std::size_t i = 0; i < counts.size(); ++i)
        out << format(counts.thresholds[i]) << ',' << counts.total[i] << ',' << counts.matched[i] << ','
            << counts.vanishing[i] << '\n';
}

SpectrumCounts read_counts(std::istream& in)
{
    const auto h = header(in, 2);
    if (h[0] != "thresholds") throw Error(ErrorKind::parse, "line 1: expected 'thresholds' header");
    const auto count = to_count(h[1], 1);
    const auto body = rows(in, count, 4, 4);
    SpectrumCounts c;
    for (std::size_t i = 0; i < count; ++i) {
        c.thresholds.push_back(to_double(body[i][0], i + 2));
        c.total.push_back(to_count(body[i][1], i + 2));
        c.matched.push_back(to_count(body[i][2], i + 2));
        c.vanishing.push_back(to_count(body[i][3], i + 2));
    }
    c.validate();
    return c;
}

template <class T>
void save(const std::filesystem::path& path, const T& value)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::data, "cannot open '" + path.string() + "' for writing");
    write(out, value);
    if (!out) throw Error(ErrorKind::data, "write failed for '" + path.string() + "'");
}

template void save<Profile>(const std::filesystem::path&, const Profile&);
template void save<BoundaryTrace>(const std::filesystem::path&, const BoundaryTrace&);
template void save<ModeSet>(const std::filesystem::path&, const ModeSet&);
template void save<SpectrumCounts>(const std::filesystem::path&, const SpectrumCounts&);

namespace {
std::ifstream open(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
    return in;
}
}  // namespace

Profile load_profile(const std::filesystem::path& path)
{
    auto in = open(path);
    return read_profile(in);
}

BoundaryTrace load_trace(const std::filesystem::path& path)
{
    auto in = open(path);
    return read_trace(in);
}

ModeSet load_modes(const std::filesystem::path& path)
{
    auto in = open(path);
    return read_modes(in);
}

SpectrumCounts load_counts(const std::filesystem::path& path)
{
    auto in = open(path);
    return read_counts(in);
}

}  // namespace passive::csv
