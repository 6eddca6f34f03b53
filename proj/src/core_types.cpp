#include "passive/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "passive/numerics.hpp"

namespace passive {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::resolution: return "resolution";
    case ErrorKind::range: return "range";
    case ErrorKind::spectral: return "spectral";
    case ErrorKind::positivity: return "positivity";
    case ErrorKind::reconstruction: return "reconstruction";
    case ErrorKind::stability: return "stability";
    case ErrorKind::validation: return "validation";
    case ErrorKind::applicability: return "applicability";
    case ErrorKind::matching: return "matching";
    case ErrorKind::optimization: return "optimization";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::data: return "data";
    case ErrorKind::parse: return "parse";
    }
    return "unknown";
}

std::string_view to_string(ProfileKind kind)
{
    switch (kind) {
    case ProfileKind::speed: return "speed";
    case ProfileKind::convection: return "convection";
    case ProfileKind::potential: return "potential";
    case ProfileKind::initial_data: return "initial_data";
    case ProfileKind::auxiliary: return "auxiliary";
    }
    return "auxiliary";
}

ProfileKind profile_kind_from_string(std::string_view text)
{
    for (auto k : {ProfileKind::speed, ProfileKind::convection, ProfileKind::potential,
                   ProfileKind::initial_data, ProfileKind::auxiliary})
        if (to_string(k) == text) return k;
    throw Error(ErrorKind::parse, "unknown profile kind '" + std::string(text) + "'");
}

std::string_view to_string(TraceFlavor flavor)
{
    return flavor == TraceFlavor::dirichlet ? "dirichlet" : "neumann";
}

TraceFlavor trace_flavor_from_string(std::string_view text)
{
    if (text == "dirichlet") return TraceFlavor::dirichlet;
    if (text == "neumann") return TraceFlavor::neumann;
    throw Error(ErrorKind::parse, "unknown trace flavor '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Profile

// Clamped cubic spline on a uniform grid. End slopes come from one-sided
// differences that are exact for cubics, so cubics are reproduced exactly.
class CubicSpline {
public:
    CubicSpline(std::span<const double> y, double left, double h)
        : y_(y.begin(), y.end()), m_(y.size()), left_(left), h_(h)
    {
        const std::size_t n = y.size();
        double d0, d1;
        if (n >= 5) {
            d0 = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * h);
            d1 = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4] + 3.0 * y[n - 5]) / (12.0 * h);
        } else {
            d0 = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / (6.0 * h);
            d1 = (11.0 * y[3] - 18.0 * y[2] + 9.0 * y[1] - 2.0 * y[0]) / (6.0 * h);
        }
        // tridiagonal system for the second derivatives
        std::vector<double> diag(n, 2.0 * h / 3.0), rhs(n);
        const double off = h / 6.0;
        diag.front() = diag.back() = h / 3.0;
        rhs.front() = (y[1] - y[0]) / h - d0;
        rhs.back() = d1 - (y[n - 1] - y[n - 2]) / h;
        for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
        for (std::size_t i = 1; i < n; ++i) {
            const double w = off / diag[i - 1];
            diag[i] -= w * off;
            rhs[i] -= w * rhs[i - 1];
        }
        m_[n - 1] = rhs[n - 1] / diag[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - off * m_[i + 1]) / diag[i];
    }

    double value(double x) const
    {
        const auto [i, a, b] = locate(x);
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h_ * h_ / 6.0;
    }
    double prime(double x) const
    {
        const auto [i, a, b] = locate(x);
        return (y_[i + 1] - y_[i]) / h_ - (3.0 * a * a - 1.0) / 6.0 * h_ * m_[i] +
               (3.0 * b * b - 1.0) / 6.0 * h_ * m_[i + 1];
    }
    double double_prime(double x) const
    {
        const auto [i, a, b] = locate(x);
        return a * m_[i] + b * m_[i + 1];
    }

private:
    struct Cell {
        std::size_t i;
        double a, b;
    };
    Cell locate(double x) const
    {
        const double t = (x - left_) / h_;
        const auto i = std::min<std::size_t>(std::size_t(std::max(0.0, std::floor(t))), y_.size() - 2);
        const double b = t - double(i);
        return {i, 1.0 - b, b};
    }

    std::vector<double> y_, m_;
    double left_, h_;
};

Profile::Profile(Interval interval, std::vector<double> samples, ProfileKind kind)
    : interval_(interval), samples_(std::move(samples)), kind_(kind), spacing_(0.0)
{
    if (samples_.size() < 4)
        throw Error(ErrorKind::validation, "profile needs at least 4 samples");
    if (!(interval_.right > interval_.left))
        throw Error(ErrorKind::validation, "profile interval must have positive length");
    for (double v : samples_)
        if (!std::isfinite(v)) throw Error(ErrorKind::validation, "profile samples must be finite");
    if (kind_ == ProfileKind::speed)
        for (double v : samples_)
            if (!(v > 0.0)) throw Error(ErrorKind::positivity, "speed profile must be positive");
    spacing_ = interval_.length() / double(samples_.size() - 1);
    spline_ = std::make_shared<const CubicSpline>(samples_, interval_.left, spacing_);
}

Profile Profile::from_function(Interval interval, std::size_t count, const std::function<double(double)>& f,
                               ProfileKind kind)
{
    if (count < 4) throw Error(ErrorKind::validation, "profile needs at least 4 samples");
    const auto xs = numerics::linspace(interval.left, interval.right, count);
    std::vector<double> s(count);
    std::transform(xs.begin(), xs.end(), s.begin(), f);
    return Profile(interval, std::move(s), kind);
}

Profile Profile::constant(Interval interval, std::size_t count, double value, ProfileKind kind)
{
    return Profile(interval, std::vector<double>(count, value), kind);
}

Profile Profile::speed(Interval interval, std::vector<double> samples, double background)
{
    constexpr double tol = 1e-10;
    Profile p(interval, std::move(samples), ProfileKind::speed);
    if (std::abs(p.samples_.front() - background) > tol || std::abs(p.samples_.back() - background) > tol)
        throw Error(ErrorKind::validation,
                    "speed must equal the background value at both endpoints (c_cond)");
    return p;
}

std::vector<double> Profile::nodes() const
{
    return numerics::linspace(interval_.left, interval_.right, samples_.size());
}

double Profile::checked(double x) const
{
    const double slack = 1e-12 * std::max(1.0, interval_.length());
    if (!interval_.contains(x, slack) || std::isnan(x))
        throw Error(ErrorKind::domain, "evaluation point outside profile interval");
    return std::clamp(x, interval_.left, interval_.right);
}

double Profile::operator()(double x) const
{
    x = checked(x);
    // grid nodes return the stored sample bit for bit
    const double t = (x - interval_.left) / spacing_;
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-11) return samples_[std::size_t(r)];
    return spline_->value(x);
}

double Profile::prime(double x) const
{
    return spline_->prime(checked(x));
}

double Profile::double_prime(double x) const
{
    return spline_->double_prime(checked(x));
}

Profile Profile::resampled(std::size_t count) const
{
    if (count == samples_.size()) return *this;
    const auto xs = numerics::linspace(interval_.left, interval_.right, count);
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = spline_->value(xs[i]);
    s.front() = samples_.front();
    s.back() = samples_.back();
    return Profile(interval_, std::move(s), kind_);
}

Profile Profile::on(Interval target, std::size_t count) const
{
    const auto xs = numerics::linspace(target.left, target.right, count);
    std::vector<double> s(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = xs[i];
        if (x <= interval_.left)
            s[i] = samples_.front();
        else if (x >= interval_.right)
            s[i] = samples_.back();
        else
            s[i] = spline_->value(x);
    }
    return Profile(target, std::move(s), kind_);
}

Profile Profile::with_kind(ProfileKind kind) const
{
    return Profile(interval_, samples_, kind);
}

double Profile::min_value() const
{
    return *std::min_element(samples_.begin(), samples_.end());
}

double Profile::max_value() const
{
    return *std::max_element(samples_.begin(), samples_.end());
}

double Profile::max_abs() const
{
    double m = 0.0;
    for (double v : samples_) m = std::max(m, std::abs(v));
    return m;
}

Profile derivative(const Profile& p, int order)
{
    if (order != 1 && order != 2) throw Error(ErrorKind::domain, "derivative order must be 1 or 2");
    if (p.size() < 8) throw Error(ErrorKind::resolution, "derivative needs at least 8 samples").with_limit(8);
    auto d = numerics::differentiate(p.samples(), p.spacing(), order);
    return Profile(p.interval(), std::move(d), ProfileKind::auxiliary);
}

double integral(const Profile& p)
{
    return numerics::simpson(p.samples(), p.spacing());
}

double l2_norm(const Profile& p)
{
    std::vector<double> sq(p.size());
    std::transform(p.samples().begin(), p.samples().end(), sq.begin(), [](double v) { return v * v; });
    return std::sqrt(numerics::simpson(sq, p.spacing()));
}

double sup_distance(const Profile& a, const Profile& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.sample(i) - b(a.node(i))));
    return m;
}

double l2_distance(const Profile& a, const Profile& b)
{
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.sample(i) - b(a.node(i));
        sq[i] = d * d;
    }
    return std::sqrt(numerics::simpson(sq, a.spacing()));
}

// ---------------------------------------------------------------------------
// BoundaryTrace

std::optional<double> estimate_decay_rate(double dt, std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 8) return std::nullopt;

    double peak = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(values[i]) > peak) {
            peak = std::abs(values[i]);
            argmax = i;
        }
    if (peak == 0.0) return std::nullopt;

    // trailing envelope: max |v| over [i, end]
    std::vector<double> env(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, std::abs(values[i]));
        env[i] = running;
    }

    const double floor = 1e-14 * peak;
    const std::size_t start = n - n / 4;
    const double span_t = dt * double(n - 1 - argmax);
    if (span_t <= 0.0) return std::nullopt;

    // fully decayed to round-off: report the rate implied by the floor
    if (env[start] <= floor) return std::log(peak / floor) / span_t;

    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (std::size_t i = start; i < n; ++i) {
        const double t = dt * double(i);
        const double y = std::log(std::max(env[i], floor));
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    const double denom = double(count) * stt - st * st;
    if (denom <= 0.0) return std::nullopt;
    const double slope = (double(count) * sty - st * sy) / denom;
    if (!(slope < 0.0)) return std::nullopt;

    double rate = -slope;
    // keep |v_last| <= peak e^{-rate (t_last - t_peak)} * 10
    const double last = std::max(std::abs(values[n - 1]), floor);
    const double cap = std::log(10.0 * peak / last) / span_t;
    if (cap > 0.0) rate = std::min(rate, cap);
    return rate;
}

BoundaryTrace::BoundaryTrace(double t0, double dt, std::vector<double> values, TraceFlavor flavor)
    : t0_(t0), dt_(dt), values_(std::move(values)), flavor_(flavor)
{
    if (!(dt_ > 0.0)) throw Error(ErrorKind::validation, "trace time step must be positive");
    if (values_.size() < 2) throw Error(ErrorKind::validation, "trace needs at least 2 samples");
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorKind::validation, "trace values must be finite");
    decay_rate_ = estimate_decay_rate(dt_, values_);
}

double BoundaryTrace::max_abs() const
{
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

// ---------------------------------------------------------------------------
// ModeSet / SpectrumCounts

std::vector<double> ModeSet::lambdas() const
{
    std::vector<double> out(modes.size());
    std::transform(modes.begin(), modes.end(), out.begin(), [](const Mode& m) { return m.lambda; });
    return out;
}

std::size_t ModeSet::index_of(std::size_t i) const
{
    const auto k = modes.at(i).index;
    return k == 0 ? i + 1 : k;
}

ModeSet ModeSet::confident(double threshold) const
{
    ModeSet out;
    out.interval_length = interval_length;
    for (std::size_t i = 0; i < modes.size(); ++i)
        if (modes[i].confidence >= threshold) {
            Mode m = modes[i];
            m.index = index_of(i);
            out.modes.push_back(m);
        }
    return out;
}

void ModeSet::validate() const
{
    if (!(interval_length > 0.0)) throw Error(ErrorKind::validation, "mode set interval length must be positive");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const auto& m = modes[i];
        if (!std::isfinite(m.lambda) || !std::isfinite(m.amplitude))
            throw Error(ErrorKind::validation, "mode values must be finite");
        if (m.confidence < 0.0 || m.confidence > 1.0)
            throw Error(ErrorKind::validation, "mode confidence must lie in [0,1]");
        if (i > 0 && !(m.lambda > modes[i - 1].lambda))
            throw Error(ErrorKind::validation, "mode lambdas must be strictly increasing");
    }
}

double SpectrumCounts::vanishing_density(std::size_t i) const
{
    return double(vanishing.at(i)) / std::sqrt(thresholds.at(i));
}

double SpectrumCounts::matched_fraction(std::size_t i) const
{
    return total.at(i) == 0 ? 1.0 : double(matched.at(i)) / double(total.at(i));
}

void SpectrumCounts::validate() const
{
    const std::size_t n = thresholds.size();
    if (total.size() != n || matched.size() != n || vanishing.size() != n)
        throw Error(ErrorKind::validation, "spectrum count columns differ in length");
    for (std::size_t i = 0; i < n; ++i) {
        if (matched[i] > total[i] || vanishing[i] > total[i])
            throw Error(ErrorKind::validation, "counts must satisfy S <= N and d <= N");
        if (i > 0 && (!(thresholds[i] > thresholds[i - 1]) || total[i] < total[i - 1] ||
                      matched[i] < matched[i - 1] || vanishing[i] < vanishing[i - 1]))
            throw Error(ErrorKind::validation, "counts must be monotone in increasing thresholds");
    }
}

}  // namespace passive
