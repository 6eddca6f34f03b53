#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "passive/errors.hpp"

namespace passive {

struct Interval {
    double left = 0.0;
    double right = 1.0;

    double length() const noexcept { return right - left; }
    bool contains(double x, double slack = 0.0) const noexcept
    {
        return x >= left - slack && x <= right + slack;
    }
};

/// Role of a sampled function. Speeds must stay positive; the remaining kinds
/// carry no sign constraint. `auxiliary` covers derived quantities such as
/// eigenfunctions, sensitivities and coordinate maps.
enum class ProfileKind { speed, convection, potential, initial_data, auxiliary };

std::string_view to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(std::string_view text);

class CubicSpline;

/// Real-valued function on an interval, stored as samples on a uniform grid
/// that includes both endpoints. Evaluation between nodes uses a C2 cubic
/// spline whose end slopes come from fourth-order one-sided differences, so
/// the interpolant reproduces cubic polynomials exactly.
///
/// Immutable after construction; copies share the spline coefficients.
class Profile {
public:
    Profile(Interval interval, std::vector<double> samples, ProfileKind kind = ProfileKind::auxiliary);

    static Profile from_function(Interval interval, std::size_t count,
                                 const std::function<double(double)>& f,
                                 ProfileKind kind = ProfileKind::auxiliary);
    static Profile constant(Interval interval, std::size_t count, double value,
                            ProfileKind kind = ProfileKind::auxiliary);

    /// Speed profile that must equal `background` at both endpoints (the
    /// wave speed is constant outside the unit interval).
    static Profile speed(Interval interval, std::vector<double> samples, double background);

    const Interval& interval() const noexcept { return interval_; }
    double left() const noexcept { return interval_.left; }
    double right() const noexcept { return interval_.right; }
    double length() const noexcept { return interval_.length(); }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return samples_.size(); }
    ProfileKind kind() const noexcept { return kind_; }

    std::span<const double> samples() const noexcept { return samples_; }
    double sample(std::size_t i) const { return samples_.at(i); }
    double node(std::size_t i) const noexcept
    {
        return i + 1 == samples_.size() ? interval_.right : interval_.left + spacing_ * double(i);
    }
    std::vector<double> nodes() const;

    /// Interpolated value; throws a domain error outside the interval.
    double operator()(double x) const;
    double prime(double x) const;
    double double_prime(double x) const;

    /// Same function on a different uniform grid over the same interval.
    Profile resampled(std::size_t count) const;
    /// Restriction (or extension by constant end values) to another interval.
    Profile on(Interval target, std::size_t count) const;
    Profile with_kind(ProfileKind kind) const;

    double min_value() const;
    double max_value() const;
    double max_abs() const;

private:
    double checked(double x) const;

    Interval interval_;
    std::vector<double> samples_;
    ProfileKind kind_;
    double spacing_;
    std::shared_ptr<const CubicSpline> spline_;
};

/// Derivative of order 1 or 2 sampled on the profile's own grid. Interior
/// nodes use centred seven-point stencils (sixth order); nodes near the ends
/// use the nearest seven-point one-sided window. Requires at least 8 samples.
Profile derivative(const Profile& p, int order);

/// Composite Simpson integral of the profile samples.
double integral(const Profile& p);
/// L2 norm over the profile interval (Simpson on squared samples).
double l2_norm(const Profile& p);
/// Sup over nodes of |a - b|, evaluating `b` at the nodes of `a`.
double sup_distance(const Profile& a, const Profile& b);
/// L2 distance on the grid of `a`.
double l2_distance(const Profile& a, const Profile& b);

enum class TraceFlavor { dirichlet, neumann };

std::string_view to_string(TraceFlavor flavor);
TraceFlavor trace_flavor_from_string(std::string_view text);

/// Uniformly sampled boundary observation. The empirical exponential decay
/// rate is estimated from the last quarter of the record at construction.
class BoundaryTrace {
public:
    BoundaryTrace(double t0, double dt, std::vector<double> values, TraceFlavor flavor);

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    double time(std::size_t i) const noexcept { return t0_ + dt_ * double(i); }
    double t_last() const noexcept { return time(values_.size() - 1); }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double value(std::size_t i) const { return values_.at(i); }
    TraceFlavor flavor() const noexcept { return flavor_; }
    std::optional<double> decay_rate_estimate() const noexcept { return decay_rate_; }
    double max_abs() const;

private:
    double t0_;
    double dt_;
    std::vector<double> values_;
    TraceFlavor flavor_;
    std::optional<double> decay_rate_;
};

/// Log-linear fit of the trailing envelope over the last quarter of the
/// record; empty when the record does not decay.
std::optional<double> estimate_decay_rate(double dt, std::span<const double> values);

struct Mode {
    double lambda = 0.0;
    double amplitude = 0.0;
    double confidence = 1.0;
    /// Position in the full spectrum (1-based); 0 when not assigned.
    std::size_t index = 0;
};

/// Eigenvalues (or decay rates) with amplitudes and per-mode confidence.
/// Lambdas are strictly increasing.
struct ModeSet {
    std::vector<Mode> modes;
    double interval_length = 1.0;

    std::size_t size() const noexcept { return modes.size(); }
    bool empty() const noexcept { return modes.empty(); }
    std::vector<double> lambdas() const;
    /// Index of mode i: the stored index when set, else its position + 1.
    std::size_t index_of(std::size_t i) const;
    ModeSet confident(double threshold) const;
    void validate() const;
};

/// Counting functions evaluated at increasing thresholds.
struct SpectrumCounts {
    std::vector<double> thresholds;
    std::vector<std::size_t> total;      // N(lambda)
    std::vector<std::size_t> matched;    // S(lambda)
    std::vector<std::size_t> vanishing;  // d(lambda)

    std::size_t size() const noexcept { return thresholds.size(); }
    /// d(lambda)/sqrt(lambda) at threshold i.
    double vanishing_density(std::size_t i) const;
    /// S(lambda)/N(lambda) at threshold i.
    double matched_fraction(std::size_t i) const;
    void validate() const;
};

}  // namespace passive
