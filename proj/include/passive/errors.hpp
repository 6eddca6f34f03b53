#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace passive {

/// Failure categories raised by the library. Every operation documents which
/// of these it can produce.
enum class ErrorKind {
    domain,
    resolution,
    range,
    spectral,
    positivity,
    reconstruction,
    stability,
    validation,
    applicability,
    matching,
    optimization,
    conditioning,
    consistency,
    data,
    parse,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

    /// Set for resolution errors that know the largest request that would
    /// have succeeded (e.g. the maximum reliable eigenvalue count).
    std::optional<std::size_t> limit() const noexcept { return limit_; }

    /// Location attached to reconstruction blow-ups (spatial coordinate).
    std::optional<double> location() const noexcept { return location_; }

    Error& with_limit(std::size_t value)
    {
        limit_ = value;
        return *this;
    }
    Error& with_location(double value)
    {
        location_ = value;
        return *this;
    }

private:
    ErrorKind kind_;
    std::optional<std::size_t> limit_;
    std::optional<double> location_;
};

}  // namespace passive
