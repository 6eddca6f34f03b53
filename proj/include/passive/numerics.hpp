#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace passive::numerics {

/// Composite Simpson rule on uniformly spaced samples. An even sample count
/// closes with the three-eighths rule on the last three intervals. Two or
/// three samples fall back to the trapezoid / single Simpson panel.
double simpson(std::span<const double> values, double h);

/// Running integral from the first node, exact for cubics on every panel
/// (four-point Lagrange weights, shifted one-sided at the ends).
std::vector<double> cumulative_integral(std::span<const double> values, double h);

/// Trapezoid rule with fourth-order Gregory end corrections; suitable for
/// smooth integrands sampled densely, including kinks at the end points.
double gregory(std::span<const double> values, double h);

/// Finite-difference weights for derivative `order` at `x0` on the given
/// stencil points (Fornberg's recursion).
std::vector<double> fd_weights(std::span<const double> points, double x0, int order);

/// Derivative of order 1 or 2 of uniformly spaced samples, using seven-point
/// windows (centred in the interior, shifted near the ends).
std::vector<double> differentiate(std::span<const double> values, double h, int order);

/// Evenly spaced points including both ends.
std::vector<double> linspace(double a, double b, std::size_t count);

}  // namespace passive::numerics
