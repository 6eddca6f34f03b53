#pragma once

#include <cstddef>

#include "passive/core_types.hpp"

namespace passive {

/// Travel-time coordinate y(x) = integral of 1/c from the left end, with its
/// inverse x(y) sampled on a uniform y grid over [0, L].
struct TravelTimeMap {
    Profile forward;  // y(x) on the speed grid
    Profile inverse;  // x(y) on [0, L]
    double L = 0.0;
};

struct PotentialFromSpeed {
    Profile q;  // potential on [0, L]
    TravelTimeMap map;
};

/// Liouville transform of -c^2 d_x^2 into -d_y^2 + q on [0, L]:
/// q = c'^2/4 - c c''/2 evaluated in x and resampled on a uniform y grid of
/// `y_count` nodes (default: the speed grid size).
/// Errors: positivity (c not positive), resolution (fewer than 8 samples).
PotentialFromSpeed speed_to_potential(const Profile& c, double c0, std::size_t y_count = 0);

/// Inverse transform. Solves u'' = q u with u(0) = c0^{-1/2}, u'(0) = 0,
/// sets c = u^{-2} and maps back through x(y) = integral of c over [0, y].
/// The result lives on [0, x(L)] with `x_count` nodes (default: q grid size).
/// Errors: reconstruction (u reaches zero; location reports y).
Profile potential_to_speed(const Profile& q, double c0, std::size_t x_count = 0);

/// V = -b'/2 + b^2/4 on the grid of b.
Profile convection_to_potential(const Profile& b);

/// Solves b' = b^2/2 - 2V backward from b(right) = b_right. Errors:
/// reconstruction (|b| exceeds 1e6; location reports x).
Profile recover_convection(const Profile& V, double b_right);

enum class GaugeDirection { forward, inverse };

/// forward: g -> exp(-1/2 int_1^x b) g; inverse: h -> exp(+1/2 int_1^x b) h.
/// The integral runs from the right end of the interval.
Profile gauge_initial_data(const Profile& g, const Profile& b, GaugeDirection direction);

}  // namespace passive
