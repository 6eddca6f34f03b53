#pragma once

// Shared adaptive integrator for the library's ODE solves. Bulirsch-Stoer
// extrapolation keeps a reliable error estimate on quadrature-like right-hand
// sides where embedded Fehlberg pairs under-report the local error.

#include <array>
#include <cstddef>

#include <boost/numeric/odeint.hpp>

namespace passive::detail {

namespace odeint = boost::numeric::odeint;

inline constexpr double ode_tolerance = 1e-12;

template <std::size_t N>
using OdeState = std::array<double, N>;

template <std::size_t N>
odeint::bulirsch_stoer<OdeState<N>> stepper(double tol = ode_tolerance)
{
    return odeint::bulirsch_stoer<OdeState<N>>(tol, tol);
}

}  // namespace passive::detail
