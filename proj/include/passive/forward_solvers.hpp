#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "passive/core_types.hpp"

namespace passive {

enum class WaveBoundary { transparent, padded };

struct WaveRunOptions {
    double t_max = 8.0;
    double cfl = 0.9;
    WaveBoundary boundary = WaveBoundary::transparent;
    /// Padded mode extends the domain by pad_factor * c0 * t_max / 2 beyond x = 1.
    double pad_factor = 1.0;
    double margin = 0.25;
    /// Grid intervals per unit length; x = 1 is always a grid node.
    std::size_t nodes_per_unit = 1024;
    double c0 = 1.0;
};

/// Leapfrog discretization of u_tt = c^2 u_xx on [0, right], shared by the
/// forward solver and its discrete adjoint.
struct WaveGrid {
    double dx = 0.0;
    double dt = 0.0;
    std::size_t nodes = 0;     // including x = 0 and the right edge
    std::size_t receiver = 0;  // index of x = 1
    std::size_t steps = 0;     // time levels 0..steps
    std::vector<double> sigma2;  // (c dt / dx)^2 per node
    bool transparent = true;
    double mur = 0.0;  // first-order outgoing-boundary coefficient
    double c0 = 1.0;
};

/// Errors: stability (cfl outside (0,1)), validation (c differs from c0 at
/// the ends of its interval, or c is not on [0,1]).
WaveGrid make_wave_grid(const Profile& c, const WaveRunOptions& opts);

/// Trace u(t_n, 1), n = 0..steps, for initial data sampled at the grid nodes
/// of [0, 1] (receiver + 1 values; the first and last are forced to zero).
std::vector<double> wave_forward_trace(const WaveGrid& grid, std::span<const double> f_nodes);

/// Exact adjoint of `wave_forward_trace`: gradient on the nodes of [0, 1] of
/// 1/2 |trace(f) - data|^2 with respect to f, given the residual trace.
std::vector<double> wave_adjoint(const WaveGrid& grid, std::span<const double> residual);

struct WaveRunDetail {
    BoundaryTrace trace;
    /// d_x u(t_n, 1) from fourth-order central differences of the field.
    std::vector<double> space_derivative;
    /// Discrete energy at half steps (conserved by the scheme away from the boundary).
    std::vector<double> energy;
    WaveGrid grid;
};

/// Dirichlet trace u(t, 1) of u_tt = c^2 u_xx, u(0) = f, u_t(0) = 0,
/// u(t, 0) = 0. Errors: stability, validation (c_cond or F_supp violated).
BoundaryTrace solve_wave(const Profile& c, const Profile& f, const WaveRunOptions& opts);
WaveRunDetail solve_wave_detailed(const Profile& c, const Profile& f, const WaveRunOptions& opts);

/// Neumann trace -(1/c0) d/dt u(t, 1) with a fourth-order time stencil.
/// Errors: resolution (fewer than 5 samples), validation (not Dirichlet).
BoundaryTrace neumann_trace_from_dirichlet(const BoundaryTrace& trace, double c0);

struct HeatRunOptions {
    /// Uniformly spaced sample times in (0, T).
    std::vector<double> times;
    std::size_t mode_count = 40;
    std::size_t fd_resolution = 2049;
    double fd_dt = 1e-5;

    static HeatRunOptions uniform(double t_first, double t_last, std::size_t count);
};

struct HeatModalResult {
    BoundaryTrace trace;
    /// Bound on the omitted modes k > K at the earliest sample time.
    double truncation_bound = 0.0;
};

/// Flux d_x u(t, 1) of u_t - u_xx + b u_x = 0 with Dirichlet ends, from the
/// eigen-expansion of the gauged problem with potential V = -b'/2 + b^2/4.
/// Errors: resolution (K beyond the eigen solver), validation (bad times,
/// g not vanishing at the ends).
HeatModalResult solve_heat_modal(const Profile& b, const Profile& g, const HeatRunOptions& opts);

/// Same flux from Crank-Nicolson on the convection form (Rannacher start-up,
/// second-order centred space, fourth-order one-sided flux stencil).
BoundaryTrace solve_heat_fd(const Profile& b, const Profile& g, const HeatRunOptions& opts);

/// Adds Gaussian noise with standard deviation amplitude * max|trace|. The
/// draw for sample i depends only on (seed, i).
BoundaryTrace with_noise(const BoundaryTrace& trace, double amplitude, std::uint64_t seed);

/// Counter-based standard normal variate (splitmix64 + Box-Muller).
double normal_variate(std::uint64_t seed, std::uint64_t counter);

}  // namespace passive
