#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "passive/core_types.hpp"
#include "passive/forward_solvers.hpp"
#include "passive/spectral_extraction.hpp"

namespace passive {

struct InversionSettings {
    /// Part of the potential interval where V is unknown.
    Interval unknown_region{0.0, 0.5};
    std::size_t basis_count = 16;
    /// Tikhonov weight on second differences of the basis coefficients.
    double regularization = 1e-6;
    std::size_t max_iterations = 50;
    /// Target for |lambda(V) - lambda_obs|_2 / |lambda_obs|_2.
    double misfit_tolerance = 1e-10;
    /// Also fit the length of the potential interval (the known part must be
    /// a constant to the right of the unknown region; used by the wave pipeline,
    /// where the true travel time is only estimated).
    bool fit_length = false;
    /// Grid size for V; raised to 4 K + 1 when needed.
    std::size_t grid_size = 513;
    /// Optional extra residual rows evaluated on the potential and interval
    /// length (prior knowledge such as end conditions). They are scaled by
    /// the norm of the observed eigenvalues and differentiated numerically.
    std::function<std::vector<double>(const Profile& V, double length)> constraints;

    void validate() const;
};

/// V = base + sum theta_i beta_i with cubic B-splines on the unknown region.
/// Splines vanish at both ends of the region (slope and curvature free). The base is the known
/// potential, continued into the unknown region by its junction value plus a
/// windowed second-order Taylor term, so the join is C2.
class PartialSpectrumModel {
public:
    PartialSpectrumModel(const Profile& known, const InversionSettings& settings, std::vector<std::size_t> indices);

    std::size_t parameter_count() const noexcept;
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    Interval interval(double length) const;

    /// Potential for coefficients theta (and interval length when fitted).
    Profile potential(const std::vector<double>& theta, double length) const;
    /// Eigenvalues at the observed indices.
    std::vector<double> eigenvalues(const std::vector<double>& theta, double length) const;

    struct Linearization {
        std::vector<double> lambda;
        /// rows: observed modes; columns: theta, then the length if fitted.
        std::vector<std::vector<double>> jacobian;
    };
    /// d lambda_k / d theta_i = integral phi_k^2 beta_i; d lambda_k / d length
    /// = -phi_k'(right)^2 (boundary variation of a Dirichlet problem).
    Linearization linearize(const std::vector<double>& theta, double length) const;

    double basis(std::size_t i, double x) const;
    double base(double x) const;
    double default_length() const noexcept { return length0_; }

private:
    struct Junction {
        double x, value, slope, curvature, reach;
        std::function<double(double)> share;
    };

    Profile known_;
    InversionSettings settings_;
    std::vector<std::size_t> indices_;
    double length0_;
    double knot_spacing_;
    long first_center_;
    std::size_t grid_;
    std::vector<Junction> junctions_;
};

struct PotentialReconstruction {
    Profile V = Profile::constant({0.0, 1.0}, 4, 0.0);
    std::vector<double> coefficients;
    double length = 0.0;
    /// |residual|_2 / |lambda_obs|_2, constraint rows included.
    double misfit = 0.0;
    std::vector<double> misfit_history;
    std::vector<double> objective_history;
    std::size_t iterations = 0;
    bool converged = false;
    /// Observed indices whose sqrt(lambda) gap to the previous index exceeds
    /// 1.6 pi / length per index step (possible mis-indexing).
    std::vector<std::size_t> gap_flags;
};

/// Gauss-Newton with Tikhonov-regularized normal equations and backtracking
/// on residuals lambda_k(V) - lambda_k^obs over the observed indices.
/// Errors: conditioning (fewer observations than unknowns with zero
/// regularization), optimization (misfit rising by more than 0.1% on 3 consecutive steps),
/// validation (missing indices, settings, region outside the interval).
PotentialReconstruction recover_potential_from_partial_spectrum(const ModeSet& observed, const Profile& known,
                                                                 const InversionSettings& settings);

struct SpeedPipelineOptions {
    /// Extended-interval eigenvalues used by the inversion.
    std::size_t mode_count = 12;
    /// Modes for the preliminary travel-time scan.
    std::size_t scan_modes = 12;
    double confidence_threshold = 0.5;
    std::size_t speed_nodes = 1025;
};

struct SpeedReconstruction {
    Profile c = Profile::constant({0.0, 1.0}, 4, 1.0);  // on [0, 1]
    Profile q = Profile::constant({0.0, 1.0}, 4, 0.0);  // on [0, L]
    double L = 0.0;
    double L_scan = 0.0;  // preliminary Weyl estimate
    ExtendedSpectrum spectrum;
    PotentialReconstruction inversion;
};

/// Trace -> travel time (Weyl fit on the transform zeros) -> extended
/// spectrum on (0, 2L) -> potential on (0, 2L) with q = 0 known on (L, 2L)
/// and the length refined jointly -> speed. The inversion also carries the
/// end conditions of a speed equal to c0 with zero slope at x = 0 and 1
/// (u = c^(-1/2) returns to its start value with zero slope, and the travel
/// time maps back to unit length); the eigenvalues alone barely see q near
/// y = 0, while the speed integrates it. Errors: propagated with the
/// stage named; consistency (refined travel time differs from the
/// preliminary estimate by more than 2%).
SpeedReconstruction recover_speed_pipeline(const BoundaryTrace& trace, double c0, const InversionSettings& settings,
                                           const SpeedPipelineOptions& options = {});

struct WaveInversionOptions {
    double relative_tolerance = 1e-3;
    std::size_t max_iterations = 300;
    WaveRunOptions run;
};

struct WaveDataReconstruction {
    Profile f = Profile::constant({0.0, 1.0}, 4, 0.0);
    double relative_misfit = 0.0;
    std::size_t iterations = 0;
    std::vector<double> misfit_history;
};

/// Least squares for f on the grid of [0, 1] against the Dirichlet trace by
/// CGLS with the exact discrete adjoint; f is zero at 0 and 1 at every step.
/// Stops at the tolerance, at the iteration cap, or when the misfit stalls.
/// Errors: optimization (stalled above 10x the tolerance), validation.
WaveDataReconstruction recover_wave_initial_data(const Profile& c, const BoundaryTrace& trace,
                                                 const WaveInversionOptions& options = {});

struct HeatDataReconstruction {
    Profile g = Profile::constant({0.0, 1.0}, 4, 0.0);
    Profile h = Profile::constant({0.0, 1.0}, 4, 0.0);  // gauged data
    std::vector<std::size_t> used;     // indices of modes used
    std::vector<std::size_t> skipped;  // indices of low-confidence modes (0 if unmatched)
    double truncation_estimate = 0.0;
};

/// h = sum (a_k / phi_k'(1)) phi_k over confident modes, g = inverse gauge of
/// h. A mode's index is its stored index or, if unset, the nearest
/// eigenvalue of V. Errors: data (no usable modes), matching (a mode is not
/// within 1e-4 of any eigenvalue of V).
HeatDataReconstruction recover_heat_initial_data(const Profile& V, const ModeSet& modes, const Profile& b,
                                                 double confidence_threshold = 0.5);

struct HeatPipelineOptions {
    std::size_t extract_modes = 12;
    double confidence_threshold = 0.5;
    /// B-splines for h on [0, epsilon] in the support-constrained fit.
    std::size_t data_basis = 6;
    /// Eigenpairs of the reconstructed V used to model the flux.
    std::size_t model_modes = 60;
    /// Tikhonov weight for h is raised until the sample misfit reaches this
    /// multiple of the unregularized misfit.
    double discrepancy_factor = 2.0;

    std::size_t grid_size = 1025;
};

struct HeatPipelineResult {
    Profile b = Profile::constant({0.0, 1.0}, 4, 0.0);
    Profile g = Profile::constant({0.0, 1.0}, 4, 0.0);
    Profile V = Profile::constant({0.0, 1.0}, 4, 0.0);
    ExponentialFit extraction;
    PotentialReconstruction inversion;
    DensityReport density;
    double observed_fraction = 0.0;
    bool information_deficit = false;
    std::string warning;
    double data_misfit = 0.0;
};

/// Flux samples + b on [1/2 - eps, 1] -> decay rates -> V on [0, 1/2 - eps]
/// -> b by backward Riccati from b_known(1) -> g supported in [0, eps] by
/// least squares against the samples through the modal model of the
/// recovered V. Diagnostics include the density audit and the observed
/// fraction; a fraction below (1 - 2 eps) N + eps sets the warning. When b
/// is known on all of [0, 1] the inversion is skipped and g comes from the
/// modal synthesis of recover_heat_initial_data (no support assumption).
HeatPipelineResult invert_heat_pipeline(const BoundaryTrace& samples, const Profile& b_known, double epsilon,
                                        const InversionSettings& settings, const HeatPipelineOptions& options = {});

}  // namespace passive
