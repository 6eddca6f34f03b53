#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "passive/core_types.hpp"

namespace passive {

struct CosineTransform {
    std::vector<double> values;
    /// Bound on the omitted tail beyond the end of the record,
    /// 2 |envelope(T)| / kappa from the decay estimate.
    double truncation_bound = 0.0;
};

/// 2 * integral_0^T trace(t) cos(xi t) dt (Gregory-corrected trapezoid),
/// i.e. the Fourier transform of the even extension in time.
/// Errors: applicability (no decay estimate, or the last quarter of the
/// record still carries more than 5% of the peak), domain (xi < 0).
CosineTransform cosine_transform_trace(const BoundaryTrace& trace, std::span<const double> xi);

/// Same integral with sin(xi t).
std::vector<double> sine_transform_trace(const BoundaryTrace& trace, std::span<const double> xi);

struct ExtendedSpectrum {
    /// Eigenvalues xi_k^2 of -d_y^2 + q on (0, 2L), q = 0 on (L, 2L), with
    /// index k and confidence; amplitude holds |W(xi_k)| (see below).
    ModeSet modes;
    std::size_t requested = 0;
    std::size_t confident = 0;
    double confidence_threshold = 0.5;
    bool partial() const noexcept { return confident < requested; }
};

/// Zeros of D(xi) = u^(xi) cos(xi L) + (c0/xi) N^(xi) sin(xi L), where u^ and
/// N^ are the cosine transforms of the Dirichlet trace and of its Neumann
/// trace. D = a(xi) * v(xi, 2L) with an unknown factor a; zeros are located
/// on D divided by |W|, W = (u^, c0 N^ / xi), with the sign carried across
/// zeros of a so only the v(2L) zeros remain. Confidence of a zero is |W|
/// there over the mean of |W| half a zero spacing to either side (capped at
/// 1); it falls towards zero when a vanishes next to the root.
///
/// The scan stops after K zeros or at the Nyquist-limited range; fewer than
/// K confident zeros leaves `partial()` set. Errors: domain (L <= 0 or
/// c0 <= 0), applicability (as for the cosine transform).
ExtendedSpectrum extended_interval_spectrum(const BoundaryTrace& dirichlet, double c0, double L,
                                            std::size_t K, double confidence_threshold = 0.5);

/// Zeros of the cosine transform u^(xi) = a(xi) v(xi, L) with the sign carried
/// across zeros of a as above: the Dirichlet spectrum of -c^2 d_x^2 on (0,1)
/// (xi_k ~ k pi / L), used for a first travel-time estimate. Scans a grid of
/// step `xi_step` until K zeros are found or the Nyquist-limited range ends.
ModeSet cosine_transform_zeros(const BoundaryTrace& trace, double c0, std::size_t K, double xi_step);

/// Least-squares fit through the origin of sqrt(lambda_k) ~ k pi / (m L) over
/// the upper half of the modes; returns L. Errors: validation (fewer than 5
/// modes, non-increasing lambdas).
double travel_time_from_spectrum(const ModeSet& modes, double interval_multiplier);

struct ExponentialFit {
    /// Decay rates lambda (increasing) with amplitudes a:
    /// trace(t) ~ sum a_k exp(-lambda_k t).
    ModeSet modes;
    std::size_t requested = 0;
    /// Numerical rank of the Hankel matrix.
    std::size_t rank = 0;
    bool rank_limited() const noexcept { return rank < requested; }
    /// |fit - trace|_2 / |trace|_2.
    double residual = 0.0;
    std::vector<double> singular_values;
};

/// Matrix pencil (pencil parameter N/2) followed by Levenberg-Marquardt on
/// (lambda, a) jointly. The rank is the number of singular values above
/// 100x the noise floor (median of the lower half) and 1e-13 of the largest.
/// Confidence is 1 / (1 + (s_k / (1e-4 lambda_k))^2), s_k the larger of the
/// residual-based standard deviation of lambda_k and its distance to the
/// nearest rate fitted on the even or the odd samples alone.
/// Errors: data (fewer than 4 samples or a zero trace), validation (K = 0).
ExponentialFit fit_exponential_modes(const BoundaryTrace& trace, std::size_t K);

inline constexpr double matching_tolerance = 1e-4;

struct DensityReport {
    SpectrumCounts counts;
    double epsilon = 0.0;
    /// d(lambda)/sqrt(lambda) maximized over thresholds.
    double max_vanishing_density = 0.0;
    double bound() const noexcept;
};

/// Matches each observed mode to the nearest reference eigenvalue within
/// relative tolerance 1e-4 and counts N, S, d at every reference eigenvalue.
/// Unmatched observed modes are ignored. Errors: matching (two observed modes
/// claim the same reference eigenvalue).
DensityReport mode_density_report(const ModeSet& observed, const ModeSet& reference, double epsilon);

}  // namespace passive
