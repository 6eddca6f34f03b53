#pragma once

#include <cstddef>
#include <vector>

#include "passive/core_types.hpp"

namespace passive {

/// Value and slope at the right end of a solution started with value 0 and
/// slope 1 at the left end.
struct EndpointData {
    double value = 0.0;
    double slope = 0.0;
};

struct EigenPair {
    std::size_t index = 0;
    double lambda = 0.0;
    Profile eigenfunction;  // L2-normalized, positive slope at the left end
    double left_slope = 0.0;
    double right_slope = 0.0;
};

/// Project-wide eigen tolerance: |psi(L)| < tol * (1 + |psi'(L)|).
inline constexpr double eigen_tolerance = 1e-8;

/// Largest exponent sqrt(max q - lambda) * L the shooting integrator accepts
/// before reporting a range error (solutions grow like e^600 ~ 1e260).
inline constexpr double shoot_growth_limit = 600.0;

/// Solution of -psi'' + q psi = lambda psi with psi(left)=0, psi'(left)=1,
/// evaluated at the right end (adaptive Runge-Kutta-Fehlberg 7(8)).
/// Throws a range error when lambda is so far below q that the solution
/// would overflow.
EndpointData shoot(const Profile& q, double lambda);

/// As `shoot`, also returning d psi(L) / d lambda from the variational equation.
struct ShootSensitivity {
    EndpointData end;
    double dvalue_dlambda = 0.0;
};
ShootSensitivity shoot_with_sensitivity(const Profile& q, double lambda);

/// Number of eigenvalues the grid of q resolves: (size - 1) / 2.
std::size_t max_reliable_count(const Profile& q);

/// First K Dirichlet eigenvalues of -d^2 + q on the interval of q. Each is
/// bracketed by comparison with constant potentials, located by root finding
/// on the Prufer angle (theta(L) = k pi) and polished by Newton on psi(L).
/// Throws a resolution error (with limit) when K exceeds max_reliable_count.
ModeSet dirichlet_eigenvalues(const Profile& q, std::size_t K);

/// Single eigenvalue with 1-based index k.
double dirichlet_eigenvalue(const Profile& q, std::size_t k);

/// Normalized eigenfunction for an eigenvalue of q. The index is read off the
/// Prufer angle. Throws a spectral error when lambda is not an eigenvalue.
EigenPair dirichlet_eigenfunction(const Profile& q, double lambda);

/// First K eigenpairs.
std::vector<EigenPair> dirichlet_eigenpairs(const Profile& q, std::size_t K);

/// d lambda_k / d q(x) = phi_k(x)^2, sampled on the eigenfunction grid.
Profile eigenvalue_sensitivity(const Profile& q, const EigenPair& pair);

/// Solution of -c^2 v'' = xi^2 v on the interval of c with v(left)=0,
/// v'(left)=1, evaluated at the right end. Smooth in xi including xi = 0.
EndpointData frozen_wave_solution(const Profile& c, double xi);

/// First K Dirichlet eigenvalues mu of -c^2 d^2 on the interval of c
/// (weighted Prufer angle in the original coordinate).
ModeSet weighted_dirichlet_eigenvalues(const Profile& c, std::size_t K);

/// Number of sign changes among interior samples.
std::size_t interior_sign_changes(const Profile& p);

}  // namespace passive
