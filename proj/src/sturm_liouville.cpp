#include "passive/sturm_liouville.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/tools/toms748_solve.hpp>

#include "ode.hpp"
#include "passive/numerics.hpp"

namespace passive {

using detail::stepper;
namespace odeint = detail::odeint;
template <std::size_t N>
using State = detail::OdeState<N>;

namespace {

double mean(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

void check_growth(const Profile& q, double lambda)
{
    const double excess = q.max_value() - lambda;
    if (excess > 0.0 && std::sqrt(excess) * q.length() > shoot_growth_limit)
        throw Error(ErrorKind::range, "lambda too far below the potential; shooting would overflow");
}

// Scaled Prufer angle: psi = r sin(theta), psi' = sqrt(s) r cos(theta).
double prufer_angle(const Profile& q, double lambda, double s)
{
    const double rs = std::sqrt(s);
    State<1> th{0.0};
    auto rhs = [&](const State<1>& y, State<1>& dy, double x) {
        const double sn = std::sin(y[0]), cs = std::cos(y[0]);
        dy[0] = rs * cs * cs + (lambda - q(x)) / rs * sn * sn;
    };
    odeint::integrate_adaptive(stepper<1>(), rhs, th, q.left(), q.right(), q.spacing());
    return th[0];
}

double prufer_scale(const Profile& q, double lambda)
{
    return std::max(lambda - mean(q.samples()), 1.0);
}

// Weighted form v'' = -(mu / c^2) v.
double weighted_prufer_angle(const Profile& c, double mu, double s)
{
    const double rs = std::sqrt(s);
    State<1> th{0.0};
    auto rhs = [&](const State<1>& y, State<1>& dy, double x) {
        const double sn = std::sin(y[0]), cs = std::cos(y[0]);
        const double cx = c(x);
        dy[0] = rs * cs * cs + mu / (cx * cx * rs) * sn * sn;
    };
    odeint::integrate_adaptive(stepper<1>(), rhs, th, c.left(), c.right(), c.spacing());
    return th[0];
}

// Root of a monotone increasing angle(lambda) - target inside [lo, hi],
// widening the bracket when the comparison bounds coincide.
template <class F>
double solve_angle(F&& angle, double target, double lo, double hi)
{
    auto f = [&](double lam) { return angle(lam) - target; };
    double pad = 1e-6 * (1.0 + std::abs(lo));
    double flo = f(lo), fhi = f(hi);
    for (int i = 0; i < 60 && flo > 0.0; ++i) {
        lo -= pad;
        pad *= 2.0;
        flo = f(lo);
    }
    pad = 1e-6 * (1.0 + std::abs(hi));
    for (int i = 0; i < 60 && fhi < 0.0; ++i) {
        hi += pad;
        pad *= 2.0;
        fhi = f(hi);
    }
    if (flo > 0.0 || fhi < 0.0) throw Error(ErrorKind::spectral, "failed to bracket eigenvalue");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50),
                                               iters);
    return 0.5 * (r.first + r.second);
}

// (psi, psi', d psi/d lambda, d psi'/d lambda) at the right end
State<4> variational_shoot(const Profile& q, double lambda, double tol)
{
    State<4> y{0.0, 1.0, 0.0, 0.0};
    auto rhs = [&](const State<4>& u, State<4>& du, double x) {
        const double w = q(x) - lambda;
        du[0] = u[1];
        du[1] = w * u[0];
        du[2] = u[3];
        du[3] = w * u[2] - u[0];
    };
    odeint::integrate_adaptive(stepper<4>(tol), rhs, y, q.left(), q.right(), q.spacing());
    return y;
}

// Newton on psi(L; lambda) with a tighter integration tolerance than the
// angle solve, so the result is smooth in q at the 1e-12 level.
double polish(const Profile& q, double lambda)
{
    constexpr double tight = 1e-14;
    auto y = variational_shoot(q, lambda, tight);
    for (int it = 0; it < 3; ++it) {
        if (y[2] == 0.0) break;
        const double step = -y[0] / y[2];
        if (!(std::abs(step) < 1e-8 * (1.0 + std::abs(lambda)))) break;
        const auto trial = variational_shoot(q, lambda + step, tight);
        if (std::abs(trial[0]) >= std::abs(y[0])) break;
        lambda += step;
        y = trial;
    }
    return lambda;
}

void check_count(std::size_t K, std::size_t limit)
{
    if (K == 0) throw Error(ErrorKind::domain, "eigenvalue count must be at least 1");
    if (K > limit)
        throw Error(ErrorKind::resolution, "requested eigenvalue count exceeds grid resolution").with_limit(limit);
}

}  // namespace

EndpointData shoot(const Profile& q, double lambda)
{
    check_growth(q, lambda);
    State<2> y{0.0, 1.0};
    auto rhs = [&](const State<2>& u, State<2>& du, double x) {
        du[0] = u[1];
        du[1] = (q(x) - lambda) * u[0];
    };
    odeint::integrate_adaptive(stepper<2>(), rhs, y, q.left(), q.right(), q.spacing());
    return {y[0], y[1]};
}

ShootSensitivity shoot_with_sensitivity(const Profile& q, double lambda)
{
    check_growth(q, lambda);
    const auto y = variational_shoot(q, lambda, detail::ode_tolerance);
    return {{y[0], y[1]}, y[2]};
}

std::size_t max_reliable_count(const Profile& q)
{
    return (q.size() - 1) / 2;
}

double dirichlet_eigenvalue(const Profile& q, std::size_t k)
{
    check_count(k, max_reliable_count(q));
    const double base = std::pow(double(k) * std::numbers::pi / q.length(), 2);
    const double target = double(k) * std::numbers::pi;
    auto angle = [&](double lam) {
        check_growth(q, lam);
        return prufer_angle(q, lam, prufer_scale(q, lam));
    };
    const double lam = solve_angle(angle, target, q.min_value() + base, q.max_value() + base);
    return polish(q, lam);
}

ModeSet dirichlet_eigenvalues(const Profile& q, std::size_t K)
{
    check_count(K, max_reliable_count(q));
    ModeSet out;
    out.interval_length = q.length();
    for (std::size_t k = 1; k <= K; ++k) {
        Mode m;
        m.lambda = dirichlet_eigenvalue(q, k);
        m.index = k;
        out.modes.push_back(m);
    }
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out.modes[i].lambda > out.modes[i - 1].lambda))
            throw Error(ErrorKind::spectral, "computed eigenvalues are not strictly increasing");
    return out;
}

EigenPair dirichlet_eigenfunction(const Profile& q, double lambda)
{
    const auto end = shoot(q, lambda);
    if (!(std::abs(end.value) < eigen_tolerance * (1.0 + std::abs(end.slope))))
        throw Error(ErrorKind::spectral, "lambda is not a Dirichlet eigenvalue of q");

    const double theta = prufer_angle(q, lambda, prufer_scale(q, lambda));
    const auto k = std::size_t(std::max(1.0, std::round(theta / std::numbers::pi)));

    const std::size_t n = std::max(q.size(), 32 * k + 1);
    const auto xs = numerics::linspace(q.left(), q.right(), n);
    std::vector<double> psi(n);
    std::vector<double> dpsi(n);
    // (psi, psi', int psi^2)
    State<3> y{0.0, 1.0, 0.0};
    auto rhs = [&](const State<3>& u, State<3>& du, double x) {
        du[0] = u[1];
        du[1] = (q(x) - lambda) * u[0];
        du[2] = u[0] * u[0];
    };
    std::size_t idx = 0;
    double norm2 = 0.0;
    auto observer = [&](const State<3>& u, double) {
        psi[idx] = u[0];
        dpsi[idx] = u[1];
        norm2 = u[2];
        ++idx;
    };
    odeint::integrate_times(stepper<3>(), rhs, y, xs.begin(), xs.end(), xs[1] - xs[0], observer);

    const double scale = 1.0 / std::sqrt(norm2);
    for (double& v : psi) v *= scale;
    return EigenPair{k, lambda, Profile(q.interval(), std::move(psi), ProfileKind::auxiliary), scale,
                     dpsi.back() * scale};
}

std::vector<EigenPair> dirichlet_eigenpairs(const Profile& q, std::size_t K)
{
    const auto ev = dirichlet_eigenvalues(q, K);
    std::vector<EigenPair> out;
    out.reserve(K);
    for (const auto& m : ev.modes) {
        auto p = dirichlet_eigenfunction(q, m.lambda);
        p.index = m.index;
        out.push_back(std::move(p));
    }
    return out;
}

Profile eigenvalue_sensitivity(const Profile& q, const EigenPair& pair)
{
    if (std::abs(pair.eigenfunction.left() - q.left()) > 1e-12 ||
        std::abs(pair.eigenfunction.right() - q.right()) > 1e-12)
        throw Error(ErrorKind::domain, "eigenpair does not belong to this potential's interval");
    std::vector<double> s(pair.eigenfunction.samples().begin(), pair.eigenfunction.samples().end());
    for (double& v : s) v *= v;
    return Profile(pair.eigenfunction.interval(), std::move(s), ProfileKind::auxiliary);
}

EndpointData frozen_wave_solution(const Profile& c, double xi)
{
    const double z2 = xi * xi;
    State<2> y{0.0, 1.0};
    auto rhs = [&](const State<2>& u, State<2>& du, double x) {
        const double cx = c(x);
        du[0] = u[1];
        du[1] = -z2 / (cx * cx) * u[0];
    };
    odeint::integrate_adaptive(stepper<2>(), rhs, y, c.left(), c.right(), c.spacing());
    return {y[0], y[1]};
}

ModeSet weighted_dirichlet_eigenvalues(const Profile& c, std::size_t K)
{
    check_count(K, max_reliable_count(c));
    if (!(c.min_value() > 0.0)) throw Error(ErrorKind::positivity, "weight profile must be positive");
    const double cmin = c.min_value(), cmax = c.max_value();
    const double cbar = mean(c.samples());
    ModeSet out;
    out.interval_length = c.length();
    for (std::size_t k = 1; k <= K; ++k) {
        const double w = double(k) * std::numbers::pi / c.length();
        auto angle = [&](double mu) { return weighted_prufer_angle(c, mu, std::max(mu / (cbar * cbar), 1.0)); };
        Mode m;
        m.lambda = solve_angle(angle, double(k) * std::numbers::pi, std::pow(w * cmin, 2), std::pow(w * cmax, 2));
        m.index = k;
        out.modes.push_back(m);
    }
    return out;
}

std::size_t interior_sign_changes(const Profile& p)
{
    const auto s = p.samples();
    const double tiny = 1e-10 * p.max_abs();
    std::size_t count = 0;
    int last = 0;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const int sign = s[i] > tiny ? 1 : (s[i] < -tiny ? -1 : 0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) ++count;
        last = sign;
    }
    return count;
}

}  // namespace passive
