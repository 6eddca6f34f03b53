#include "passive/liouville_transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>


#include "ode.hpp"
#include "passive/numerics.hpp"

namespace passive {

using detail::stepper;
namespace odeint = detail::odeint;
template <std::size_t N>
using State = detail::OdeState<N>;

namespace {

constexpr double ode_tol = 1e-12;
constexpr double riccati_blowup = 1e6;

struct BlowUp {
    double where;
};

}  // namespace

PotentialFromSpeed speed_to_potential(const Profile& c, double c0, std::size_t y_count)
{
    if (!(c.min_value() > 0.0)) throw Error(ErrorKind::positivity, "speed must stay positive");
    if (!(c0 > 0.0)) throw Error(ErrorKind::positivity, "background speed must be positive");
    if (c.size() < 8) throw Error(ErrorKind::resolution, "speed needs at least 8 samples").with_limit(8);
    const std::size_t m = y_count == 0 ? c.size() : y_count;
    const std::size_t n = c.size();

    const auto d1 = derivative(c, 1);
    const auto d2 = derivative(c, 2);
    std::vector<double> qx(n), slowness(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double cv = c.sample(i);
        qx[i] = 0.25 * d1.sample(i) * d1.sample(i) - 0.5 * cv * d2.sample(i);
        slowness[i] = 1.0 / cv;
    }
    const Profile qx_profile(c.interval(), qx, ProfileKind::potential);
    auto y = numerics::cumulative_integral(slowness, c.spacing());
    const double L = y.back();
    const Profile forward(c.interval(), y, ProfileKind::auxiliary);

    // invert y(x) on the uniform y grid: table bracket, then Newton with y' = 1/c
    const auto ys = numerics::linspace(0.0, L, m);
    std::vector<double> xs(m), q(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double target = ys[j];
        const auto it = std::lower_bound(y.begin(), y.end(), target);
        const std::size_t hi = std::clamp<std::size_t>(std::size_t(it - y.begin()), 1, n - 1);
        const double ya = y[hi - 1], yb = y[hi];
        double x = c.node(hi - 1) + (yb > ya ? (target - ya) / (yb - ya) : 0.0) * c.spacing();
        for (int it2 = 0; it2 < 8; ++it2) {
            const double step = (forward(x) - target) * c(x);
            x = std::clamp(x - step, c.left(), c.right());
            if (std::abs(step) < 1e-15) break;
        }
        xs[j] = x;
    }
    xs.front() = c.left();
    xs.back() = c.right();
    for (std::size_t j = 0; j < m; ++j) q[j] = qx_profile(xs[j]);

    Interval yi{0.0, L};
    return {Profile(yi, std::move(q), ProfileKind::potential),
            TravelTimeMap{forward, Profile(yi, std::move(xs), ProfileKind::auxiliary), L}};
}

Profile potential_to_speed(const Profile& q, double c0, std::size_t x_count)
{
    if (!(c0 > 0.0)) throw Error(ErrorKind::positivity, "background speed must be positive");
    const std::size_t n = x_count == 0 ? q.size() : x_count;
    const double u0 = 1.0 / std::sqrt(c0);
    auto qy = [&](double y) { return q(std::clamp(y, q.left(), q.right())); };

    // pass 1 in y: (u, u', x) with x' = u^{-2}
    std::array<double, 3> s{u0, 0.0, 0.0};
    auto rhs_y = [&](const std::array<double, 3>& v, std::array<double, 3>& dv, double y) {
        if (!(v[0] > 0.0)) throw BlowUp{y};
        dv[0] = v[1];
        dv[1] = qy(y) * v[0];
        dv[2] = 1.0 / (v[0] * v[0]);
    };
    try {
        const auto grid = q.nodes();
        odeint::integrate_times(stepper<3>(), rhs_y, s, grid.begin(), grid.end(), q.spacing(),
                                [](const std::array<double, 3>& v, double y) {
                                    if (!(v[0] > 0.0)) throw BlowUp{y};
                                });
    } catch (const BlowUp& b) {
        throw Error(ErrorKind::reconstruction, "potential does not arise from a positive speed (u reached zero)")
            .with_location(b.where);
    }
    const double X = s[2];

    // pass 2 in x: (u, du/dy, y) with dy/dx = u^2
    std::array<double, 3> w{u0, 0.0, 0.0};
    auto rhs_x = [&](const std::array<double, 3>& v, std::array<double, 3>& dv, double) {
        const double u2 = v[0] * v[0];
        dv[0] = v[1] * u2;
        dv[1] = qy(v[2]) * v[0] * u2;
        dv[2] = u2;
    };
    const auto xs = numerics::linspace(0.0, X, n);
    std::vector<double> c(n);
    std::size_t idx = 0;
    odeint::integrate_times(stepper<3>(), rhs_x, w, xs.begin(), xs.end(), X / double(n - 1),
                            [&](const std::array<double, 3>& v, double) { c[idx++] = 1.0 / (v[0] * v[0]); });
    c.front() = c0;
    return Profile({0.0, X}, std::move(c), ProfileKind::speed);
}

Profile convection_to_potential(const Profile& b)
{
    if (b.size() < 8) throw Error(ErrorKind::resolution, "convection needs at least 8 samples").with_limit(8);
    const auto d = derivative(b, 1);
    std::vector<double> v(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) v[i] = -0.5 * d.sample(i) + 0.25 * b.sample(i) * b.sample(i);
    return Profile(b.interval(), std::move(v), ProfileKind::potential);
}

Profile recover_convection(const Profile& V, double b_right)
{
    const std::size_t n = V.size();
    auto xs = V.nodes();
    std::reverse(xs.begin(), xs.end());
    std::array<double, 1> s{b_right};
    std::vector<double> b(n);
    std::size_t idx = n;
    auto rhs = [&](const std::array<double, 1>& v, std::array<double, 1>& dv, double x) {
        if (!(std::abs(v[0]) <= riccati_blowup)) throw BlowUp{x};
        dv[0] = 0.5 * v[0] * v[0] - 2.0 * V(x);
    };
    try {
        odeint::integrate_times(stepper<1>(), rhs, s, xs.begin(), xs.end(), -V.spacing(),
                                [&](const std::array<double, 1>& v, double x) {
                                    if (!(std::abs(v[0]) <= riccati_blowup)) throw BlowUp{x};
                                    b[--idx] = v[0];
                                });
    } catch (const BlowUp& e) {
        throw Error(ErrorKind::reconstruction, "Riccati solution blew up").with_location(e.where);
    }
    return Profile(V.interval(), std::move(b), ProfileKind::convection);
}

Profile gauge_initial_data(const Profile& g, const Profile& b, GaugeDirection direction)
{
    if (std::abs(g.left() - b.left()) > 1e-12 || std::abs(g.right() - b.right()) > 1e-12)
        throw Error(ErrorKind::domain, "gauge needs matching intervals");
    std::vector<double> bs(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) bs[i] = b(g.node(i));
    const auto B = numerics::cumulative_integral(bs, g.spacing());
    const double sign = direction == GaugeDirection::forward ? -0.5 : 0.5;
    std::vector<double> h(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) h[i] = std::exp(sign * (B[i] - B.back())) * g.sample(i);
    return Profile(g.interval(), std::move(h), g.kind());
}

}  // namespace passive
