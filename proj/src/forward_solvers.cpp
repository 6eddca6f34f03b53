#include "passive/forward_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "passive/liouville_transform.hpp"
#include "passive/numerics.hpp"
#include "passive/sturm_liouville.hpp"

namespace passive {

namespace {

constexpr double support_tol = 1e-10;

void check_wave_inputs(const Profile& c, const Profile& f, double c0)
{
    if (std::abs(c.left()) > 1e-12 || std::abs(c.right() - 1.0) > 1e-12)
        throw Error(ErrorKind::validation, "speed must be given on [0,1]");
    if (std::abs(c.sample(0) - c0) > support_tol || std::abs(c.samples().back() - c0) > support_tol)
        throw Error(ErrorKind::validation, "c_cond violated: speed must equal c0 outside (0,1)");
    if (!(c.min_value() > 0.0)) throw Error(ErrorKind::positivity, "speed must be positive");
    if (std::abs(f.left()) > 1e-12 || std::abs(f.right() - 1.0) > 1e-12)
        throw Error(ErrorKind::validation, "initial data must be given on [0,1]");
    if (std::abs(f.sample(0)) > support_tol || std::abs(f.samples().back()) > support_tol)
        throw Error(ErrorKind::validation, "F_supp violated: initial data must vanish at 0 and 1");
}

std::vector<double> sample_on_unit_grid(const Profile& f, std::size_t receiver)
{
    std::vector<double> out(receiver + 1);
    for (std::size_t i = 0; i <= receiver; ++i) out[i] = f(double(i) / double(receiver));
    out.front() = out.back() = 0.0;
    return out;
}

// One leapfrog update into `next`; prev may alias nothing.
void leapfrog(const WaveGrid& g, const std::vector<double>& prev, const std::vector<double>& cur,
              std::vector<double>& next)
{
    const std::size_t N = g.nodes - 1;
    next[0] = 0.0;
    for (std::size_t i = 1; i < N; ++i)
        next[i] = 2.0 * cur[i] - prev[i] + g.sigma2[i] * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]);
    next[N] = g.transparent ? cur[N - 1] + g.mur * (next[N - 1] - cur[N]) : 0.0;
}

void first_step(const WaveGrid& g, const std::vector<double>& u0, std::vector<double>& u1)
{
    const std::size_t N = g.nodes - 1;
    u1[0] = 0.0;
    for (std::size_t i = 1; i < N; ++i) u1[i] = u0[i] + 0.5 * g.sigma2[i] * (u0[i + 1] - 2.0 * u0[i] + u0[i - 1]);
    u1[N] = g.transparent ? u0[N - 1] + g.mur * (u1[N - 1] - u0[N]) : 0.0;
}

}  // namespace

WaveGrid make_wave_grid(const Profile& c, const WaveRunOptions& opts)
{
    if (!(opts.cfl > 0.0 && opts.cfl < 1.0)) throw Error(ErrorKind::stability, "CFL factor must lie in (0,1)");
    if (!(opts.t_max > 0.0)) throw Error(ErrorKind::validation, "t_max must be positive");
    if (opts.nodes_per_unit < 8) throw Error(ErrorKind::resolution, "wave grid needs at least 8 intervals per unit");
    if (!(opts.margin > 0.0) || opts.pad_factor < 0.0)
        throw Error(ErrorKind::validation, "margin must be positive and pad_factor non-negative");
    WaveGrid g;
    g.c0 = opts.c0;
    g.receiver = opts.nodes_per_unit;
    g.dx = 1.0 / double(g.receiver);
    g.transparent = opts.boundary == WaveBoundary::transparent;
    double extra = opts.margin;
    if (!g.transparent) extra += opts.pad_factor * opts.c0 * opts.t_max / 2.0;
    const auto outer = std::size_t(std::ceil(extra / g.dx));
    g.nodes = g.receiver + std::max<std::size_t>(outer, 3) + 1;

    std::vector<double> speed(g.nodes, opts.c0);
    for (std::size_t i = 0; i <= g.receiver; ++i) speed[i] = c(double(i) * g.dx);
    const double cmax = *std::max_element(speed.begin(), speed.end());
    g.steps = std::size_t(std::ceil(opts.t_max / (opts.cfl * g.dx / cmax)));
    g.dt = opts.t_max / double(g.steps);
    g.sigma2.resize(g.nodes);
    for (std::size_t i = 0; i < g.nodes; ++i) g.sigma2[i] = std::pow(speed[i] * g.dt / g.dx, 2);
    if (*std::max_element(g.sigma2.begin(), g.sigma2.end()) >= 1.0)
        throw Error(ErrorKind::stability, "CFL condition violated");
    g.mur = (opts.c0 * g.dt - g.dx) / (opts.c0 * g.dt + g.dx);
    return g;
}

std::vector<double> wave_forward_trace(const WaveGrid& g, std::span<const double> f_nodes)
{
    if (f_nodes.size() != g.receiver + 1) throw Error(ErrorKind::validation, "initial data size mismatch");
    std::vector<double> prev(g.nodes, 0.0), cur(g.nodes, 0.0), next(g.nodes, 0.0);
    std::copy(f_nodes.begin(), f_nodes.end(), prev.begin());
    prev[0] = prev[g.receiver] = 0.0;
    std::vector<double> trace(g.steps + 1);
    trace[0] = prev[g.receiver];
    first_step(g, prev, cur);
    trace[1] = cur[g.receiver];
    for (std::size_t n = 1; n < g.steps; ++n) {
        leapfrog(g, prev, cur, next);
        trace[n + 1] = next[g.receiver];
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return trace;
}

std::vector<double> wave_adjoint(const WaveGrid& g, std::span<const double> residual)
{
    if (residual.size() != g.steps + 1) throw Error(ErrorKind::validation, "residual length mismatch");
    const std::size_t N = g.nodes - 1, R = g.receiver;
    // a_next = adjoint of u^{n+1}, a_cur = u^n, a_prev = u^{n-1}
    std::vector<double> a_next(g.nodes, 0.0), a_cur(g.nodes, 0.0), a_prev(g.nodes, 0.0);
    a_next[R] += residual[g.steps];
    a_cur[R] += residual[g.steps - 1];
    for (std::size_t n = g.steps - 1; n >= 1; --n) {
        // step producing u^{n+1} from u^n and u^{n-1}
        a_prev.assign(g.nodes, 0.0);
        a_prev[R] += residual[n - 1];
        if (g.transparent) {
            const double a = a_next[N];
            a_cur[N - 1] += a;
            a_next[N - 1] += g.mur * a;
            a_cur[N] -= g.mur * a;
        }
        for (std::size_t i = 1; i < N; ++i) {
            const double a = a_next[i];
            if (a == 0.0) continue;
            const double s = g.sigma2[i];
            a_cur[i] += (2.0 - 2.0 * s) * a;
            a_cur[i - 1] += s * a;
            a_cur[i + 1] += s * a;
            a_prev[i] -= a;
        }
        std::swap(a_next, a_cur);
        std::swap(a_cur, a_prev);
    }
    // now a_next is the adjoint of u^1 and a_cur that of u^0
    if (g.transparent) {
        const double a = a_next[N];
        a_cur[N - 1] += a;
        a_next[N - 1] += g.mur * a;
        a_cur[N] -= g.mur * a;
    }
    for (std::size_t i = 1; i < N; ++i) {
        const double a = a_next[i];
        const double s = g.sigma2[i];
        a_cur[i] += (1.0 - s) * a;
        a_cur[i - 1] += 0.5 * s * a;
        a_cur[i + 1] += 0.5 * s * a;
    }
    std::vector<double> grad(a_cur.begin(), a_cur.begin() + std::ptrdiff_t(R + 1));
    grad.front() = grad.back() = 0.0;
    return grad;
}

WaveRunDetail solve_wave_detailed(const Profile& c, const Profile& f, const WaveRunOptions& opts)
{
    check_wave_inputs(c, f, opts.c0);
    const auto g = make_wave_grid(c, opts);
    const std::size_t R = g.receiver, N = g.nodes - 1;
    std::vector<double> prev(g.nodes, 0.0), cur(g.nodes, 0.0), next(g.nodes, 0.0);
    const auto f0 = sample_on_unit_grid(f, R);
    std::copy(f0.begin(), f0.end(), prev.begin());

    std::vector<double> inv_c2(g.nodes);
    for (std::size_t i = 0; i < g.nodes; ++i) inv_c2[i] = g.dt * g.dt / (g.sigma2[i] * g.dx * g.dx);

    auto dxu = [&](const std::vector<double>& u) {
        return (-u[R + 2] + 8.0 * u[R + 1] - 8.0 * u[R - 1] + u[R - 2]) / (12.0 * g.dx);
    };
    auto energy = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double e = 0.0;
        for (std::size_t i = 1; i < N; ++i) e += std::pow((b[i] - a[i]) / g.dt, 2) * inv_c2[i];
        for (std::size_t i = 0; i < N; ++i) e += (b[i + 1] - b[i]) * (a[i + 1] - a[i]) / (g.dx * g.dx);
        return e * g.dx;
    };

    std::vector<double> trace(g.steps + 1), dtrace(g.steps + 1), en;
    en.reserve(g.steps);
    trace[0] = prev[R];
    dtrace[0] = dxu(prev);
    first_step(g, prev, cur);
    trace[1] = cur[R];
    dtrace[1] = dxu(cur);
    en.push_back(energy(prev, cur));
    for (std::size_t n = 1; n < g.steps; ++n) {
        leapfrog(g, prev, cur, next);
        trace[n + 1] = next[R];
        dtrace[n + 1] = dxu(next);
        en.push_back(energy(cur, next));
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return WaveRunDetail{BoundaryTrace(0.0, g.dt, std::move(trace), TraceFlavor::dirichlet), std::move(dtrace),
                         std::move(en), g};
}

BoundaryTrace solve_wave(const Profile& c, const Profile& f, const WaveRunOptions& opts)
{
    check_wave_inputs(c, f, opts.c0);
    const auto g = make_wave_grid(c, opts);
    auto trace = wave_forward_trace(g, sample_on_unit_grid(f, g.receiver));
    return BoundaryTrace(0.0, g.dt, std::move(trace), TraceFlavor::dirichlet);
}

BoundaryTrace neumann_trace_from_dirichlet(const BoundaryTrace& trace, double c0)
{
    if (trace.flavor() != TraceFlavor::dirichlet) throw Error(ErrorKind::validation, "expected a Dirichlet trace");
    if (!(c0 > 0.0)) throw Error(ErrorKind::positivity, "background speed must be positive");
    const std::size_t n = trace.size();
    constexpr std::size_t width = 5;
    if (n < width) throw Error(ErrorKind::resolution, "trace too short for the time stencil").with_limit(width);
    std::vector<std::vector<double>> table(width);
    const double pts[width] = {0, 1, 2, 3, 4};
    for (std::size_t off = 0; off < width; ++off) table[off] = numerics::fd_weights(pts, double(off), 1);
    const auto v = trace.values();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(i) - 2, 0, std::ptrdiff_t(n - width));
        const auto& w = table[i - start];
        double acc = 0.0;
        for (std::size_t j = 0; j < width; ++j) acc += w[j] * v[start + j];
        out[i] = -acc / (trace.dt() * c0);
    }
    return BoundaryTrace(trace.t0(), trace.dt(), std::move(out), TraceFlavor::neumann);
}

// ---------------------------------------------------------------------------
// heat

HeatRunOptions HeatRunOptions::uniform(double t_first, double t_last, std::size_t count)
{
    HeatRunOptions o;
    o.times = numerics::linspace(t_first, t_last, count);
    return o;
}

namespace {

struct UniformTimes {
    double t0;
    double dt;
};

UniformTimes check_times(const std::vector<double>& t)
{
    if (t.size() < 2) throw Error(ErrorKind::validation, "heat run needs at least two sample times");
    if (!(t.front() > 0.0)) throw Error(ErrorKind::validation, "sample times must be positive");
    const double dt = (t.back() - t.front()) / double(t.size() - 1);
    if (!(dt > 0.0)) throw Error(ErrorKind::validation, "sample times must increase");
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - (t.front() + dt * double(i))) > 1e-9 * (1.0 + t.back()))
            throw Error(ErrorKind::validation, "sample times must be uniformly spaced");
    return {t.front(), dt};
}

void check_heat_inputs(const Profile& b, const Profile& g)
{
    if (std::abs(b.left()) > 1e-12 || std::abs(b.right() - 1) > 1e-12 || std::abs(g.left()) > 1e-12 ||
        std::abs(g.right() - 1) > 1e-12)
        throw Error(ErrorKind::validation, "heat coefficients must be given on [0,1]");
    if (std::abs(g.sample(0)) > support_tol || std::abs(g.samples().back()) > support_tol)
        throw Error(ErrorKind::validation, "initial data must vanish at both ends");
}

// Thomas solve of a tridiagonal system; sub[0] and sup[n-1] are unused.
void thomas(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup, std::vector<double>& rhs)
{
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace

HeatModalResult solve_heat_modal(const Profile& b, const Profile& g, const HeatRunOptions& opts)
{
    check_heat_inputs(b, g);
    const auto [t0, dt] = check_times(opts.times);
    const std::size_t K = opts.mode_count;
    if (K == 0) throw Error(ErrorKind::validation, "mode count must be at least 1");

    const std::size_t nv = std::max(b.size(), 4 * K + 1);
    const auto bv = b.size() == nv ? b : b.resampled(nv);
    const auto V = convection_to_potential(bv);
    const auto h = gauge_initial_data(g, b, GaugeDirection::forward);
    const auto pairs = dirichlet_eigenpairs(V, K);

    // quadrature grid: the finer of the data grid and the eigenfunction grid
    const std::size_t nq = std::max(h.size(), pairs.back().eigenfunction.size());
    const auto hq = h.size() == nq ? h : h.resampled(nq);
    std::vector<double> coef(K), prod(nq);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& phi = pairs[k].eigenfunction;
        for (std::size_t i = 0; i < nq; ++i) prod[i] = hq.sample(i) * phi(hq.node(i));
        coef[k] = numerics::simpson(prod, hq.spacing());
    }
    std::vector<double> values(opts.times.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double t = opts.times[j];
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += coef[k] * std::exp(-pairs[k].lambda * t) * pairs[k].right_slope;
        values[j] = s;
    }

    // omitted modes: |coef| <= |h|, |phi'(1)| ~ sqrt(2 lambda), lambda_k ~ lambda_K + (k^2 - K^2) pi^2
    const double hn = l2_norm(h);
    const double lamK = pairs.back().lambda;
    double tail = 0.0;
    for (std::size_t k = K + 1; k <= K + 2000; ++k) {
        const double lam = lamK + (double(k * k) - double(K * K)) * std::numbers::pi * std::numbers::pi;
        tail += hn * 1.5 * std::sqrt(2.0 * std::max(lam, 1.0)) * std::exp(-lam * t0);
    }
    return {BoundaryTrace(t0, dt, std::move(values), TraceFlavor::neumann), tail};
}

BoundaryTrace solve_heat_fd(const Profile& b, const Profile& g, const HeatRunOptions& opts)
{
    check_heat_inputs(b, g);
    const auto [t0, dt_s] = check_times(opts.times);
    const std::size_t n = opts.fd_resolution;
    if (n < 9) throw Error(ErrorKind::resolution, "heat grid needs at least 9 nodes").with_limit(9);
    if (!(opts.fd_dt > 0.0)) throw Error(ErrorKind::validation, "heat time step must be positive");
    const double h = 1.0 / double(n - 1);
    const std::size_t m = n - 2;  // interior unknowns

    std::vector<double> lo(m), di(m), up(m), u(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double x = h * double(i + 1);
        const double bx = b(x);
        lo[i] = 1.0 / (h * h) + bx / (2.0 * h);
        di[i] = -2.0 / (h * h);
        up[i] = 1.0 / (h * h) - bx / (2.0 * h);
        u[i] = g(x);
    }

    // theta = 1: backward Euler, theta = 1/2: Crank-Nicolson
    auto step = [&](double dt, double theta) {
        std::vector<double> rhs(m);
        const double e = (1.0 - theta) * dt;
        for (std::size_t i = 0; i < m; ++i) {
            double lu = di[i] * u[i];
            if (i > 0) lu += lo[i] * u[i - 1];
            if (i + 1 < m) lu += up[i] * u[i + 1];
            rhs[i] = u[i] + e * lu;
        }
        std::vector<double> a(m), d(m), c(m);
        for (std::size_t i = 0; i < m; ++i) {
            a[i] = -theta * dt * lo[i];
            d[i] = 1.0 - theta * dt * di[i];
            c[i] = -theta * dt * up[i];
        }
        thomas(std::move(a), std::move(d), std::move(c), rhs);
        u.swap(rhs);
    };
    auto flux = [&]() {
        // u at x = 1 is zero; one-sided fourth-order stencil
        return (48.0 * -u[m - 1] + 36.0 * u[m - 2] - 16.0 * u[m - 3] + 3.0 * u[m - 4]) / (12.0 * h);
    };

    std::vector<double> values(opts.times.size());
    // first segment with Rannacher start-up (four backward-Euler half steps)
    {
        const std::size_t steps = std::max<std::size_t>(2, std::size_t(std::ceil(t0 / opts.fd_dt)));
        const double dt = t0 / double(steps);
        for (int i = 0; i < 4; ++i) step(0.5 * dt, 1.0);
        for (std::size_t s = 2; s < steps; ++s) step(dt, 0.5);
        values[0] = flux();
    }
    const std::size_t per = std::max<std::size_t>(1, std::size_t(std::ceil(dt_s / opts.fd_dt)));
    const double dt = dt_s / double(per);
    for (std::size_t j = 1; j < values.size(); ++j) {
        for (std::size_t s = 0; s < per; ++s) step(dt, 0.5);
        values[j] = flux();
    }
    return BoundaryTrace(t0, dt_s, std::move(values), TraceFlavor::neumann);
}

// ---------------------------------------------------------------------------
// noise

namespace {
std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits)
{
    return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}
}  // namespace

double normal_variate(std::uint64_t seed, std::uint64_t counter)
{
    const std::uint64_t key = splitmix64(seed);
    const double u1 = unit_open(splitmix64(key ^ (2 * counter)));
    const double u2 = unit_open(splitmix64(key ^ (2 * counter + 1)));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

BoundaryTrace with_noise(const BoundaryTrace& trace, double amplitude, std::uint64_t seed)
{
    if (amplitude < 0.0) throw Error(ErrorKind::validation, "noise amplitude must be non-negative");
    const double sd = amplitude * trace.max_abs();
    std::vector<double> v(trace.values().begin(), trace.values().end());
    if (sd > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += sd * normal_variate(seed, i);
    return BoundaryTrace(trace.t0(), trace.dt(), std::move(v), trace.flavor());
}

}  // namespace passive
