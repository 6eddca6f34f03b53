#include "passive/spectral_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "passive/forward_solvers.hpp"
#include "passive/numerics.hpp"

namespace passive {

namespace {

constexpr double pi = std::numbers::pi;

void check_transformable(const BoundaryTrace& trace)
{
    if (std::abs(trace.t0()) > 1e-12 * trace.dt())
        throw Error(ErrorKind::validation, "time transforms need a record starting at t = 0");
    const double peak = trace.max_abs();
    if (peak == 0.0) return;
    if (!trace.decay_rate_estimate())
        throw Error(ErrorKind::applicability, "trace does not decay; the time transform would be truncated");
    const auto v = trace.values();
    double tail = 0.0;
    for (std::size_t i = v.size() - v.size() / 4; i < v.size(); ++i) tail = std::max(tail, std::abs(v[i]));
    if (tail > 0.05 * peak)
        throw Error(ErrorKind::applicability,
                    "trace still carries its main signal in the last quarter of the record (record too short)");
}

double tail_bound(const BoundaryTrace& trace)
{
    const auto kappa = trace.decay_rate_estimate();
    if (!kappa) return 0.0;
    const auto v = trace.values();
    // envelope at the end of the record
    double env = 0.0;
    for (std::size_t i = v.size() - std::max<std::size_t>(v.size() / 16, 1); i < v.size(); ++i)
        env = std::max(env, std::abs(v[i]));
    return 2.0 * env / *kappa;
}

double weighted_integral(std::span<const double> v, double dt, double xi, bool use_sine)
{
    std::vector<double> prod(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double t = dt * double(i);
        prod[i] = v[i] * (use_sine ? std::sin(xi * t) : std::cos(xi * t));
    }
    return 2.0 * numerics::gregory(prod, dt);
}

// Cosine transforms of the Dirichlet trace and its Neumann companion. The
// direction of W = (u^, c0 N^/xi) is the Prufer angle of v(xi, .) at the
// receiver; its length carries the unknown factor |a(xi)|.
struct TransformPair {
    const BoundaryTrace& dirichlet;
    BoundaryTrace neumann;
    double c0;

    Eigen::Vector2d operator()(double xi) const
    {
        const double u = weighted_integral(dirichlet.values(), dirichlet.dt(), xi, false);
        const double n = weighted_integral(neumann.values(), neumann.dt(), xi, false);
        return {u, c0 * n / xi};
    }
};

struct Scanned {
    double xi;
    Eigen::Vector2d w;
    Eigen::Vector2d e;  // sign-continued unit vector
};

// Zeros of e(xi) . n(xi) on (0, xi_max], sign carried across zeros of |W|.
template <class Direction>
ModeSet scan_zeros(const TransformPair& tp, Direction direction, double step, double xi_max, std::size_t K,
                   double window, double interval_length)
{
    std::vector<Scanned> grid;
    for (double xi = step; xi <= xi_max; xi += step) {
        const Eigen::Vector2d w = tp(xi);
        const double r = w.norm();
        Eigen::Vector2d e = r > 0.0 ? Eigen::Vector2d(w / r) : Eigen::Vector2d(1.0, 0.0);
        if (!grid.empty() && e.dot(grid.back().e) < 0.0) e = -e;
        grid.push_back({xi, w, e});
    }

    auto aligned = [&](double xi, const Eigen::Vector2d& ref) {
        const Eigen::Vector2d w = tp(xi);
        const double r = w.norm();
        Eigen::Vector2d e = r > 0.0 ? Eigen::Vector2d(w / r) : ref;
        return e.dot(ref) < 0.0 ? Eigen::Vector2d(-e) : e;
    };

    ModeSet out;
    out.interval_length = interval_length;
    for (std::size_t j = 0; j + 1 < grid.size() && out.size() < K; ++j) {
        const double fa = grid[j].e.dot(direction(grid[j].xi));
        const double fb = grid[j + 1].e.dot(direction(grid[j + 1].xi));
        if (fa == 0.0 || (fa < 0.0) == (fb < 0.0)) continue;
        double a = grid[j].xi, b = grid[j + 1].xi;
        Eigen::Vector2d ea = grid[j].e;
        double ga = fa;
        while (b - a > 1e-14 * b) {
            const double m = 0.5 * (a + b);
            const Eigen::Vector2d em = aligned(m, ea);
            const double gm = em.dot(direction(m));
            if (gm == 0.0) {
                a = b = m;
                break;
            }
            if ((gm < 0.0) == (ga < 0.0)) {
                a = m;
                ea = em;
                ga = gm;
            } else {
                b = m;
            }
        }
        const double root = 0.5 * (a + b);
        const double amp = tp(root).norm();
        const double lo = std::max(root - window, 0.5 * root);
        const double local = 0.5 * (tp(lo).norm() + tp(root + window).norm());
        Mode mode;
        mode.lambda = root * root;
        mode.amplitude = amp;
        mode.confidence = local > 0.0 ? std::min(1.0, amp / local) : 0.0;
        mode.index = out.size() + 1;
        out.modes.push_back(mode);
    }
    return out;
}

}  // namespace

CosineTransform cosine_transform_trace(const BoundaryTrace& trace, std::span<const double> xi)
{
    check_transformable(trace);
    CosineTransform out;
    out.values.reserve(xi.size());
    for (double x : xi) {
        if (x < 0.0) throw Error(ErrorKind::domain, "frequencies must be non-negative");
        out.values.push_back(weighted_integral(trace.values(), trace.dt(), x, false));
    }
    out.truncation_bound = tail_bound(trace);
    return out;
}

std::vector<double> sine_transform_trace(const BoundaryTrace& trace, std::span<const double> xi)
{
    check_transformable(trace);
    std::vector<double> out;
    out.reserve(xi.size());
    for (double x : xi) {
        if (x < 0.0) throw Error(ErrorKind::domain, "frequencies must be non-negative");
        out.push_back(weighted_integral(trace.values(), trace.dt(), x, true));
    }
    return out;
}

ExtendedSpectrum extended_interval_spectrum(const BoundaryTrace& dirichlet, double c0, double L, std::size_t K,
                                            double confidence_threshold)
{
    if (!(L > 0.0)) throw Error(ErrorKind::domain, "travel time must be positive");
    if (!(c0 > 0.0)) throw Error(ErrorKind::domain, "background speed must be positive");
    check_transformable(dirichlet);
    const TransformPair tp{dirichlet, neumann_trace_from_dirichlet(dirichlet, c0), c0};

    const double spacing = pi / (2.0 * L);
    const double nyquist = pi / (4.0 * dirichlet.dt());
    const double xi_max = std::min(nyquist, spacing * (1.25 * double(K) + 4.0));
    auto direction = [L](double xi) { return Eigen::Vector2d(std::cos(xi * L), std::sin(xi * L)); };

    ExtendedSpectrum out;
    out.requested = K;
    out.confidence_threshold = confidence_threshold;
    out.modes = scan_zeros(tp, direction, spacing / 16.0, xi_max, K, spacing / 2.0, 2.0 * L);
    out.confident = std::size_t(std::count_if(out.modes.modes.begin(), out.modes.modes.end(),
                                              [&](const Mode& m) { return m.confidence >= confidence_threshold; }));
    return out;
}

ModeSet cosine_transform_zeros(const BoundaryTrace& trace, double c0, std::size_t K, double xi_step)
{
    if (!(xi_step > 0.0)) throw Error(ErrorKind::domain, "frequency step must be positive");
    if (!(c0 > 0.0)) throw Error(ErrorKind::domain, "background speed must be positive");
    check_transformable(trace);
    const TransformPair tp{trace, neumann_trace_from_dirichlet(trace, c0), c0};
    const double nyquist = pi / (4.0 * trace.dt());
    auto direction = [](double) { return Eigen::Vector2d(1.0, 0.0); };
    // scan until K zeros are found or the Nyquist-limited range ends
    double xi_max = std::min(nyquist, 4.0 * double(K + 2) * xi_step * 8.0);
    for (;;) {
        auto zeros = scan_zeros(tp, direction, xi_step, xi_max, K, 4.0 * xi_step, 1.0);
        if (zeros.size() >= K || xi_max >= nyquist) return zeros;
        xi_max = std::min(nyquist, 2.0 * xi_max);
    }
}

double travel_time_from_spectrum(const ModeSet& modes, double interval_multiplier)
{
    if (modes.size() < 5) throw Error(ErrorKind::validation, "travel-time fit needs at least 5 modes");
    if (!(interval_multiplier > 0.0)) throw Error(ErrorKind::validation, "interval multiplier must be positive");
    for (std::size_t i = 0; i + 1 < modes.size(); ++i)
        if (!(modes.modes[i + 1].lambda > modes.modes[i].lambda))
            throw Error(ErrorKind::validation, "eigenvalues must increase");
    if (!(modes.modes.front().lambda > 0.0)) throw Error(ErrorKind::validation, "eigenvalues must be positive");
    double skk = 0.0, sks = 0.0;
    for (std::size_t i = modes.size() / 2; i < modes.size(); ++i) {
        const double k = double(modes.index_of(i));
        sks += k * std::sqrt(modes.modes[i].lambda);
        skk += k * k;
    }
    const double slope = sks / skk;
    return pi / (interval_multiplier * slope);
}

// ---------------------------------------------------------------------------
// exponential fitting

namespace {

struct ExpSumResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const std::vector<double>& t;
    const std::vector<double>& y;
    std::size_t M;
    double order_weight;

    int inputs() const { return int(2 * M); }
    int values() const { return int(t.size() + (M > 0 ? M - 1 : 0)); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const
    {
        for (std::size_t n = 0; n < t.size(); ++n) {
            double s = -y[n];
            for (std::size_t k = 0; k < M; ++k) s += p[2 * k + 1] * std::exp(-p[2 * k] * t[n]);
            r[n] = s;
        }
        // soft ordering: penalize lambda_k exceeding lambda_{k+1}
        for (std::size_t k = 0; k + 1 < M; ++k)
            r[t.size() + k] = order_weight * std::max(0.0, p[2 * k] - p[2 * k + 2]);
        return 0;
    }

    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const
    {
        J.setZero();
        for (std::size_t n = 0; n < t.size(); ++n)
            for (std::size_t k = 0; k < M; ++k) {
                const double e = std::exp(-p[2 * k] * t[n]);
                J(n, 2 * k) = -t[n] * p[2 * k + 1] * e;
                J(n, 2 * k + 1) = e;
            }
        for (std::size_t k = 0; k + 1 < M; ++k)
            if (p[2 * k] > p[2 * k + 2]) {
                J(t.size() + k, 2 * k) = order_weight;
                J(t.size() + k, 2 * k + 2) = -order_weight;
            }
        return 0;
    }
};

Eigen::VectorXd amplitudes_for(const std::vector<double>& t, const std::vector<double>& y,
                               const std::vector<double>& lambda)
{
    Eigen::MatrixXd A(t.size(), lambda.size());
    Eigen::VectorXd b(t.size());
    for (std::size_t n = 0; n < t.size(); ++n) {
        b[n] = y[n];
        for (std::size_t k = 0; k < lambda.size(); ++k) A(n, k) = std::exp(-lambda[k] * t[n]);
    }
    return A.colPivHouseholderQr().solve(b);
}

}  // namespace

namespace {

struct RawFit {
    ExponentialFit fit;
    std::vector<double> sd;  // standard deviation of each lambda, same order
};

RawFit fit_once(const BoundaryTrace& trace, std::size_t K)
{
    const std::size_t N = trace.size();
    if (N < 4) throw Error(ErrorKind::data, "exponential fit needs at least 4 samples");
    const double peak = trace.max_abs();
    if (peak == 0.0) throw Error(ErrorKind::data, "trace is identically zero");

    std::vector<double> t(N), y(trace.values().begin(), trace.values().end());
    for (std::size_t n = 0; n < N; ++n) t[n] = trace.time(n);

    // Hankel matrix with pencil parameter P = N/2
    const std::size_t P = N / 2;
    const std::size_t rows = N - P;
    Eigen::MatrixXd H(rows, P + 1);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j <= P; ++j) H(i, j) = y[i + j];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();

    ExponentialFit out;
    out.requested = K;
    out.singular_values.assign(sv.data(), sv.data() + sv.size());

    std::vector<double> lower(sv.data() + sv.size() / 2, sv.data() + sv.size());
    std::nth_element(lower.begin(), lower.begin() + long(lower.size() / 2), lower.end());
    const double noise_floor = lower.empty() ? 0.0 : lower[lower.size() / 2];
    const double cut = std::max(100.0 * noise_floor, 1e-13 * sv[0]);
    std::size_t rank = 0;
    while (rank < std::size_t(sv.size()) && sv[long(rank)] > cut) ++rank;
    out.rank = rank;
    std::size_t M = std::min(K, rank);
    if (M == 0) throw Error(ErrorKind::data, "trace has no identifiable exponential content");

    // pencil: eigenvalues of pinv(V1) V2 from the dominant right singular vectors
    const Eigen::MatrixXd V = svd.matrixV().leftCols(long(M));
    const Eigen::MatrixXd V1 = V.topRows(long(P));
    const Eigen::MatrixXd V2 = V.bottomRows(long(P));
    const Eigen::MatrixXd Z = V1.completeOrthogonalDecomposition().solve(V2);
    const Eigen::VectorXcd z = Z.eigenvalues();
    std::vector<double> lambda;
    for (long k = 0; k < z.size(); ++k) {
        const double mag = std::abs(z[k]);
        if (z[k].real() <= 0.0 || mag >= 1.0 || mag == 0.0) continue;
        lambda.push_back(-std::log(mag) / trace.dt());
    }
    std::sort(lambda.begin(), lambda.end());
    lambda.erase(std::unique(lambda.begin(), lambda.end(),
                             [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::abs(b); }),
                 lambda.end());
    M = lambda.size();
    if (M == 0) throw Error(ErrorKind::data, "no decaying exponentials identified");

    Eigen::VectorXd amp = amplitudes_for(t, y, lambda);
    Eigen::VectorXd p(2 * M);
    for (std::size_t k = 0; k < M; ++k) {
        p[2 * k] = lambda[k];
        p[2 * k + 1] = amp[long(k)];
    }

    ExpSumResidual f{t, y, M, 1e3 * peak};
    Eigen::LevenbergMarquardt<ExpSumResidual> lm(f);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.gtol = 0.0;
    lm.parameters.maxfev = 400 * int(2 * M + 1);
    Eigen::VectorXd refined = p;
    lm.minimize(refined);

    Eigen::VectorXd r0(f.values()), r1(f.values());
    f(p, r0);
    f(refined, r1);
    bool ok = refined.allFinite() && r1.norm() <= r0.norm();
    for (std::size_t k = 0; ok && k < M; ++k) ok = refined[2 * k] > 0.0;
    if (ok) p = refined;
    Eigen::VectorXd r(f.values());
    f(p, r);

    double ynorm = 0.0;
    for (double v : y) ynorm += v * v;
    const double rss = r.head(long(N)).squaredNorm();
    out.residual = std::sqrt(rss / ynorm);

    // covariance of lambda from the linearized residual
    Eigen::MatrixXd J(f.values(), f.inputs());
    f.df(p, J);
    const Eigen::MatrixXd Jd = J.topRows(long(N));
    const double dof = double(N > 2 * M ? N - 2 * M : 1);
    const double s2 = rss / dof;
    const Eigen::MatrixXd cov = (Jd.transpose() * Jd).completeOrthogonalDecomposition().pseudoInverse() * s2;

    std::vector<std::size_t> order(M);
    for (std::size_t k = 0; k < M; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[2 * a] < p[2 * b]; });
    RawFit raw;
    for (std::size_t k : order) {
        // drop exact duplicates left by the refinement
        if (!raw.fit.modes.modes.empty() && !(p[2 * k] > raw.fit.modes.modes.back().lambda)) continue;
        Mode m;
        m.lambda = p[2 * k];
        m.amplitude = p[2 * k + 1];
        raw.fit.modes.modes.push_back(m);
        raw.sd.push_back(std::sqrt(std::max(cov(2 * k, 2 * k), 0.0)));
    }
    raw.fit.requested = out.requested;
    raw.fit.rank = out.rank;
    raw.fit.residual = out.residual;
    raw.fit.singular_values = std::move(out.singular_values);
    return raw;
}

BoundaryTrace decimated(const BoundaryTrace& trace, std::size_t offset)
{
    std::vector<double> v;
    for (std::size_t i = offset; i < trace.size(); i += 2) v.push_back(trace.value(i));
    return BoundaryTrace(trace.time(offset), 2.0 * trace.dt(), std::move(v), trace.flavor());
}

}  // namespace

ExponentialFit fit_exponential_modes(const BoundaryTrace& trace, std::size_t K)
{
    if (K == 0) throw Error(ErrorKind::validation, "requested mode count must be positive");
    RawFit main = fit_once(trace, K);
    ExponentialFit out = std::move(main.fit);
    auto& ms = out.modes.modes;

    // spread against refits on the even and odd samples: a genuine decay rate
    // reappears, one that models truncation or noise moves
    std::vector<double> spread(ms.size(), 0.0);
    if (trace.size() >= 16) {
        for (std::size_t offset : {0u, 1u}) {
            std::vector<double> other;
            try {
                for (const auto& m : fit_once(decimated(trace, offset), ms.size()).fit.modes.modes)
                    other.push_back(m.lambda);
            } catch (const Error&) {
            }
            for (std::size_t k = 0; k < ms.size(); ++k) {
                double best = ms[k].lambda;
                for (double l : other) best = std::min(best, std::abs(l - ms[k].lambda));
                spread[k] = std::max(spread[k], best);
            }
        }
    }
    for (std::size_t k = 0; k < ms.size(); ++k) {
        const double rel = std::max(main.sd[k], spread[k]) / (matching_tolerance * ms[k].lambda);
        ms[k].confidence = 1.0 / (1.0 + rel * rel);
    }
    return out;
}

// ---------------------------------------------------------------------------

double DensityReport::bound() const noexcept { return epsilon / pi; }

DensityReport mode_density_report(const ModeSet& observed, const ModeSet& reference, double epsilon)
{
    reference.validate();
    const auto ref = reference.lambdas();
    std::vector<int> claimed(ref.size(), 0);
    for (const auto& m : observed.modes) {
        auto it = std::lower_bound(ref.begin(), ref.end(), m.lambda);
        std::size_t best = ref.size();
        double best_gap = 0.0;
        for (auto cand : {it, it == ref.begin() ? ref.end() : std::prev(it)}) {
            if (cand == ref.end()) continue;
            const double gap = std::abs(*cand - m.lambda);
            if (best == ref.size() || gap < best_gap) {
                best = std::size_t(cand - ref.begin());
                best_gap = gap;
            }
        }
        if (best == ref.size() || best_gap > matching_tolerance * std::abs(ref[best])) continue;
        if (claimed[best]++)
            throw Error(ErrorKind::matching, "two observed modes match reference eigenvalue " + std::to_string(ref[best]));
    }

    DensityReport out;
    out.epsilon = epsilon;
    std::size_t S = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        S += claimed[i] ? 1 : 0;
        const std::size_t N = reference.index_of(i);
        out.counts.thresholds.push_back(ref[i]);
        out.counts.total.push_back(N);
        out.counts.matched.push_back(S);
        out.counts.vanishing.push_back(N - S);
    }
    for (std::size_t i = 0; i < out.counts.size(); ++i)
        out.max_vanishing_density = std::max(out.max_vanishing_density, out.counts.vanishing_density(i));
    return out;
}

}  // namespace passive
