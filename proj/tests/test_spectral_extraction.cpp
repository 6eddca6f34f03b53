#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "passive/forward_solvers.hpp"
#include "passive/liouville_transform.hpp"
#include "passive/spectral_extraction.hpp"
#include "passive/sturm_liouville.hpp"

using namespace passive;
using namespace testing_support;
using std::numbers::pi;

namespace {

Profile unit_speed() { return Profile::constant({0, 1}, 65, 1.0, ProfileKind::speed); }

Profile pulse_data(double a, double b, std::size_t n = 1025)
{
    return Profile::from_function({0, 1}, n, [=](double x) { return pulse(x, a, b); }, ProfileKind::initial_data);
}

BoundaryTrace wave_trace(const Profile& c, const Profile& f, double t_max = 8.0)
{
    WaveRunOptions o;
    o.t_max = t_max;
    return solve_wave(c, f, o);
}

// Schrodinger potential of c on (0, L) extended by zero to (0, 2L).
Profile extended_potential(const Profile& c)
{
    const auto pq = speed_to_potential(c, 1.0, 2049);
    const double L = pq.map.L;
    return Profile::from_function({0, 2 * L}, 4097, [&](double y) { return y < L ? pq.q(y) : 0.0; },
                                  ProfileKind::potential);
}

}  // namespace

TEST_CASE("cosine transform of a decaying exponential")
{
    const double kappa = 2.0, dt = 1e-4;
    std::vector<double> v(200001);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-kappa * dt * double(i));
    const BoundaryTrace tr(0.0, dt, v, TraceFlavor::dirichlet);
    std::vector<double> xi;
    for (int j = 0; j <= 50; ++j) xi.push_back(j);
    const auto ft = cosine_transform_trace(tr, xi);
    for (std::size_t j = 0; j < xi.size(); ++j) {
        const double expect = 2 * kappa / (kappa * kappa + xi[j] * xi[j]);
        CHECK(std::abs(ft.values[j] - expect) < 1e-6 * expect);
    }
    CHECK(ft.truncation_bound < 1e-15);
    CHECK(ft.truncation_bound >= 0.0);

    const BoundaryTrace zero(0.0, dt, std::vector<double>(1000, 0.0), TraceFlavor::dirichlet);
    for (double u : cosine_transform_trace(zero, xi).values) CHECK(u == 0.0);

    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(cosine_transform_trace(tr, bad), Error);
}

TEST_CASE("cosine transform rejects records without decay")
{
    std::vector<double> v(4000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.01 * double(i));
    const BoundaryTrace tr(0.0, 0.01, v, TraceFlavor::dirichlet);
    const std::vector<double> xi{1.0};
    try {
        cosine_transform_trace(tr, xi);
        FAIL("expected an applicability error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::applicability);
    }

    // wave record stopped while the pulse is still arriving
    const auto short_trace = wave_trace(unit_speed(), pulse_data(0.1, 0.9), 1.0);
    try {
        cosine_transform_trace(short_trace, xi);
        FAIL("expected an applicability error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::applicability);
    }
}

TEST_CASE("transform of the constant-speed trace vanishes at k pi")
{
    // asymmetric data: a symmetric pulse makes a(xi) vanish at every even k pi
    const auto tr = wave_trace(unit_speed(), pulse_data(0.15, 0.75));
    const auto zeros = cosine_transform_zeros(tr, 1.0, 6, 0.05);
    REQUIRE(zeros.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(std::abs(std::sqrt(zeros.modes[k].lambda) - double(k + 1) * pi) < 1e-4);
        CHECK(zeros.modes[k].index == k + 1);
    }
    // the raw transform changes sign there as well
    for (std::size_t k = 1; k <= 6; ++k) {
        const std::vector<double> xi{k * pi - 0.01, k * pi + 0.01};
        const auto u = cosine_transform_trace(tr, xi).values;
        CHECK(u[0] * u[1] < 0.0);
    }
}

TEST_CASE("extended-interval spectrum for constant speed")
{
    const auto tr = wave_trace(unit_speed(), pulse_data(0.1, 0.9));
    const auto ext = extended_interval_spectrum(tr, 1.0, 1.0, 12);
    REQUIRE(ext.modes.size() == 12);
    CHECK(ext.modes.interval_length == doctest::Approx(2.0));
    for (std::size_t k = 0; k < 12; ++k) {
        const double xi = std::sqrt(ext.modes.modes[k].lambda);
        CHECK(std::abs(xi - double(k + 1) * pi / 2) < 1e-4);
    }
    CHECK_THROWS_AS(extended_interval_spectrum(tr, 1.0, 0.0, 3), Error);
}

TEST_CASE("extended-interval spectrum matches the extended potential")
{
    const BumpSpeed cs{0.3, 0.5, 0.4, 1.0};
    const auto c = cs.profile(1025);
    const auto tr = wave_trace(c, pulse_data(0.15, 0.75));
    const double L = speed_to_potential(c, 1.0).map.L;
    const auto ext = extended_interval_spectrum(tr, 1.0, L, 12);
    const auto ref = dirichlet_eigenvalues(extended_potential(c), 12);
    REQUIRE(ext.modes.size() == 12);
    for (std::size_t k = 0; k < 12; ++k) {
        const auto& m = ext.modes.modes[k];
        if (m.confidence < 0.5) continue;
        CHECK(std::abs(m.lambda - ref.modes[k].lambda) < 1e-3 * ref.modes[k].lambda);
    }
    CHECK(ext.confident >= 10);
}

TEST_CASE("initial data blind to one mode lowers its confidence")
{
    // c = 1: a(xi) = 2 xi int f sin(xi x), so f orthogonal to sin(xi_5 x) on (0,1)
    // (the pullback of the fifth extended eigenfunction) annihilates mode 5
    const double target = 5 * pi / 2;
    const auto p1 = pulse_data(0.1, 0.9, 4097), p2 = pulse_data(0.2, 0.6, 4097);
    auto proj = [&](const Profile& p) {
        return integral(Profile::from_function({0, 1}, 4097, [&](double x) { return p(x) * std::sin(target * x); }));
    };
    const double ratio = proj(p1) / proj(p2);
    const auto f = Profile::from_function({0, 1}, 4097, [&](double x) { return p1(x) - ratio * p2(x); },
                                          ProfileKind::initial_data);
    const auto tr = wave_trace(unit_speed(), f);
    const auto ext = extended_interval_spectrum(tr, 1.0, 1.0, 8);
    REQUIRE(ext.modes.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
        INFO("mode " << k + 1 << " confidence " << ext.modes.modes[k].confidence);
        if (k == 4)
            CHECK(ext.modes.modes[k].confidence < 0.1);
        else
            CHECK(ext.modes.modes[k].confidence > 0.9);
    }
    // the index assignment is not disturbed by the blind mode
    CHECK(std::sqrt(ext.modes.modes[5].lambda) == doctest::Approx(6 * pi / 2).epsilon(1e-4));
}

TEST_CASE("zero set of the transform is the weighted spectrum")
{
    for (double amp : {0.3, -0.2}) {
        const BumpSpeed cs{amp, 0.5, 0.4, 1.0};
        const auto c = cs.profile(1025);
        const auto tr = wave_trace(c, pulse_data(0.15, 0.75));
        const auto zeros = cosine_transform_zeros(tr, 1.0, 8, 0.05);
        const auto ref = weighted_dirichlet_eigenvalues(c, 8);
        REQUIRE(zeros.size() == 8);
        std::size_t confident = 0;
        for (std::size_t k = 0; k < 8; ++k) {
            if (zeros.modes[k].confidence <= 0.5) continue;
            ++confident;
            CHECK(std::abs(zeros.modes[k].lambda - ref.modes[k].lambda) < 1e-3 * ref.modes[k].lambda);
        }
        CHECK(confident >= 6);
    }
}

TEST_CASE("extracted zero set does not depend on the initial data")
{
    const GaussianSpeed cs{0.3};
    const auto c = cs.profile(1025);
    const double L = speed_to_potential(c, 1.0).map.L;
    const auto e1 = extended_interval_spectrum(wave_trace(c, pulse_data(0.1, 0.9)), 1.0, L, 10);
    const auto e2 = extended_interval_spectrum(wave_trace(c, pulse_data(0.25, 0.7)), 1.0, L, 10);
    REQUIRE(e1.modes.size() == 10);
    REQUIRE(e2.modes.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        const auto &a = e1.modes.modes[k], &b = e2.modes.modes[k];
        if (a.confidence < 0.5 || b.confidence < 0.5) continue;
        CHECK(std::abs(a.lambda - b.lambda) < 1e-3 * a.lambda);
    }
}

TEST_CASE("travel time from Weyl asymptotics")
{
    auto set = [](auto fn, std::size_t K) {
        ModeSet m;
        for (std::size_t k = 1; k <= K; ++k) m.modes.push_back({fn(double(k)), 0.0, 1.0, k});
        return m;
    };
    CHECK(travel_time_from_spectrum(set([](double k) { return k * k * pi * pi; }, 20), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(travel_time_from_spectrum(set([](double k) { return k * k * pi * pi / 4; }, 20), 2.0) ==
          doctest::Approx(1.0).epsilon(1e-14));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    const auto noisy = set([&](double k) { return k * k * pi * pi + 5.0 + u(rng); }, 30);
    CHECK(std::abs(travel_time_from_spectrum(noisy, 1.0) - 1.0) < 1e-3);

    CHECK_THROWS_AS(travel_time_from_spectrum(set([](double k) { return k; }, 4), 1.0), Error);
    auto bad = set([](double k) { return k * k; }, 8);
    std::swap(bad.modes[2].lambda, bad.modes[3].lambda);
    CHECK_THROWS_AS(travel_time_from_spectrum(bad, 1.0), Error);
}

TEST_CASE("travel-time estimate improves with more modes")
{
    const BumpSpeed cs{0.3, 0.5, 0.4, 1.0};
    const auto c = cs.profile(1025);
    const double L = speed_to_potential(c, 1.0).map.L;
    const auto all = weighted_dirichlet_eigenvalues(c, 40);
    double previous = 1e300;
    for (std::size_t K : {10, 20, 30, 40}) {
        ModeSet m;
        m.modes.assign(all.modes.begin(), all.modes.begin() + long(K));
        const double err = std::abs(travel_time_from_spectrum(m, 1.0) - L);
        INFO("K = " << K << " error " << err);
        CHECK(err < previous);
        previous = err;
    }
    CHECK(previous < 1e-3);
}

namespace {

BoundaryTrace exp_sum(const std::vector<double>& lambda, const std::vector<double>& amp, double t0, double t1,
                      std::size_t n, double noise = 0.0, std::uint64_t seed = 1)
{
    const double dt = (t1 - t0) / double(n - 1);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < lambda.size(); ++k) v[i] += amp[k] * std::exp(-lambda[k] * (t0 + dt * double(i)));
    BoundaryTrace tr(t0, dt, v, TraceFlavor::neumann);
    return noise > 0.0 ? with_noise(tr, noise, seed) : tr;
}

}  // namespace

TEST_CASE("exponential fit: single mode")
{
    const auto tr = exp_sum({pi * pi}, {-pi}, 0.01, 1.0, 200);
    const auto fit = fit_exponential_modes(tr, 1);
    REQUIRE(fit.modes.size() == 1);
    CHECK(std::abs(fit.modes.modes[0].lambda - pi * pi) < 1e-10 * pi * pi);
    CHECK(std::abs(fit.modes.modes[0].amplitude + pi) < 1e-10 * pi);
    CHECK(fit.residual < 1e-12);
    CHECK(fit.modes.modes[0].confidence > 0.99);
}

TEST_CASE("exponential fit: three planted modes")
{
    const std::vector<double> lam{9.87, 39.5, 88.9}, amp{1.0, -0.5, 0.25};
    const auto fit = fit_exponential_modes(exp_sum(lam, amp, 0.01, 1.0, 200), 3);
    REQUIRE(fit.modes.size() == 3);
    CHECK_FALSE(fit.rank_limited());
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(fit.modes.modes[k].lambda - lam[k]) < 1e-8 * lam[k]);
        CHECK(std::abs(fit.modes.modes[k].amplitude - amp[k]) < 1e-7 * std::abs(amp[k]));
    }

    const auto noisy = fit_exponential_modes(exp_sum(lam, amp, 0.01, 1.0, 200, 1e-8, 3), 3);
    REQUIRE(noisy.modes.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(noisy.modes.modes[k].lambda - lam[k]) < 1e-5 * lam[k]);

    const auto over = fit_exponential_modes(exp_sum(lam, amp, 0.01, 1.0, 200, 1e-8, 3), 8);
    CHECK(over.rank_limited());
    CHECK(over.rank == 3);
    CHECK(over.modes.size() == 3);
}

TEST_CASE("exponential fit is exact on well separated sums")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(0.5, 2.0);
    for (std::size_t M = 1; M <= 5; ++M) {
        std::vector<double> lam, amp;
        for (std::size_t k = 1; k <= M; ++k) {
            lam.push_back(double(k * k) * pi * pi * ua(rng) / 1.5 + double(k));
            amp.push_back((k % 2 ? 1.0 : -1.0) * ua(rng));
        }
        std::sort(lam.begin(), lam.end());
        const auto fit = fit_exponential_modes(exp_sum(lam, amp, 0.002, 0.6, 400), M);
        REQUIRE(fit.modes.size() == M);
        for (std::size_t k = 0; k < M; ++k) {
            INFO("M = " << M << " k = " << k);
            CHECK(std::abs(fit.modes.modes[k].lambda - lam[k]) < 1e-9 * lam[k]);
        }
        CHECK(fit.residual < 1e-12);
    }
}

TEST_CASE("exponential fit rejects empty data")
{
    const BoundaryTrace zero(0.0, 0.01, std::vector<double>(50, 0.0), TraceFlavor::neumann);
    CHECK_THROWS_AS(fit_exponential_modes(zero, 2), Error);
    CHECK_THROWS_AS(fit_exponential_modes(exp_sum({1.0}, {1.0}, 0, 1, 50), 0), Error);
}

namespace {

ModeSet squares(std::size_t K)
{
    ModeSet m;
    for (std::size_t k = 1; k <= K; ++k) m.modes.push_back({double(k * k) * pi * pi, 1.0, 1.0, k});
    return m;
}

}  // namespace

TEST_CASE("density report counts")
{
    const auto ref = squares(10);
    const auto all = mode_density_report(ref, ref, 0.1);
    for (std::size_t i = 0; i < all.counts.size(); ++i) {
        CHECK(all.counts.vanishing[i] == 0);
        CHECK(all.counts.matched[i] == all.counts.total[i]);
        CHECK(all.counts.matched_fraction(i) == 1.0);
    }
    CHECK(all.max_vanishing_density == 0.0);
    CHECK(all.bound() == doctest::Approx(0.1 / pi));

    auto missing = ref;
    missing.modes.erase(missing.modes.begin() + 1);
    // perturb within tolerance
    for (auto& m : missing.modes) m.lambda *= 1 + 5e-5;
    const auto rep = mode_density_report(missing, ref, 0.1);
    for (std::size_t i = 0; i < rep.counts.size(); ++i) CHECK(rep.counts.vanishing[i] == (i >= 1 ? 1u : 0u));
    CHECK(rep.max_vanishing_density == doctest::Approx(1.0 / (2 * pi)));

    auto ambiguous = ref;
    ambiguous.modes.insert(ambiguous.modes.begin() + 3, Mode{ref.modes[3].lambda * (1 - 5e-5), 1, 1, 0});
    ambiguous.modes[4].lambda *= 1 + 1e-6;
    try {
        mode_density_report(ambiguous, ref, 0.1);
        FAIL("expected a matching error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::matching);
    }
}
