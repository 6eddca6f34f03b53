#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "passive/liouville_transform.hpp"
#include "passive/sturm_liouville.hpp"

using namespace passive;
using namespace testing_support;
using std::numbers::pi;

namespace {
Profile zero_potential(double L = 1.0, std::size_t n = 129) { return Profile::constant({0, L}, n, 0.0); }
Profile gauss_potential(std::size_t n = 1025) { return Profile::from_function({0, 1}, n, gaussian_potential); }
}  // namespace

TEST_CASE("shoot on constant potentials")
{
    auto e = shoot(zero_potential(), pi * pi);
    CHECK(std::abs(e.value) < 1e-9);
    CHECK(std::abs(e.slope + 1.0) < 1e-8);

    e = shoot(zero_potential(), 0.0);
    CHECK(std::abs(e.value - 1.0) < 1e-10);
    CHECK(std::abs(e.slope - 1.0) < 1e-10);

    const auto q7 = Profile::constant({0, 1}, 65, 7.0);
    e = shoot(q7, 7.0 + pi * pi);
    CHECK(std::abs(e.value) < 1e-9);
    CHECK(std::abs(e.slope + 1.0) < 1e-8);

    try {
        shoot(zero_potential(), -1e6);
        FAIL("expected range error");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::range);
    }
}

TEST_CASE("analytic spectra")
{
    const auto ev = dirichlet_eigenvalues(zero_potential(), 5);
    for (std::size_t k = 1; k <= 5; ++k) CHECK(std::abs(ev.modes[k - 1].lambda / std::pow(k * pi, 2) - 1) < 1e-9);

    const auto ev7 = dirichlet_eigenvalues(Profile::constant({0, 1}, 65, 7.0), 3);
    for (std::size_t k = 1; k <= 3; ++k)
        CHECK(std::abs(ev7.modes[k - 1].lambda / (std::pow(k * pi, 2) + 7) - 1) < 1e-9);

    const auto half = dirichlet_eigenvalues(zero_potential(2.0, 129), 4);
    for (std::size_t k = 1; k <= 4; ++k)
        CHECK(std::abs(half.modes[k - 1].lambda / std::pow(k * pi / 2, 2) - 1) < 1e-9);
}

TEST_CASE("resolution limit is reported")
{
    const auto q = zero_potential(1.0, 21);
    CHECK(max_reliable_count(q) == 10);
    try {
        dirichlet_eigenvalues(q, 11);
        FAIL("expected resolution error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resolution);
        REQUIRE(e.limit());
        CHECK(*e.limit() == 10);
    }
}

TEST_CASE("gaussian potential against the matrix oracle")
{
    const auto q = gauss_potential();
    const auto ev = dirichlet_eigenvalues(q, 20);
    const auto oracle = richardson_eigenvalues(gaussian_potential, 1.0, 20);
    for (int k = 0; k < 20; ++k) CHECK(std::abs(ev.modes[k].lambda / oracle[k] - 1) < 1e-6);

    for (const auto& m : ev.modes) {
        const auto e = shoot(q, m.lambda);
        CHECK(std::abs(e.value) < eigen_tolerance * (1 + std::abs(e.slope)));
        CHECK(std::abs(e.value) / (std::abs(e.value) + std::abs(e.slope)) < 1e-8);
    }
}

TEST_CASE("eigenfunctions")
{
    const auto q0 = zero_potential();
    auto p = dirichlet_eigenfunction(q0, pi * pi);
    CHECK(p.index == 1);
    CHECK(std::abs(p.right_slope + std::sqrt(2.0) * pi) < 1e-7);
    CHECK(std::abs(p.left_slope - std::sqrt(2.0) * pi) < 1e-7);
    double worst = 0;
    for (std::size_t i = 0; i < p.eigenfunction.size(); ++i) {
        const double x = p.eigenfunction.node(i);
        worst = std::max(worst, std::abs(p.eigenfunction.sample(i) - std::sqrt(2.0) * std::sin(pi * x)));
    }
    CHECK(worst < 1e-8);

    p = dirichlet_eigenfunction(q0, 4 * pi * pi);
    CHECK(p.index == 2);
    CHECK(std::abs(p.right_slope - std::sqrt(2.0) * 2 * pi) < 1e-7);

    try {
        dirichlet_eigenfunction(q0, 10.0);
        FAIL("expected spectral error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::spectral);
    }
}

TEST_CASE("gaussian eigenfunction k=5 against the matrix oracle")
{
    const auto q = gauss_potential();
    const double lam = dirichlet_eigenvalue(q, 5);
    const auto p = dirichlet_eigenfunction(q, lam);
    CHECK(p.index == 5);
    CHECK(interior_sign_changes(p.eigenfunction) == 4);
    CHECK(std::abs(l2_norm(p.eigenfunction) - 1) < 1e-8);
    CHECK(std::abs(p.eigenfunction.samples().back()) < 1e-8);

    const auto ref = richardson_eigenvector(gaussian_potential, 1.0, 4);
    double worst = 0, asym = 0;
    for (int i = 0; i < 2049; ++i) {
        const double x = double(i) / 2048.0;
        worst = std::max(worst, std::abs(p.eigenfunction(x) - ref[i]));
        asym = std::max(asym, std::abs(p.eigenfunction(x) - std::sqrt(2.0) * std::sin(5 * pi * x)));
    }
    CHECK(worst < 1e-5);
    CHECK(asym < 1.0);  // O(1/k) with a modest constant
}

TEST_CASE("eigenvalue sensitivities")
{
    const auto q0 = zero_potential();
    const auto p1 = dirichlet_eigenfunction(q0, pi * pi);
    const auto s = eigenvalue_sensitivity(q0, p1);
    CHECK(std::abs(integral(s) - 1) < 1e-8);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(s.sample(i) - 2 * std::pow(std::sin(pi * s.node(i)), 2)) < 1e-8);

    const auto q = gauss_potential(513);
    const double delta = 0.37;
    const auto shifted = Profile::from_function({0, 1}, 513, [&](double x) { return gaussian_potential(x) + delta; });
    const auto a = dirichlet_eigenvalues(q, 6), b = dirichlet_eigenvalues(shifted, 6);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(b.modes[k].lambda - a.modes[k].lambda - delta) < 1e-8);

    // directional finite differences
    const auto pair = dirichlet_eigenfunction(q, a.modes[2].lambda);
    const auto sens = eigenvalue_sensitivity(q, pair);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
        const double c1 = u(rng), c2 = u(rng), c3 = u(rng);
        auto eta = [&](double x) { return c1 + c2 * std::cos(pi * x) + c3 * std::sin(3 * pi * x); };
        const double h = 1e-5;
        const auto qp = Profile::from_function({0, 1}, 513, [&](double x) { return gaussian_potential(x) + h * eta(x); });
        const auto qm = Profile::from_function({0, 1}, 513, [&](double x) { return gaussian_potential(x) - h * eta(x); });
        const double fd = (dirichlet_eigenvalue(qp, 3) - dirichlet_eigenvalue(qm, 3)) / (2 * h);
        const auto prod = Profile::from_function({0, 1}, sens.size(), [&](double x) { return sens(x) * eta(x); });
        const double fh = integral(prod);
        CHECK(std::abs(fd - fh) < 1e-4 * std::max(1.0, std::abs(fh)));
    }
}

TEST_CASE("frozen wave solution")
{
    const auto one = Profile::constant({0, 1}, 65, 1.0, ProfileKind::speed);
    auto e = frozen_wave_solution(one, pi);
    CHECK(std::abs(e.value) < 1e-9);
    CHECK(std::abs(e.slope + 1) < 1e-8);
    e = frozen_wave_solution(one, 1e-6);
    CHECK(std::abs(e.value - 1) < 1e-6);
    CHECK(std::abs(e.slope - 1) < 1e-6);
    e = frozen_wave_solution(one, 0.0);
    CHECK(e.value == doctest::Approx(1.0));

    // cross path through the travel-time coordinate:
    // v(xi,1) = c0 * psi(L), v'(xi,1) = psi'(L) with psi from the potential.
    const BumpSpeed cs{0.3, 0.5, 0.4, 1.0};
    const auto c = cs.profile(1025);
    const auto [q, map] = speed_to_potential(c, 1.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 60.0);
    for (int i = 0; i < 50; ++i) {
        const double xi = u(rng);
        const auto direct = frozen_wave_solution(c, xi);
        const auto via = shoot(q, xi * xi);
        const double scale = std::abs(direct.value) + std::abs(direct.slope) / xi;
        CHECK(std::abs(direct.value - via.value) < 1e-7 * scale);
        CHECK(std::abs(direct.slope - via.slope) < 1e-7 * scale * xi);
    }
}

TEST_CASE("frozen solution bounded away from zero and infinity")
{
    const BumpSpeed cs{0.3, 0.5, 0.4, 1.0};
    const auto c = cs.profile(513);
    double lo = 1e300, hi = 0;
    for (double xi = 0.0; xi <= 40.0; xi += 0.1) {
        const auto e = frozen_wave_solution(c, xi);
        const double m = std::abs(e.value) * std::max(xi, 1.0) + std::abs(e.slope);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    CHECK(lo > 0.1);
    CHECK(hi < 10.0);
}

TEST_CASE("eigenvalue asymptotics")
{
    const auto q = gauss_potential(257);
    const double mean_q = integral(q);
    const auto ev = dirichlet_eigenvalues(q, 50);
    double prev = 1e300;
    int decreases = 0;
    for (std::size_t k = 10; k <= 50; k += 10) {
        const double gap = std::abs(ev.modes[k - 1].lambda - std::pow(k * pi, 2) - mean_q);
        if (gap < prev) ++decreases;
        prev = gap;
        if (k >= 40) CHECK(gap < 0.05 * (mean_q + 1));
    }
    CHECK(decreases >= 4);
}

TEST_CASE("eigenfunction asymptotics trend")
{
    const auto q = gauss_potential(257);
    std::vector<double> dev;
    for (std::size_t k : {5u, 10u, 20u, 40u}) {
        const auto p = dirichlet_eigenfunction(q, dirichlet_eigenvalue(q, k));
        CHECK(interior_sign_changes(p.eigenfunction) == k - 1);
        double worst = 0;
        for (std::size_t i = 0; i < p.eigenfunction.size(); ++i)
            worst = std::max(worst, std::abs(p.eigenfunction.sample(i) -
                                             std::sqrt(2.0) * std::sin(double(k) * pi * p.eigenfunction.node(i))));
        dev.push_back(worst * double(k));
    }
    // k * deviation stays bounded: deviation is O(1/k)
    const double C = *std::max_element(dev.begin(), dev.end());
    CHECK(C < 10.0);
    CHECK(dev.back() <= 1.5 * dev.front());
}

TEST_CASE("weighted spectrum equals the transformed spectrum")
{
    const BumpSpeed cs{0.3, 0.5, 0.4, 1.0};
    const auto c = cs.profile(1025);
    const auto [q, map] = speed_to_potential(c, 1.0);
    const auto w = weighted_dirichlet_eigenvalues(c, 15);
    const auto s = dirichlet_eigenvalues(q, 15);
    for (int k = 0; k < 15; ++k) CHECK(std::abs(w.modes[k].lambda / s.modes[k].lambda - 1) < 1e-7);

    // zeros of xi -> v(xi,1) are the weighted eigenvalues
    for (int k = 0; k < 5; ++k) {
        const double xi = std::sqrt(w.modes[k].lambda);
        CHECK(std::abs(frozen_wave_solution(c, xi).value) < 1e-8);
    }
}
