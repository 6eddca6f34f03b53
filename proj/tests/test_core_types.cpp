#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "passive/core_types.hpp"
#include "passive/csv_io.hpp"
#include "passive/numerics.hpp"

using namespace passive;
using std::numbers::pi;

TEST_CASE("profile evaluation")
{
    const auto one = Profile::constant({0, 1}, 17, 1.0);
    CHECK(one(0.37) == doctest::Approx(1.0).epsilon(1e-15));

    const auto sq = Profile::from_function({0, 1}, 129, [](double x) { return x * x; });
    CHECK(std::abs(sq(0.5) - 0.25) < 1e-9);

    const auto s = Profile::from_function({0, 1}, 257, [](double x) { return std::sin(pi * x); });
    CHECK(std::abs(s(0.3) - std::sin(0.3 * pi)) < 1e-7);

    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s(s.node(i)) == s.sample(i));

    CHECK_THROWS_AS(s(1.1), Error);
    try {
        s(-0.5);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
    }
}

TEST_CASE("cubic polynomials are reproduced exactly")
{
    auto cubic = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x; };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (std::size_t n : {4u, 5u, 9u, 33u}) {
        const auto p = Profile::from_function({-1, 2}, n, cubic);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double x = u(rng);
            worst = std::max(worst, std::abs(p(x) - cubic(x)));
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("profile derivative")
{
    const auto c = Profile::constant({0, 1}, 33, 3.0);
    CHECK(derivative(c, 1).max_abs() < 1e-12);

    const auto sq = Profile::from_function({0, 1}, 65, [](double x) { return x * x; });
    const auto d2 = derivative(sq, 2);
    for (double v : d2.samples()) CHECK(std::abs(v - 2.0) < 1e-6);

    const auto s = Profile::from_function({0, 1}, 513, [](double x) { return std::sin(2 * pi * x); });
    const auto d1 = derivative(s, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < d1.size(); ++i)
        worst = std::max(worst, std::abs(d1.sample(i) - 2 * pi * std::cos(2 * pi * d1.node(i))));
    CHECK(worst < 1e-5);

    const auto tiny = Profile::constant({0, 1}, 7, 1.0);
    try {
        derivative(tiny, 1);
        FAIL("expected resolution error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::resolution);
    }
}

TEST_CASE("derivative integrates back to endpoint differences")
{
    struct Case {
        double (*f)(double);
        double right;
        std::size_t n;
    };
    const Case cases[] = {
        {+[](double x) { return std::exp(std::sin(2 * pi * x)) + x; }, 1.0, 257},
        {+[](double x) { return x * x + std::sin(2 * pi * x); }, 1.0, 257},
        {+[](double x) { return std::exp(x); }, 1.0, 1025},
    };
    for (const auto& c : cases) {
        const auto p = Profile::from_function({0, c.right}, c.n, c.f);
        const auto d = derivative(p, 1);
        std::vector<double> v(d.samples().begin(), d.samples().end());
        double trap = 0.0;
        for (std::size_t i = 0; i + 1 < v.size(); ++i) trap += 0.5 * d.spacing() * (v[i] + v[i + 1]);
        CHECK(std::abs(trap - (c.f(c.right) - c.f(0.0))) < 1e-6);
    }
}

TEST_CASE("resampling to a finer grid and back")
{
    auto f = [](double x) { return std::sin(2 * pi * x) + 0.3 * std::cos(5 * pi * x); };
    const auto p = Profile::from_function({0, 1}, 257, f);
    const auto back = p.resampled(513).resampled(257);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(back.sample(i) - p.sample(i)));
    CHECK(worst < 1e-8);
}

TEST_CASE("speed validation")
{
    CHECK_THROWS_AS(Profile({0, 1}, {1, 0.5, -0.1, 1}, ProfileKind::speed), Error);
    CHECK_THROWS_AS(Profile::speed({0, 1}, {1.1, 1, 1, 1, 1}, 1.0), Error);
    CHECK_NOTHROW(Profile::speed({0, 1}, {1, 1.2, 1.3, 1}, 1.0));
    CHECK_THROWS_AS(Profile({0, 1}, {1, 2, 3}), Error);
}

TEST_CASE("quadrature rules")
{
    auto f = [](double x) { return std::exp(x); };
    for (std::size_t n : {101u, 100u}) {
        const auto x = numerics::linspace(0, 1, n);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f(x[i]);
        const double h = 1.0 / double(n - 1);
        CHECK(std::abs(numerics::simpson(v, h) - (std::exp(1.0) - 1)) < 1e-9);
        CHECK(std::abs(numerics::gregory(v, h) - (std::exp(1.0) - 1)) < 1e-9);
        const auto c = numerics::cumulative_integral(v, h);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(c[i] - (std::exp(x[i]) - 1)) < 1e-8);
    }
}

TEST_CASE("decay rate estimate")
{
    std::vector<double> v(2000);
    const double dt = 0.01;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-0.7 * dt * double(i)) * std::cos(3.0 * dt * double(i));
    const BoundaryTrace tr(0.0, dt, v, TraceFlavor::dirichlet);
    REQUIRE(tr.decay_rate_estimate());
    CHECK(std::abs(*tr.decay_rate_estimate() - 0.7) < 0.05);
    const double k = *tr.decay_rate_estimate();
    CHECK(std::abs(v.back()) <= tr.max_abs() * std::exp(-k * tr.t_last()) * 10);

    std::vector<double> flat(100, 1.0);
    CHECK_FALSE(BoundaryTrace(0.0, 0.1, flat, TraceFlavor::dirichlet).decay_rate_estimate());

    std::vector<double> dead(400, 0.0);
    for (int i = 0; i < 50; ++i) dead[i] = std::sin(0.1 * i);
    const BoundaryTrace d(0.0, 0.01, dead, TraceFlavor::dirichlet);
    REQUIRE(d.decay_rate_estimate());
    CHECK(*d.decay_rate_estimate() > 0);
}

TEST_CASE("mode set and counts validation")
{
    ModeSet ms{{{1.0, 0.5, 1.0, 0}, {2.0, 0.1, 0.2, 0}}, 1.0};
    CHECK_NOTHROW(ms.validate());
    CHECK(ms.confident(0.5).size() == 1);
    ms.modes[1].lambda = 0.5;
    CHECK_THROWS_AS(ms.validate(), Error);
    ms.modes[1].lambda = 3.0;
    ms.modes[1].confidence = 1.5;
    CHECK_THROWS_AS(ms.validate(), Error);

    SpectrumCounts sc{{1, 2, 3}, {1, 2, 3}, {1, 1, 2}, {0, 1, 1}};
    CHECK_NOTHROW(sc.validate());
    sc.matched[2] = 4;
    CHECK_THROWS_AS(sc.validate(), Error);
}

TEST_CASE("csv round trips are bit exact")
{
    const auto p = Profile::from_function({0.1, 0.9}, 33, [](double x) { return std::exp(x) / 3.0; },
                                          ProfileKind::convection);
    std::stringstream ss;
    csv::write(ss, p);
    const auto q = csv::read_profile(ss);
    CHECK(q.kind() == ProfileKind::convection);
    CHECK(q.left() == p.left());
    CHECK(q.right() == p.right());
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.sample(i) == p.sample(i));

    std::vector<double> v{0.1 / 3, 1e-300, -2.5e17, 0.0};
    const BoundaryTrace tr(0.25, 1.0 / 3.0, v, TraceFlavor::neumann);
    std::stringstream ts;
    csv::write(ts, tr);
    const auto tr2 = csv::read_trace(ts);
    CHECK(tr2.dt() == tr.dt());
    CHECK(tr2.flavor() == TraceFlavor::neumann);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(tr2.value(i) == v[i]);

    ModeSet ms{{{1.0 / 7, -0.3, 0.9, 3}, {2.0 / 7, 0.1, 1.0, 5}}, 2.0};
    std::stringstream ms_s;
    csv::write(ms_s, ms);
    const auto ms2 = csv::read_modes(ms_s);
    CHECK(ms2.modes[1].lambda == ms.modes[1].lambda);
    CHECK(ms2.modes[1].index == 5);

    SpectrumCounts sc{{1.5, 2.5}, {1, 2}, {1, 1}, {0, 1}};
    std::stringstream cs;
    csv::write(cs, sc);
    const auto sc2 = csv::read_counts(cs);
    CHECK(sc2.vanishing[1] == 1);
    CHECK(sc2.thresholds[0] == 1.5);

    std::stringstream bad("# speed,0,1,4\n1\n2\n");
    CHECK_THROWS_AS(csv::read_profile(bad), Error);
}
