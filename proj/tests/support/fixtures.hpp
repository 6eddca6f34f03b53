#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "passive/core_types.hpp"
#include "jet.hpp"

namespace testing_support {

// Smooth compactly supported bump exp(1 - 1/(1 - r^2)) with r = (x - center)/half_width.
inline Jet bump(Jet x, double center, double half_width)
{
    const Jet r = (x - center) / half_width;
    if (std::abs(r.v) >= 1.0) return Jet::constant(0.0);
    const Jet s = 1.0 - r * r;
    return exp(1.0 - 1.0 / s);
}

inline double bump(double x, double center, double half_width)
{
    return bump(Jet::constant(x), center, half_width).v;
}

// Speed fixture 1 + amp * bump on (center - w, center + w).
struct BumpSpeed {
    double amplitude = 0.3;
    double center = 0.5;
    double half_width = 0.4;
    double background = 1.0;

    Jet operator()(Jet x) const { return background + amplitude * bump(x, center, half_width); }
    double operator()(double x) const { return (*this)(Jet::constant(x)).v; }

    passive::Profile profile(std::size_t n) const
    {
        auto p = passive::Profile::from_function({0.0, 1.0}, n, [this](double x) { return (*this)(x); },
                                                 passive::ProfileKind::speed);
        return p;
    }
};

// Analytic Liouville potential in x: q = c'^2/4 - c c''/2 (equal to
// c~^{1/2} d_y^2 c~^{-1/2} after the change of variables dy = dx / c).
template <class C>
double liouville_potential_at(const C& c, double x)
{
    const Jet j = c(Jet::variable(x));
    return 0.25 * j.d * j.d - 0.5 * j.v * j.dd;
}

// Heat potential V = -b'/2 + b^2/4 from an analytic convection.
template <class B>
double convection_potential_at(const B& b, double x)
{
    const Jet j = b(Jet::variable(x));
    return -0.5 * j.d + 0.25 * j.v * j.v;
}

// d'Alembert trace at x = 1 for c = 1, zero initial velocity, Dirichlet at 0
// (odd reflection) and free propagation beyond x = 1.
inline double dalembert_trace(const std::function<double(double)>& f, double t)
{
    auto f_odd = [&](double x) {
        if (x > 0.0 && x < 1.0) return f(x);
        if (x < 0.0 && x > -1.0) return -f(-x);
        return 0.0;
    };
    return 0.5 * (f_odd(1.0 + t) + f_odd(1.0 - t));
}

// Second-order finite-difference Dirichlet operator -d^2 + q on [0, L] with
// n nodes (interior unknowns only).
struct FdOperator {
    Eigen::VectorXd diag, off;
    double h;
};

inline FdOperator fd_operator(const std::function<double(double)>& q, double L, int n)
{
    const int m = n - 2;
    const double h = L / double(n - 1);
    FdOperator op{Eigen::VectorXd(m), Eigen::VectorXd(m - 1), h};
    for (int i = 0; i < m; ++i) op.diag(i) = 2.0 / (h * h) + q(h * double(i + 1));
    op.off.setConstant(-1.0 / (h * h));
    return op;
}

inline Eigen::VectorXd fd_eigenvalues(const std::function<double(double)>& q, double L, int n)
{
    const auto op = fd_operator(q, L, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(op.diag, op.off, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// Eigenvector for a known eigenvalue by inverse iteration (tridiagonal
// solves), L2-normalized on the grid, positive initial slope.
inline Eigen::VectorXd fd_eigenvector(const FdOperator& op, double lambda)
{
    const int m = int(op.diag.size());
    const double shift = lambda * (1.0 + 1e-12);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m);
    for (int it = 0; it < 4; ++it) {
        // Thomas algorithm on (A - shift I) w = v
        Eigen::VectorXd c(m), d(m);
        double b0 = op.diag(0) - shift;
        c(0) = m > 1 ? op.off(0) / b0 : 0.0;
        d(0) = v(0) / b0;
        for (int i = 1; i < m; ++i) {
            const double denom = op.diag(i) - shift - op.off(i - 1) * c(i - 1);
            c(i) = i + 1 < m ? op.off(i) / denom : 0.0;
            d(i) = (v(i) - op.off(i - 1) * d(i - 1)) / denom;
        }
        for (int i = m - 2; i >= 0; --i) d(i) -= c(i) * d(i + 1);
        v = d / (d.norm() * std::sqrt(op.h));
    }
    if (v(0) < 0) v = -v;
    return v;
}

// Richardson-extrapolated eigenvalues from grids of 2049 and 4097 nodes.
inline std::vector<double> richardson_eigenvalues(const std::function<double(double)>& q, double L, int K)
{
    const auto coarse = fd_eigenvalues(q, L, 2049);
    const auto fine = fd_eigenvalues(q, L, 4097);
    std::vector<double> out(K);
    for (int k = 0; k < K; ++k) out[k] = (4.0 * fine(k) - coarse(k)) / 3.0;
    return out;
}

// Richardson-extrapolated eigenvector k (0-based) on the 2049-node grid,
// including the zero end values.
inline std::vector<double> richardson_eigenvector(const std::function<double(double)>& q, double L, int k)
{
    const auto opc = fd_operator(q, L, 2049), opf = fd_operator(q, L, 4097);
    const auto coarse = fd_eigenvector(opc, fd_eigenvalues(q, L, 2049)(k));
    const auto fine = fd_eigenvector(opf, fd_eigenvalues(q, L, 4097)(k));
    std::vector<double> out(2049, 0.0);
    for (int i = 1; i < 2048; ++i) out[i] = (4.0 * fine(2 * i - 1) - coarse(i - 1)) / 3.0;
    return out;
}

inline double gaussian_potential(double x) { return 10.0 * std::exp(-50.0 * (x - 0.3) * (x - 0.3)); }

}  // namespace testing_support

namespace testing_support {

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline Jet smooth_step(Jet t)
{
    auto sigma = [](Jet s) { return s.v <= 0.0 ? Jet::constant(0.0) : exp(-1.0 / s); };
    const Jet a = sigma(t), b = sigma(1.0 - t);
    return a / (a + b);
}

// 1 + amp exp(-100 (x - 0.5)^2) times a smooth cutoff equal to 1 on
// [0.2, 0.8] and 0 outside (0.1, 0.9).
struct GaussianSpeed {
    double amplitude = 0.3;

    Jet operator()(Jet x) const
    {
        const Jet g = exp(-100.0 * (x - 0.5) * (x - 0.5));
        const Jet cut = smooth_step((x - 0.1) / 0.1) * smooth_step((0.9 - x) / 0.1);
        return 1.0 + amplitude * g * cut;
    }
    double operator()(double x) const { return (*this)(Jet::constant(x)).v; }

    passive::Profile profile(std::size_t n) const
    {
        return passive::Profile::from_function({0.0, 1.0}, n, [this](double x) { return (*this)(x); },
                                               passive::ProfileKind::speed);
    }
};

}  // namespace testing_support

namespace testing_support {

// sin^4 pulse on [a, b]: three continuous derivatives at the support ends,
// moderate higher derivatives (the baseline initial-data fixture).
inline Jet pulse(Jet x, double a, double b)
{
    if (x.v <= a || x.v >= b) return Jet::constant(0.0);
    const Jet s = sin(std::numbers::pi * (x - a) / (b - a));
    return s * s * s * s;
}

inline double pulse(double x, double a = 0.1, double b = 0.9) { return pulse(Jet::constant(x), a, b).v; }

}  // namespace testing_support

namespace testing_support {

// 1 + amp * sin^4(pi x): equal to the background at both ends with three
// vanishing derivatives, so the Liouville potential is smooth and zero at
// both ends of (0, L).
struct RaisedSpeed {
    double amplitude = 0.3;

    Jet operator()(Jet x) const
    {
        const Jet s = sin(std::numbers::pi * x);
        return 1.0 + amplitude * s * s * s * s;
    }
    double operator()(double x) const { return (*this)(Jet::constant(x)).v; }

    passive::Profile profile(std::size_t n) const
    {
        return passive::Profile::from_function({0.0, 1.0}, n, [this](double x) { return (*this)(x); },
                                               passive::ProfileKind::speed);
    }
};

}  // namespace testing_support
