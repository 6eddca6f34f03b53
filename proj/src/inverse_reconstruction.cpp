#include "passive/inverse_reconstruction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <optional>

#include <Eigen/Dense>

#include "passive/liouville_transform.hpp"
#include "passive/numerics.hpp"
#include "passive/sturm_liouville.hpp"

namespace passive {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double edge_tol = 1e-9;

double cubic_bspline(double s)
{
    s = std::abs(s);
    if (s < 1.0) return 2.0 / 3.0 - s * s + 0.5 * s * s * s;
    if (s < 2.0) {
        const double r = 2.0 - s;
        return r * r * r / 6.0;
    }
    return 0.0;
}

Error staged(const std::string& stage, const Error& e)
{
    std::string message = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + " error: ";
    if (message.rfind(prefix, 0) == 0) message.erase(0, prefix.size());
    Error out(e.kind(), stage + ": " + message);
    if (e.limit()) out.with_limit(*e.limit());
    if (e.location()) out.with_location(*e.location());
    return out;
}

template <class F>
auto run_stage(const std::string& stage, F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        throw staged(stage, e);
    }
}

// flux model for h = sum w_i beta_i supported in [0, eps]: samples ~ A w
struct SupportedFit {
    Profile h = Profile::constant({0.0, 1.0}, 4, 0.0);
    Eigen::VectorXd w;
    double misfit = 0.0;
    double alpha = 0.0;
};

Eigen::MatrixXd flux_matrix(const Profile& V, const BoundaryTrace& samples, double epsilon, std::size_t nb,
                            std::size_t K)
{
    const auto pairs = dirichlet_eigenpairs(V, K);
    const double hk = epsilon / double(nb + 3);
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(long(K), long(nb));  // slope_k * integral beta_i phi_k
    std::vector<double> prod(V.size());
    for (std::size_t k = 0; k < K; ++k) {
        const auto& phi = pairs[k].eigenfunction;
        prod.resize(phi.size());
        for (std::size_t i = 0; i < nb; ++i) {
            for (std::size_t j = 0; j < phi.size(); ++j) {
                const double x = phi.node(j);
                prod[j] = x > epsilon ? 0.0 : phi.sample(j) * cubic_bspline((x - hk * double(i + 2)) / hk);
            }
            coef(long(k), long(i)) = numerics::simpson(prod, phi.spacing()) * pairs[k].right_slope;
        }
    }
    Eigen::MatrixXd E(long(samples.size()), long(K));
    for (std::size_t n = 0; n < samples.size(); ++n)
        for (std::size_t k = 0; k < K; ++k) E(long(n), long(k)) = std::exp(-pairs[k].lambda * samples.time(n));
    return E * coef;
}

// Penalty on second differences of the coefficients padded with zeros (h
// vanishes at both ends of its support). With no weight given it follows
// the discrepancy principle: the residual may grow to `factor` times the
// unregularized one, which measures the modal-model error of V.
SupportedFit fit_supported_data(const Profile& V, const BoundaryTrace& samples, double epsilon, std::size_t nb,
                                std::size_t K, double factor, std::optional<double> alpha)
{
    const Eigen::MatrixXd A = flux_matrix(V, samples, epsilon, nb, K);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(samples.values().data(), long(samples.size()));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(long(nb + 2), long(nb));
    for (std::size_t i = 0; i < nb + 2; ++i)
        for (int d = 0; d < 3; ++d) {
            const long col = long(i) + d - 2;
            if (col >= 0 && col < long(nb)) P(long(i), col) = d == 1 ? -2.0 : 1.0;
        }
    const double ynorm = y.norm();
    if (ynorm == 0.0) throw Error(ErrorKind::data, "flux samples are identically zero");
    P *= A.norm() / P.norm();
    auto solve_with = [&](double a) {
        Eigen::MatrixXd M(A.rows() + P.rows(), long(nb));
        M << A, std::sqrt(a) * P;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M.rows());
        rhs.head(A.rows()) = y;
        return Eigen::VectorXd(M.colPivHouseholderQr().solve(rhs));
    };
    auto misfit_of = [&](const Eigen::VectorXd& v) { return (A * v - y).norm() / ynorm; };

    double a = alpha.value_or(0.0);
    if (!alpha) {
        const double target = factor * std::max(misfit_of(solve_with(0.0)), 1e-14);
        double lo = 1e-30, hi = 1.0;
        if (misfit_of(solve_with(hi)) <= target) lo = hi;
        else
            for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-6; ++i) {
                const double mid = std::sqrt(lo * hi);
                (misfit_of(solve_with(mid)) <= target ? lo : hi) = mid;
            }
        a = lo;
    }
    SupportedFit out;
    out.alpha = a;
    out.w = solve_with(a);
    out.misfit = misfit_of(out.w);

    const double hk = epsilon / double(nb + 3);
    std::vector<double> h(V.size(), 0.0);
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double x = V.node(j);
        if (x > epsilon) continue;
        for (std::size_t i = 0; i < nb; ++i) h[j] += out.w[long(i)] * cubic_bspline((x - hk * double(i + 2)) / hk);
    }
    out.h = Profile(V.interval(), std::move(h), ProfileKind::initial_data);
    return out;
}

}  // namespace

void InversionSettings::validate() const
{
    if (!(unknown_region.right > unknown_region.left))
        throw Error(ErrorKind::validation, "unknown region must have positive length");
    if (basis_count < 1) throw Error(ErrorKind::validation, "basis_count must be at least 1");
    if (!(regularization >= 0.0)) throw Error(ErrorKind::validation, "regularization must be non-negative");
    if (max_iterations < 1) throw Error(ErrorKind::validation, "max_iterations must be at least 1");
    if (!(misfit_tolerance > 0.0)) throw Error(ErrorKind::validation, "misfit_tolerance must be positive");
    if (grid_size < 9) throw Error(ErrorKind::validation, "grid_size must be at least 9");
}

// ---------------------------------------------------------------------------
// model

PartialSpectrumModel::PartialSpectrumModel(const Profile& known, const InversionSettings& settings,
                                           std::vector<std::size_t> indices)
    : known_(known), settings_(settings), indices_(std::move(indices))
{
    settings_.validate();
    if (indices_.empty()) throw Error(ErrorKind::validation, "no observed eigenvalues");
    const auto& u = settings_.unknown_region;
    const double left = std::min(known_.left(), u.left);
    const double right = std::max(known_.right(), u.right);
    // the known profile must cover what the unknown region leaves out
    if (known_.left() > u.right + edge_tol || known_.right() < u.left - edge_tol)
        throw Error(ErrorKind::validation, "known and unknown regions must meet");
    if (u.left > left + edge_tol && known_.left() > left + edge_tol)
        throw Error(ErrorKind::validation, "regions leave a gap at the left end");
    length0_ = right - left;
    if (std::abs(left) > edge_tol) throw Error(ErrorKind::validation, "potential interval must start at 0");
    if (settings_.fit_length) {
        if (!(u.right < right - edge_tol)) throw Error(ErrorKind::validation, "length fit needs a known part on the right");
        if (known_.max_value() - known_.min_value() > 1e-12)
            throw Error(ErrorKind::validation, "length fit needs a constant known part");
    }

    const bool left_junction = u.left > left + edge_tol;
    const bool right_junction = u.right < right - edge_tol;
    // centres h .. (m - 1) h; the two outer splines absorb the spline centred
    // on the region end (B_1 - B_0 / 4), so every basis function vanishes at
    // both ends while slope and curvature stay free
    const long m = long(settings_.basis_count) + 1;
    knot_spacing_ = u.length() / double(m);
    first_center_ = 1;

    const std::size_t kmax = *std::max_element(indices_.begin(), indices_.end());
    grid_ = std::max(settings_.grid_size, 4 * kmax + 1);

    const auto d1 = derivative(known_, 1), d2 = derivative(known_, 2);
    auto junction_at = [&](double x) {
        const double xc = std::clamp(x, known_.left(), known_.right());
        return Junction{x, known_(xc), d1(xc), d2(xc), 0.5 * u.length(), {}};
    };
    if (left_junction) junctions_.push_back(junction_at(u.left));
    if (right_junction) junctions_.push_back(junction_at(u.right));
    // junction values: linear blend between two junctions, constant for one
    if (junctions_.size() == 2) {
        const double a = u.left, b = u.right;
        junctions_[0].share = [a, b](double x) { return (b - x) / (b - a); };
        junctions_[1].share = [a, b](double x) { return (x - a) / (b - a); };
    } else if (junctions_.size() == 1) {
        junctions_[0].share = [](double) { return 1.0; };
        junctions_[0].reach = u.length();
    }
}

std::size_t PartialSpectrumModel::parameter_count() const noexcept
{
    return settings_.basis_count + (settings_.fit_length ? 1 : 0);
}

Interval PartialSpectrumModel::interval(double length) const { return {0.0, length}; }

double PartialSpectrumModel::basis(std::size_t i, double x) const
{
    const auto& u = settings_.unknown_region;
    if (x < u.left || x > u.right) return 0.0;
    const double s = (x - u.left) / knot_spacing_;
    const double j = double(first_center_ + long(i));
    double v = cubic_bspline(s - j);
    const double last = double(settings_.basis_count);
    if (i == 0) v -= 0.25 * cubic_bspline(s);
    if (i + 1 == settings_.basis_count) v -= 0.25 * cubic_bspline(s - last - 1.0);
    return v;
}

Profile PartialSpectrumModel::potential(const std::vector<double>& theta, double length) const
{
    return Profile::from_function(interval(length), grid_,
                                  [&](double x) {
                                      double v = base(x);
                                      for (std::size_t i = 0; i < settings_.basis_count; ++i) v += theta[i] * basis(i, x);
                                      return v;
                                  },
                                  ProfileKind::potential);
}

double PartialSpectrumModel::base(double x) const
{
    if (x >= known_.left() && x <= known_.right()) return known_(x);
    if (x > known_.right()) return known_.samples().back();
    double v = 0.0;
    for (const auto& j : junctions_) {
        // second-order Taylor continuation under a flat window (C2 join)
        const double d = x - j.x;
        const double s = std::min(std::abs(d) / j.reach, 1.0);
        const double w = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        v += j.value * j.share(x) + w * (j.slope * d + 0.5 * j.curvature * d * d);
    }
    if (junctions_.empty()) return 0.0;
    return v;
}

std::vector<double> PartialSpectrumModel::eigenvalues(const std::vector<double>& theta, double length) const
{
    const auto V = potential(theta, length);
    const auto all = dirichlet_eigenvalues(V, *std::max_element(indices_.begin(), indices_.end()));
    std::vector<double> out;
    for (std::size_t k : indices_) out.push_back(all.modes[k - 1].lambda);
    return out;
}

PartialSpectrumModel::Linearization PartialSpectrumModel::linearize(const std::vector<double>& theta,
                                                                    double length) const
{
    const auto V = potential(theta, length);
    const auto pairs = dirichlet_eigenpairs(V, *std::max_element(indices_.begin(), indices_.end()));
    // V is the spline through its grid samples, so d lambda / d theta_i is
    // the integral of phi^2 against the spline through beta_i's samples;
    // both are evaluated on a 4x refined grid
    const std::size_t fine = 4 * (V.size() - 1) + 1;
    const double hf = V.length() / double(fine - 1);
    std::vector<std::vector<double>> beta_fine;
    for (std::size_t i = 0; i < settings_.basis_count; ++i) {
        std::vector<double> samples(V.size());
        for (std::size_t j = 0; j < V.size(); ++j) samples[j] = basis(i, V.node(j));
        const Profile S(V.interval(), std::move(samples), ProfileKind::auxiliary);
        std::vector<double> f(fine);
        for (std::size_t j = 0; j < fine; ++j) f[j] = S(V.left() + hf * double(j));
        beta_fine.push_back(std::move(f));
    }
    Linearization lin;
    std::vector<double> phi2(fine), prod(fine);
    for (std::size_t k : indices_) {
        const auto& pair = pairs[k - 1];
        lin.lambda.push_back(pair.lambda);
        for (std::size_t j = 0; j < fine; ++j) {
            const double p = pair.eigenfunction(V.left() + hf * double(j));
            phi2[j] = p * p;
        }
        std::vector<double> row;
        for (std::size_t i = 0; i < settings_.basis_count; ++i) {
            for (std::size_t j = 0; j < fine; ++j) prod[j] = phi2[j] * beta_fine[i][j];
            row.push_back(numerics::simpson(prod, hf));
        }
        if (settings_.fit_length) row.push_back(-pair.right_slope * pair.right_slope);
        lin.jacobian.push_back(std::move(row));
    }
    return lin;
}

// ---------------------------------------------------------------------------
// partial-spectrum inversion

PotentialReconstruction recover_potential_from_partial_spectrum(const ModeSet& observed, const Profile& known,
                                                                 const InversionSettings& settings)
{
    settings.validate();
    std::vector<std::size_t> idx;
    std::vector<double> obs;
    for (const auto& m : observed.modes) {
        if (m.index == 0) throw Error(ErrorKind::validation, "observed eigenvalues must carry their index");
        if (!idx.empty() && m.index <= idx.back())
            throw Error(ErrorKind::validation, "observed indices must increase");
        idx.push_back(m.index);
        obs.push_back(m.lambda);
    }
    if (idx.empty()) throw Error(ErrorKind::validation, "no observed eigenvalues");

    const PartialSpectrumModel model(known, settings, idx);
    const std::size_t nb = settings.basis_count;
    const std::size_t np = model.parameter_count();
    if (obs.size() < np && settings.regularization == 0.0)
        throw Error(ErrorKind::conditioning, "fewer observed eigenvalues (" + std::to_string(obs.size()) +
                                                 ") than unknowns (" + std::to_string(np) + ") without regularization");

    // second differences of theta
    const std::size_t nd = nb >= 3 ? nb - 2 : 0;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(long(nd), long(np));
    for (std::size_t i = 0; i < nd; ++i) {
        D(long(i), long(i)) = 1.0;
        D(long(i), long(i + 1)) = -2.0;
        D(long(i), long(i + 2)) = 1.0;
    }
    const double alpha = settings.regularization;
    double obs_norm = 0.0;
    for (double v : obs) obs_norm += v * v;
    obs_norm = std::sqrt(obs_norm);

    Eigen::VectorXd p = Eigen::VectorXd::Zero(long(np));
    if (settings.fit_length) p[long(nb)] = model.default_length();
    auto unpack = [&](const Eigen::VectorXd& v) {
        std::vector<double> theta(v.data(), v.data() + nb);
        const double len = settings.fit_length ? v[long(nb)] : model.default_length();
        return std::pair{theta, len};
    };
    const std::size_t nc = settings.constraints ? settings.constraints(model.potential(std::vector<double>(nb, 0.0), model.default_length()), model.default_length()).size() : 0;
    auto constraint_rows = [&](const std::vector<double>& th, double len) {
        std::vector<double> c = settings.constraints(model.potential(th, len), len);
        if (c.size() != nc) throw Error(ErrorKind::validation, "constraint row count changed");
        return c;
    };
    auto residual_at = [&](const std::vector<double>& lam, const std::vector<double>& th, double len) {
        Eigen::VectorXd r(long(obs.size() + nc));
        for (std::size_t k = 0; k < obs.size(); ++k) r[long(k)] = lam[k] - obs[k];
        if (nc > 0) {
            const auto c = constraint_rows(th, len);
            for (std::size_t j = 0; j < nc; ++j) r[long(obs.size() + j)] = obs_norm * c[j];
        }
        return r;
    };
    auto jacobian_at = [&](const PartialSpectrumModel::Linearization& l, const Eigen::VectorXd& v) {
        Eigen::MatrixXd J(long(obs.size() + nc), long(np));
        for (std::size_t k = 0; k < obs.size(); ++k)
            for (std::size_t i = 0; i < np; ++i) J(long(k), long(i)) = l.jacobian[k][i];
        for (std::size_t i = 0; i < np && nc > 0; ++i) {
            const double hstep = 1e-6 * (1.0 + std::abs(v[long(i)]));
            Eigen::VectorXd up = v, dn = v;
            up[long(i)] += hstep;
            dn[long(i)] -= hstep;
            const auto [tu, lu] = unpack(up);
            const auto [td, ld] = unpack(dn);
            const auto cu = constraint_rows(tu, lu);
            const auto cd = constraint_rows(td, ld);
            for (std::size_t j = 0; j < nc; ++j)
                J(long(obs.size() + j), long(i)) = obs_norm * (cu[j] - cd[j]) / (2.0 * hstep);
        }
        return J;
    };
    auto objective = [&](const Eigen::VectorXd& r, const Eigen::VectorXd& v) {
        return 0.5 * r.squaredNorm() + 0.5 * alpha * (D * v).squaredNorm();
    };

    PotentialReconstruction out;
    std::size_t rising = 0;
    auto [theta0, len0] = unpack(p);
    auto lin = model.linearize(theta0, len0);
    Eigen::VectorXd r = residual_at(lin.lambda, theta0, len0);
    double phi = objective(r, p);
    out.misfit_history.push_back(r.norm() / obs_norm);
    out.objective_history.push_back(phi);

    for (std::size_t it = 0; it < settings.max_iterations; ++it) {
        if (out.misfit_history.back() < settings.misfit_tolerance) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd J = jacobian_at(lin, p);
        const Eigen::MatrixXd A = J.transpose() * J + alpha * D.transpose() * D;
        const Eigen::VectorXd g = J.transpose() * r + alpha * D.transpose() * (D * p);
        const Eigen::VectorXd step = -A.completeOrthogonalDecomposition().solve(g);
        if (!step.allFinite()) throw Error(ErrorKind::conditioning, "Gauss-Newton system is singular");

        // backtracking on the regularized objective
        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial;
        Eigen::VectorXd r_trial;
        PartialSpectrumModel::Linearization lin_trial;
        double phi_trial = 0.0;
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
            trial = p + t * step;
            const auto [th, len] = unpack(trial);
            if (settings.fit_length && !(len > settings.unknown_region.right)) continue;
            try {
                lin_trial = model.linearize(th, len);
                r_trial = residual_at(lin_trial.lambda, th, len);
            } catch (const Error&) {
                continue;  // trial potential outside the solver's range
            }
            phi_trial = objective(r_trial, trial);
            if (phi_trial <= phi + 1e-4 * t * g.dot(step)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // no descent along the Gauss-Newton direction

        const double prev_misfit = out.misfit_history.back();
        const double prev_phi = phi;
        p = trial;
        phi = phi_trial;
        lin = std::move(lin_trial);
        r = r_trial;
        const double mis = r.norm() / obs_norm;
        out.misfit_history.push_back(mis);
        out.objective_history.push_back(phi);
        out.iterations = it + 1;
        if (prev_phi - phi <= 1e-10 * prev_phi) break;  // stagnated
        rising = mis > prev_misfit * (1.0 + 1e-3) ? rising + 1 : 0;
        if (rising >= 3) {
            std::string trace;
            for (double m : out.misfit_history) trace += " " + std::to_string(m);
            throw Error(ErrorKind::optimization, "misfit increased on 3 consecutive steps:" + trace);
        }
        if (t * step.norm() <= 1e-13 * (1.0 + p.norm())) break;
    }

    const auto [theta, len] = unpack(p);
    out.coefficients = theta;
    out.length = len;
    out.V = model.potential(theta, len);
    out.misfit = out.misfit_history.back();
    out.converged = out.converged || out.misfit < settings.misfit_tolerance;

    for (std::size_t k = 1; k < obs.size(); ++k) {
        const double gap = std::sqrt(std::max(obs[k], 0.0)) - std::sqrt(std::max(obs[k - 1], 0.0));
        if (gap > 1.6 * pi / len * double(idx[k] - idx[k - 1])) out.gap_flags.push_back(idx[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// wave pipeline

SpeedReconstruction recover_speed_pipeline(const BoundaryTrace& trace, double c0, const InversionSettings& settings,
                                           const SpeedPipelineOptions& options)
{
    SpeedReconstruction out;
    const auto zeros = run_stage("travel-time scan", [&] {
        return cosine_transform_zeros(trace, c0, options.scan_modes, pi / 64.0).confident(options.confidence_threshold);
    });
    out.L_scan = run_stage("travel-time fit", [&] { return travel_time_from_spectrum(zeros, 1.0); });
    const double L0 = out.L_scan;

    out.spectrum = run_stage("extended spectrum", [&] {
        return extended_interval_spectrum(trace, c0, L0, options.mode_count, options.confidence_threshold);
    });
    const auto observed = out.spectrum.modes.confident(options.confidence_threshold);

    InversionSettings s = settings;
    s.unknown_region = {0.0, L0};
    s.fit_length = true;
    // c = c0 with zero slope at both ends of [0, 1]: u = c^(-1/2) solves
    // u'' = q u from (u0, 0) and must return to (u0, 0) with x = int u^-2 = 1
    s.constraints = [L0, c0](const Profile& V, double length) {
        const double L = length - L0;
        const double u0 = 1.0 / std::sqrt(c0);
        const std::size_t steps = 1024;
        const double h = L / double(steps);
        std::array<double, 3> y{u0, 0.0, 0.0};
        auto f = [&](double t, const std::array<double, 3>& v) {
            const double u = std::max(v[0], 1e-3 * u0);
            return std::array<double, 3>{v[1], V(std::clamp(t, V.left(), V.right())) * v[0], 1.0 / (u * u)};
        };
        for (std::size_t i = 0; i < steps; ++i) {
            const double t = double(i) * h;
            const auto k1 = f(t, y);
            std::array<double, 3> a, b, c;
            for (int j = 0; j < 3; ++j) a[j] = y[j] + 0.5 * h * k1[j];
            const auto k2 = f(t + 0.5 * h, a);
            for (int j = 0; j < 3; ++j) b[j] = y[j] + 0.5 * h * k2[j];
            const auto k3 = f(t + 0.5 * h, b);
            for (int j = 0; j < 3; ++j) c[j] = y[j] + h * k3[j];
            const auto k4 = f(t + h, c);
            for (int j = 0; j < 3; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        return std::vector<double>{y[0] / u0 - 1.0, y[1] * L / u0, y[2] - 1.0};
    };
    const auto known = Profile::constant({L0, 2.0 * L0}, 9, 0.0, ProfileKind::potential);
    out.inversion = run_stage("potential inversion",
                              [&] { return recover_potential_from_partial_spectrum(observed, known, s); });
    out.L = out.inversion.length - L0;
    if (std::abs(out.L - L0) > 0.02 * L0)
        throw Error(ErrorKind::consistency, "refined travel time " + std::to_string(out.L) +
                                                " differs from the Weyl estimate " + std::to_string(L0) + " by more than 2%");

    const std::size_t nq = std::max<std::size_t>(out.inversion.V.size() / 2 + 1, 9);
    out.q = out.inversion.V.on({0.0, out.L}, nq);
    const auto c_raw = run_stage("speed recovery", [&] { return potential_to_speed(out.q, c0, options.speed_nodes); });
    auto c = c_raw.on({0.0, 1.0}, options.speed_nodes);
    // the background speed is known: pin both ends to c0
    std::vector<double> cs(c.samples().begin(), c.samples().end());
    cs.front() = cs.back() = c0;
    out.c = Profile({0.0, 1.0}, std::move(cs), ProfileKind::speed);
    return out;
}

// ---------------------------------------------------------------------------
// wave initial data

WaveDataReconstruction recover_wave_initial_data(const Profile& c, const BoundaryTrace& trace,
                                                 const WaveInversionOptions& options)
{
    if (trace.flavor() != TraceFlavor::dirichlet) throw Error(ErrorKind::validation, "expected a Dirichlet trace");
    if (std::abs(trace.t0()) > 1e-12) throw Error(ErrorKind::validation, "trace must start at t = 0");
    WaveRunOptions run = options.run;
    run.t_max = trace.t_last();
    const auto grid = make_wave_grid(c, run);

    // data on the model's time levels
    std::vector<double> d(grid.steps + 1);
    if (trace.size() == d.size() && std::abs(trace.dt() - grid.dt) <= 1e-12 * grid.dt) {
        std::copy(trace.values().begin(), trace.values().end(), d.begin());
    } else {
        const Profile data({0.0, trace.t_last()}, {trace.values().begin(), trace.values().end()});
        for (std::size_t n = 0; n < d.size(); ++n) d[n] = data(std::min(grid.dt * double(n), trace.t_last()));
    }
    auto norm = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };

    WaveDataReconstruction out;
    std::vector<double> f(grid.receiver + 1, 0.0);
    const double dnorm = norm(d);
    if (dnorm == 0.0) {
        out.f = Profile::constant({0.0, 1.0}, grid.receiver + 1, 0.0, ProfileKind::initial_data);
        return out;
    }

    // CGLS on min |A f - d|
    std::vector<double> r = d;
    std::vector<double> s = wave_adjoint(grid, r);
    std::vector<double> p = s;
    double gamma = 0.0;
    for (double v : s) gamma += v * v;
    out.misfit_history.push_back(1.0);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        const auto q = wave_forward_trace(grid, p);
        double qq = 0.0;
        for (double v : q) qq += v * v;
        if (qq == 0.0) break;
        const double a = gamma / qq;
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += a * p[i];
        for (std::size_t n = 0; n < r.size(); ++n) r[n] -= a * q[n];
        const double mis = norm(r) / dnorm;
        out.misfit_history.push_back(mis);
        out.iterations = it + 1;
        if (mis < options.relative_tolerance) break;
        // stalled: less than 1% progress over the last 20 iterations
        const std::size_t h = out.misfit_history.size();
        if (h > 20 && mis > 0.99 * out.misfit_history[h - 21]) break;
        s = wave_adjoint(grid, r);
        double gnew = 0.0;
        for (double v : s) gnew += v * v;
        const double beta = gnew / gamma;
        gamma = gnew;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = s[i] + beta * p[i];
    }
    out.relative_misfit = out.misfit_history.back();
    if (out.relative_misfit > 10.0 * options.relative_tolerance)
        throw Error(ErrorKind::optimization, "wave inversion stalled at relative misfit " +
                                                 std::to_string(out.relative_misfit));
    f.front() = f.back() = 0.0;
    out.f = Profile({0.0, 1.0}, std::move(f), ProfileKind::initial_data);
    return out;
}

// ---------------------------------------------------------------------------
// heat initial data

HeatDataReconstruction recover_heat_initial_data(const Profile& V, const ModeSet& modes, const Profile& b,
                                                 double confidence_threshold)
{
    HeatDataReconstruction out;
    std::vector<const Mode*> use, skip;
    for (const auto& m : modes.modes) (m.confidence < confidence_threshold ? skip : use).push_back(&m);
    if (use.empty()) throw Error(ErrorKind::data, "no mode passes the confidence threshold");

    // indices: stored, else nearest eigenvalue of V
    double lam_max = 0.0;
    for (const Mode* m : use) lam_max = std::max(lam_max, m->lambda);
    const double vmin = V.min_value();
    std::size_t kmax = std::size_t(std::sqrt(std::max(lam_max - vmin, 0.0)) * V.length() / pi) + 3;
    for (const Mode* m : use) kmax = std::max(kmax, m->index);
    kmax = std::min(kmax, max_reliable_count(V));
    const auto pairs = dirichlet_eigenpairs(V, kmax);
    // nearest eigenvalue index, 0 when none lies within the matching tolerance
    auto nearest = [&](const Mode& m) {
        if (m.index != 0) return m.index;
        double best = 1e300;
        std::size_t k = 0;
        for (const auto& p : pairs)
            if (std::abs(p.lambda - m.lambda) < best) {
                best = std::abs(p.lambda - m.lambda);
                k = p.index;
            }
        return best > matching_tolerance * std::abs(m.lambda) ? std::size_t(0) : k;
    };
    for (const Mode* m : skip) out.skipped.push_back(nearest(*m));

    std::vector<double> h(V.size(), 0.0);
    std::vector<char> taken(kmax + 1, 0);
    for (const Mode* m : use) {
        const std::size_t k = nearest(*m);
        if (k == 0) throw Error(ErrorKind::matching, "mode " + std::to_string(m->lambda) + " is not an eigenvalue of V");
        if (k > kmax) throw Error(ErrorKind::resolution, "mode index beyond the resolved spectrum").with_limit(kmax);
        if (taken[k]++) throw Error(ErrorKind::matching, "two modes share index " + std::to_string(k));
        const auto& pair = pairs[k - 1];
        const double w = m->amplitude / pair.right_slope;
        for (std::size_t i = 0; i < h.size(); ++i) h[i] += w * pair.eigenfunction(V.node(i));
        out.used.push_back(k);
    }
    h.front() = h.back() = 0.0;
    out.h = Profile(V.interval(), std::move(h), ProfileKind::initial_data);
    const auto hb = b.size() == V.size() ? b : b.resampled(V.size());
    out.g = gauge_initial_data(out.h, hb, GaugeDirection::inverse);
    const double dh = l2_norm(derivative(out.h, 1));
    out.truncation_estimate = dh / (pi * std::sqrt(double(out.used.size())));
    return out;
}

// ---------------------------------------------------------------------------
// heat pipeline

HeatPipelineResult invert_heat_pipeline(const BoundaryTrace& samples, const Profile& b_known, double epsilon,
                                        const InversionSettings& settings, const HeatPipelineOptions& options)
{
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(ErrorKind::validation, "epsilon must lie in (0, 1/2)");
    const double split = 0.5 - epsilon;
    if (b_known.left() > split + 1e-12 || std::abs(b_known.right() - 1.0) > 1e-12)
        throw Error(ErrorKind::validation, "supp_cond: b must be known on [1/2 - eps, 1]");

    HeatPipelineResult out;
    out.extraction = run_stage("mode extraction", [&] { return fit_exponential_modes(samples, options.extract_modes); });
    ModeSet observed = out.extraction.modes.confident(options.confidence_threshold);
    if (observed.empty()) throw Error(ErrorKind::data, "mode extraction: no confident modes");

    if (b_known.left() <= edge_tol) {
        // nothing unknown: V from b, g by modal synthesis from the amplitudes
        out.b = b_known;
        out.V = convection_to_potential(b_known);
        const auto data = run_stage("modal synthesis", [&] {
            return recover_heat_initial_data(out.V, observed, out.b, options.confidence_threshold);
        });
        out.g = data.g;
        out.observed_fraction = 1.0;
        return out;
    }
    const auto V_known = convection_to_potential(b_known.on({split, 1.0}, std::max<std::size_t>(b_known.size(), 9)));
    // index from Weyl ordering: lambda_k ~ (k pi)^2 + mean V
    const double vbar = integral(V_known) / V_known.length();
    std::size_t last = 0;
    for (auto& m : observed.modes) {
        const auto k = std::size_t(std::lround(std::sqrt(std::max(m.lambda - vbar, 1.0)) / pi));
        m.index = std::max(k, last + 1);
        last = m.index;
    }

    InversionSettings s = settings;
    s.unknown_region = {0.0, split};
    s.fit_length = false;
    out.inversion = run_stage("potential inversion",
                              [&] { return recover_potential_from_partial_spectrum(observed, V_known, s); });
    const std::size_t nv = std::max(options.grid_size, out.inversion.V.size());
    out.V = out.inversion.V.size() == nv ? out.inversion.V : out.inversion.V.resampled(nv);
    out.b = run_stage("convection recovery", [&] { return recover_convection(out.V, b_known(1.0)); });

    const std::size_t nb = options.data_basis;
    if (nb < 1) throw Error(ErrorKind::validation, "data_basis must be at least 1");
    // modes beyond exp(-lambda t_first) < e^-40 cannot reach the samples
    const double t_first = std::max(samples.t0(), 1e-12);
    const auto needed = std::size_t(std::sqrt(40.0 / t_first) / pi) + 8;
    const std::size_t K = std::min({options.model_modes, needed, max_reliable_count(out.V)});
    SupportedFit fit = run_stage("initial data fit", [&] {
        return fit_supported_data(out.V, samples, epsilon, nb, K, options.discrepancy_factor, std::nullopt);
    });

    out.data_misfit = fit.misfit;
    out.g = gauge_initial_data(fit.h, out.b, GaugeDirection::inverse);

    // density audit against the spectrum of the recovered potential
    const std::size_t kref = std::min(K, observed.modes.back().index);
    ModeSet reference = run_stage("density audit", [&] { return dirichlet_eigenvalues(out.V, kref); });
    for (std::size_t k = 0; k < reference.size(); ++k) reference.modes[k].index = k + 1;
    out.density = run_stage("density audit", [&] { return mode_density_report(observed, reference, epsilon); });
    const auto& cnt = out.density.counts;
    if (cnt.size() > 0) {
        const std::size_t i = cnt.size() - 1;
        out.observed_fraction = cnt.matched_fraction(i);
        const double budget = (1.0 - 2.0 * epsilon) * double(cnt.total[i]) + epsilon;
        if (double(cnt.matched[i]) < budget) {
            out.information_deficit = true;
            out.warning = "observed " + std::to_string(cnt.matched[i]) + " of " + std::to_string(cnt.total[i]) +
                          " eigenvalues, below the uniqueness budget " + std::to_string(budget);
        }
    }
    return out;
}

}  // namespace passive
