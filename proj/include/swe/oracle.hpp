#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "swe/averages.hpp"
#include "swe/error.hpp"
#include "swe/kernels.hpp"
#include "swe/propagator.hpp"
#include "swe/quadrature.hpp"
#include "swe/solver.hpp"
#include "swe/stats.hpp"

/// Quadrature targets: additive-noise variances and the limiting covariances.
namespace swe::oracle {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kUnitBall = 4.0 * kPi / 3.0;

using kernels::shell_density;

/// int_0^{t1 ^ t2} (t1 - r)(t2 - r) dr.
inline double time_polynomial(double t1, double t2) {
    const double a = std::min(t1, t2);
    if (a <= 0.0) return 0.0;
    return t1 * t2 * a - 0.5 * (t1 + t2) * a * a + a * a * a / 3.0;
}

/// int_0^{t1 ^ t2} FG(t1 - s)(r) FG(t2 - s)(r) ds for |xi| = r.
inline double time_kernel(double t1, double t2, double r) {
    const double a = std::min(t1, t2);
    if (a <= 0.0) return 0.0;
    const double k = 2.0 * kPi * r;
    if (k * std::max(t1, t2) < 1e-2) {
        return quad::gauss_legendre(
            [&](double s) { return propagator::fourier_G(t1 - s, r) * propagator::fourier_G(t2 - s, r); }, 0.0,
            a, 8);
    }
    const double bracket = 0.5 * a * std::cos(k * (t1 - t2)) -
                           (std::sin(k * (t1 + t2)) - std::sin(k * (t1 + t2 - 2.0 * a))) / (4.0 * k);
    return bracket / (k * k);
}

/// c^2 int mu(dxi) |F1_{B_R}(xi)|^2 int_0^{t1 ^ t2} FG(t1 - s) FG(t2 - s) ds:
/// Cov(F_R(t1), F_R(t2)) for sigma = c.
///
/// Radial Gauss-Kronrod panels sized to the faster of the two oscillations
/// (ball transform and time kernel); the range doubles until a
/// non-oscillating envelope bounds the remaining tail by rel_tol.
inline double linear_covariance(double R, double t1, double t2, const kernels::CorrelationKernel& kernel,
                                 double c = 1.0, double rel_tol = 1e-6) {
    if (!(R > 0.0)) throw DomainError("linear_covariance: R must be positive");
    if (t1 < 0.0 || t2 < 0.0) throw DomainError("linear_covariance: times must be nonnegative");
    if (std::min(t1, t2) == 0.0 || c == 0.0) return 0.0;
    if (kernel.is_riesz() && !kernel.riesz_dalang_admissible())
        throw DomainError("linear_covariance: kernel violates Dalang's condition");

    auto integrand = [&](double r) {
        if (r == 0.0) return 0.0;
        const double f = propagator::fourier_indicator_ball(R, r);
        return shell_density(kernel, r) * f * f * time_kernel(t1, t2, r);
    };
    const double ball = kUnitBall * R * R * R;
    const double a = std::min(t1, t2);
    auto envelope = [&](double r) {
        const double x = 2.0 * kPi * R * r;
        const double fb = std::min(ball, 4.0 * kPi * R * R * R * (1.0 + x) / (x * x * x));
        const double k = 2.0 * kPi * r;
        const double tk = std::min(t1 * t2 * a, (0.5 * a + 0.5 / k) / (k * k));
        return shell_density(kernel, r) * fb * fb * tk;
    };

    const double width = 0.25 / std::max({R, t1 + t2, 1.0});
    double total = quad::tanh_sinh(integrand, 0.0, width, 1e-12);
    double lo = width;
    double hi = 1.0;
    std::ostringstream history;
    double prev_shell = 0.0;
    int rising = 0;
    for (int doubling = 0; doubling < 40; ++doubling) {
        total += quad::panels(integrand, lo, hi, width, 1e-10);
        const double tail = quad::gk(envelope, hi, std::numeric_limits<double>::infinity(), 1e-6, 15);
        history << " [" << hi << ": " << total << ", tail<=" << tail << "]";
        if (!std::isfinite(tail) || !std::isfinite(total)) break;
        if (std::abs(tail) <= rel_tol * std::abs(total)) return c * c * total;
        // An admissible envelope decays geometrically on dyadic shells past r ~ 1;
        // three non-decreasing shells in a row means the integral diverges.
        const double shell = quad::gk(envelope, hi, 2.0 * hi, 1e-6, 15);
        rising = doubling > 0 && shell >= prev_shell ? rising + 1 : 0;
        prev_shell = shell;
        if (rising >= 3) break;
        lo = hi;
        hi *= 2.0;
    }
    throw QuadratureError("linear_covariance did not converge; cutoff history:" + history.str());
}

/// Var F_R(t) for sigma = c.
inline double linear_variance(double R, double t, const kernels::CorrelationKernel& kernel, double c = 1.0) {
    if (t < 0.0) throw DomainError("linear_variance: t must be nonnegative");
    return linear_covariance(R, t, t, kernel, c);
}

/// Exact Var F_R(m dt) of the discrete additive scheme (sigma = c), optionally
/// for Picard iterate n: c^2 sum_k |N^3 w_k|^2 lambda_k dt sum_{j<m} (F rho_n sin(omega (m-j) dt)/omega)^2.
inline double lattice_linear_variance(const solver::SolverTables& tab, const averages::BallFunctional& ball,
                                      int m, double c = 1.0, int picard_iterate = 0) {
    require_same_grid(tab.grid, ball.weights().grid, "lattice_linear_variance");
    if (m < 0) throw DomainError("step count must be nonnegative");
    const std::vector<double>* factor = nullptr;
    if (picard_iterate > 0) {
        if (picard_iterate > static_cast<int>(tab.rho.size())) throw ConfigError("no mollifier table for iterate");
        factor = &tab.rho[picard_iterate - 1];
    }
    const auto d = solver::duhamel_factor(tab, m, factor);
    const auto& lambda = tab.sampler.weights().lambda;
    const auto& w = ball.spectrum();
    const double n3 = static_cast<double>(tab.grid.num_points());
    const double s = full_spectrum_sum(tab.grid, [&](std::size_t i) { return std::norm(w[i]) * lambda[i] * d[i]; });
    return c * c * n3 * n3 * s;
}

/// eta sampled on an increasing time grid starting at 0.
struct EtaCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderrs;
};

enum class LimitCase { l1, riesz };

struct LimitCovariance {
    LimitCase kind;
    double t1 = 0.0;
    double t2 = 0.0;
    double value = 0.0;
    double tau_beta = std::numeric_limits<double>::quiet_NaN();
    double lag_radius = std::numeric_limits<double>::quiet_NaN();
};

/// tau_beta int_0^{t1 ^ t2} (t1 - r)(t2 - r) eta(r)^2 dr with eta^2 linear
/// between grid nodes (trapezoid in eta^2, the polynomial weight exact).
inline LimitCovariance limit_covariance_riesz(double t1, double t2, double beta, const EtaCurve& eta) {
    LimitCovariance out{LimitCase::riesz, t1, t2, 0.0, kernels::tau_beta(beta)};
    const double a = std::min(t1, t2);
    if (a <= 0.0) return out;
    const auto& ts = eta.times;
    if (ts.size() != eta.values.size() || ts.empty()) throw ConfigError("eta curve is malformed");
    if (ts.front() > 1e-12) throw ConfigError("eta curve must start at r = 0");
    if (ts.back() < a - 1e-12) throw ConfigError("eta curve does not cover [0, min(t1, t2)]");
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (!(ts[i] > ts[i - 1])) throw ConfigError("eta curve times must increase");

    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < ts.size() && ts[i] < a; ++i) {
        const double r0 = ts[i], r1 = ts[i + 1];
        const double e0 = eta.values[i] * eta.values[i], e1 = eta.values[i + 1] * eta.values[i + 1];
        const double end = std::min(r1, a);
        auto f = [&](double r) {
            const double e2 = e0 + (e1 - e0) * (r - r0) / (r1 - r0);
            return (t1 - r) * (t2 - r) * e2;
        };
        acc += quad::gauss_legendre(f, r0, end, 4);
    }
    out.value = out.tau_beta * acc;
    return out;
}

/// |B_1| h^3 sum_{|lag| <= radius} Cov(u(t1, lag), u(t2, 0)).
inline LimitCovariance limit_covariance_l1(double t1, double t2, const stats::LagCurve& curve,
                                           double radius = std::numeric_limits<double>::quiet_NaN()) {
    if (std::isnan(radius)) radius = t1 + t2 + 2.0;
    if (radius < t1 + t2 + 2.0 * curve.grid.h() - 1e-12)
        throw ConfigError("lag truncation radius must be at least t1 + t2 + 2h");
    LimitCovariance out{LimitCase::l1, t1, t2, 0.0};
    out.lag_radius = radius;
    out.value = kUnitBall * curve.integral(radius);
    return out;
}

/// Additive (sigma = c) limit of R^-3 Cov(F_R(t1), F_R(t2)) for integrable gamma:
/// c^2 |B_1| ||gamma||_1 int_0^{t1 ^ t2} (t1 - r)(t2 - r) dr.
inline double l1_additive_limit(double t1, double t2, const kernels::CorrelationKernel& kernel, double c = 1.0) {
    if (!kernel.integrable()) throw DomainError("l1_additive_limit needs an integrable kernel");
    return c * c * kUnitBall * kernels::l1_norm(kernel) * time_polynomial(t1, t2);
}

/// Additive limit of R^(beta-6) Cov(F_R(t1), F_R(t2)) for the Riesz kernel.
inline double riesz_additive_limit(double t1, double t2, double beta, double c = 1.0) {
    return c * c * kernels::tau_beta(beta) * time_polynomial(t1, t2);
}

} // namespace swe::oracle
