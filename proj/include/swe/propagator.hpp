#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "swe/error.hpp"
#include "swe/grid.hpp"
#include "swe/quadrature.hpp"

/// Fourier multipliers of the 3D wave propagator G(t) and its mollifications.
namespace swe::propagator {

inline constexpr double kPi = std::numbers::pi;

/// sin(x)/x with the removable singularity filled in.
inline double sinc(double x) {
    if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

/// FG(t)(xi) = sin(2 pi t |xi|) / (2 pi |xi|); equals t at xi = 0.
inline double fourier_G(double t, double xi_norm) {
    if (t < 0.0) throw DomainError("fourier_G: t must be nonnegative");
    return t * sinc(2.0 * kPi * t * xi_norm);
}
inline double fourier_G(double t, const Vec3& xi) { return fourier_G(t, norm(xi)); }

/// Fourier transform of the indicator of the ball of radius R centered at 0.
inline double fourier_indicator_ball(double radius, double xi_norm) {
    if (!(radius > 0.0)) throw DomainError("fourier_indicator_ball: R must be positive");
    const double a = 2.0 * kPi * radius * xi_norm;
    const double r3 = radius * radius * radius;
    if (a < 1e-2) {
        const double a2 = a * a;
        return 4.0 * kPi * r3 * (1.0 / 3.0 - a2 / 30.0 + a2 * a2 / 840.0);
    }
    return 4.0 * kPi * r3 * (std::sin(a) - a * std::cos(a)) / (a * a * a);
}
inline double fourier_indicator_ball(double radius, const Vec3& xi) {
    return fourier_indicator_ball(radius, norm(xi));
}

/// Radial profile of the bump rho(x) = c exp(-1 / (1 - |x|^2)) on the unit ball (before normalization).
inline double bump_profile(double r) {
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r));
}

/// c such that int rho = 1.
inline double bump_normalization() {
    static const double c =
        1.0 / (4.0 * kPi * quad::gk([](double r) { return r * r * bump_profile(r); }, 0.0, 1.0, 1e-14));
    return c;
}

/// F rho(q) by direct radial quadrature (no table).
inline double fourier_bump_quadrature(double q) {
    const double c = bump_normalization();
    auto f = [q](double r) { return r * r * bump_profile(r) * sinc(2.0 * kPi * q * r); };
    const double width = q > 1.0 ? 0.5 / q : 1.0;
    return 4.0 * kPi * c * quad::panels(f, 0.0, 1.0, width, 1e-13);
}

/// F rho tabulated on a log-spaced radius grid with cubic B-spline interpolation.
///
/// Below q_min the Taylor expansion 1 - (2 pi q)^2 <|x|^2> / 6 is used; above
/// q_max the transform is below 1e-10 in magnitude and 0 is returned.
class FourierRhoTable {
public:
    static constexpr double q_min = 1e-3;
    static constexpr double q_max = 64.0;
    static constexpr int points = 4096;

    static const FourierRhoTable& instance() {
        static const FourierRhoTable table;
        return table;
    }

    double operator()(double q) const {
        q = std::abs(q);
        if (q < q_min) return 1.0 - (2.0 * kPi * q) * (2.0 * kPi * q) * second_moment_ / 6.0;
        if (q > q_max) return 0.0;
        return spline_(std::log(q));
    }

    double second_moment() const noexcept { return second_moment_; }
    const std::vector<double>& radii() const noexcept { return radii_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    FourierRhoTable() : radii_(points), values_(points), spline_(make()) {}

    boost::math::interpolators::cardinal_cubic_b_spline<double> make() {
        const double c = bump_normalization();
        second_moment_ = 4.0 * kPi * c *
                         quad::gk([](double r) { return r * r * r * r * bump_profile(r); }, 0.0, 1.0, 1e-14);
        // One fixed composite 16-point Gauss-Legendre rule on [0, 1] serves every q:
        // 512 panels resolve sinc(2 pi q_max r) with margin, and the bump is flat at r = 1.
        constexpr int panels = 512;
        const auto& rule = quad::legendre(16);
        std::vector<double> nodes, weights;
        for (int p = 0; p < panels; ++p) {
            const double a = double(p) / panels, half = 0.5 / panels;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double r = a + half * (rule.nodes[i] + 1.0);
                nodes.push_back(r);
                weights.push_back(4.0 * kPi * c * half * rule.weights[i] * r * r * bump_profile(r));
            }
        }
        const double lo = std::log(q_min);
        const double step = (std::log(q_max) - lo) / (points - 1);
        for (int i = 0; i < points; ++i) {
            radii_[i] = std::exp(lo + i * step);
            const double w = 2.0 * kPi * radii_[i];
            double sum = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) sum += weights[j] * sinc(w * nodes[j]);
            values_[i] = sum;
        }
        return boost::math::interpolators::cardinal_cubic_b_spline<double>(values_.begin(), values_.end(),
                                                                           lo, step);
    }

    double second_moment_ = 0.0;
    std::vector<double> radii_;
    std::vector<double> values_;
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
};

/// Dilation sequence {a_n}: increasing, positive, sum 1/a_n = 1.
class MollifierSequence {
public:
    /// a_n = 2^n, which sums to exactly 1.
    static MollifierSequence dyadic() { return MollifierSequence(); }

    /// Explicit finite prefix a_1..a_m of such a sequence.
    explicit MollifierSequence(std::vector<double> a) : a_(std::move(a)) {
        double inv_sum = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) {
            if (!(a_[i] > 0.0)) throw ConfigError("mollifier sequence must be positive");
            if (i > 0 && !(a_[i] > a_[i - 1]))
                throw ConfigError("mollifier sequence must be strictly increasing");
            inv_sum += 1.0 / a_[i];
        }
        if (inv_sum > 1.0 + 1e-12)
            throw ConfigError("mollifier sequence: partial sums of 1/a_n exceed 1");
    }

    double a(int n) const {
        if (n < 1) throw DomainError("mollifier index n must be >= 1");
        if (a_.empty()) return std::ldexp(1.0, n);
        if (n > static_cast<int>(a_.size())) throw DomainError("mollifier index beyond the given sequence");
        return a_[n - 1];
    }

    bool is_dyadic() const noexcept { return a_.empty(); }

private:
    MollifierSequence() = default;
    std::vector<double> a_;
};

/// F rho_n(xi) = F rho(xi / a_n).
inline double fourier_rho(int n, double xi_norm, const MollifierSequence& seq) {
    return FourierRhoTable::instance()(xi_norm / seq.a(n));
}
inline double fourier_rho(int n, const Vec3& xi, const MollifierSequence& seq) {
    return fourier_rho(n, norm(xi), seq);
}

/// F G_n(t)(xi) = F rho_n(xi) F G(t)(xi).
inline double fourier_G_n(int n, double t, double xi_norm, const MollifierSequence& seq) {
    return fourier_rho(n, xi_norm, seq) * fourier_G(t, xi_norm);
}
inline double fourier_G_n(int n, double t, const Vec3& xi, const MollifierSequence& seq) {
    return fourier_G_n(n, t, norm(xi), seq);
}

/// Multiplier of G_n(t) as a value type; evaluations factor through the shared table.
struct MollifiedMultiplier {
    int n;
    double t;
    MollifierSequence seq = MollifierSequence::dyadic();

    double operator()(const Vec3& xi) const { return fourier_G_n(n, t, xi, seq); }
    double operator()(double xi_norm) const { return fourier_G_n(n, t, xi_norm, seq); }
};

} // namespace swe::propagator
