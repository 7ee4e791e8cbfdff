#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "swe/error.hpp"
#include "swe/grid.hpp"
#include "swe/quadrature.hpp"

/// Spatial correlation kernels gamma and their spectral measures mu.
///
/// The Fourier convention is F f(xi) = int exp(-2 pi i xi.x) f(x) dx, so gamma = F mu
/// and a radial kernel has a radial spectral density.
namespace swe::kernels {

/// gamma(x) = |x|^-beta, 0 < beta < 3.
struct Riesz {
    double beta;
};

/// gamma(x) = exp(-|x|^2 / (2 scale^2)); gamma(0) = 1.
struct GaussianKernel {
    double scale;
};

/// User-supplied radial kernel. `density` is the Lebesgue density of mu as a
/// function of |xi| and must be nonnegative.
struct Custom {
    std::function<double(double)> gamma;
    std::function<double(double)> density;
    bool integrable = false;            ///< gamma in L^1(R^3)
    bool singular_at_origin = false;    ///< gamma (and usually the density) blows up at 0
    double l1_norm = std::numeric_limits<double>::quiet_NaN();
};

class CorrelationKernel {
public:
    using Variant = std::variant<Riesz, GaussianKernel, Custom>;

    static CorrelationKernel riesz(double beta) {
        if (!(beta > 0.0 && beta < 3.0))
            throw DomainError("Riesz beta must lie in (0,3), got " + std::to_string(beta));
        return CorrelationKernel(Riesz{beta}, "riesz(beta=" + std::to_string(beta) + ")");
    }
    static CorrelationKernel gaussian(double scale) {
        if (!(scale > 0.0 && std::isfinite(scale)))
            throw DomainError("Gaussian kernel scale must be positive");
        return CorrelationKernel(GaussianKernel{scale},
                                 "gaussian(scale=" + std::to_string(scale) + ")");
    }
    static CorrelationKernel custom(Custom c, std::string description) {
        if (!c.gamma || !c.density) throw DomainError("custom kernel needs gamma and density");
        return CorrelationKernel(std::move(c), std::move(description));
    }

    const Variant& variant() const noexcept { return kernel_; }
    const std::string& description() const noexcept { return description_; }

    bool is_riesz() const noexcept { return std::holds_alternative<Riesz>(kernel_); }
    double riesz_beta() const { return std::get<Riesz>(kernel_).beta; }

    /// gamma in L^1 (the "integrable kernel" case of the CLT).
    bool integrable() const {
        return std::visit([](const auto& k) { return integrable_impl(k); }, kernel_);
    }
    /// Riesz with beta in (0,2), where the spectral measure satisfies Dalang's condition.
    bool riesz_dalang_admissible() const { return is_riesz() && riesz_beta() < 2.0; }

private:
    CorrelationKernel(Variant v, std::string d) : kernel_(std::move(v)), description_(std::move(d)) {}

    static bool integrable_impl(const Riesz&) { return false; }
    static bool integrable_impl(const GaussianKernel&) { return true; }
    static bool integrable_impl(const Custom& c) { return c.integrable; }

    Variant kernel_;
    std::string description_;
};

/// c_beta with F(|x|^-beta) = c_beta |xi|^(beta-3).
inline double riesz_constant(double beta) {
    if (!(beta > 0.0 && beta < 3.0))
        throw DomainError("riesz_constant: beta must lie in (0,3)");
    // Grows like 2/(3 - beta) as beta -> 3 (pole of Gamma((3-beta)/2)).
    return std::pow(std::numbers::pi, beta - 1.5) * std::tgamma(0.5 * (3.0 - beta)) /
           std::tgamma(0.5 * beta);
}

/// gamma as a function of r = |x|.
inline double gamma_radial(const CorrelationKernel& k, double r) {
    return std::visit(
        [r](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Riesz>) {
                if (r == 0.0) throw DomainError("Riesz kernel is singular at x = 0");
                return std::pow(r, -v.beta);
            } else if constexpr (std::is_same_v<T, GaussianKernel>) {
                return std::exp(-0.5 * r * r / (v.scale * v.scale));
            } else {
                if (r == 0.0 && v.singular_at_origin)
                    throw DomainError("custom kernel is singular at x = 0");
                return v.gamma(r);
            }
        },
        k.variant());
}

inline double gamma_eval(const CorrelationKernel& k, const Vec3& x) { return gamma_radial(k, norm(x)); }

/// Density of mu as a function of r = |xi|.
inline double density_radial(const CorrelationKernel& k, double r) {
    return std::visit(
        [r](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Riesz>) {
                if (r == 0.0)
                    throw DomainError("Riesz spectral density diverges at xi = 0");
                return riesz_constant(v.beta) * std::pow(r, v.beta - 3.0);
            } else if constexpr (std::is_same_v<T, GaussianKernel>) {
                const double s2 = v.scale * v.scale;
                return std::pow(2.0 * std::numbers::pi * s2, 1.5) *
                       std::exp(-2.0 * std::numbers::pi * std::numbers::pi * s2 * r * r);
            } else {
                const double d = v.density(r);
                if (d < 0.0 || std::isnan(d))
                    throw DomainError("custom spectral density is negative or NaN");
                return d;
            }
        },
        k.variant());
}

inline double spectral_density(const CorrelationKernel& k, const Vec3& xi) {
    return density_radial(k, norm(xi));
}

/// ||gamma||_1 = density of mu at 0; infinite for Riesz.
inline double l1_norm(const CorrelationKernel& k) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Riesz>) {
                return std::numeric_limits<double>::infinity();
            } else if constexpr (std::is_same_v<T, GaussianKernel>) {
                return std::pow(2.0 * std::numbers::pi, 1.5) * v.scale * v.scale * v.scale;
            } else {
                return v.integrable ? v.l1_norm : std::numeric_limits<double>::infinity();
            }
        },
        k.variant());
}

/// m(rho) = int_0^rho density(r) r^2 dr (radial mass profile without the 4 pi).
inline double radial_mass(const CorrelationKernel& k, double rho) {
    if (rho <= 0.0) return 0.0;
    if (k.is_riesz()) {
        const double b = k.riesz_beta();
        return riesz_constant(b) * std::pow(rho, b) / b;
    }
    return quad::tanh_sinh([&](double r) { return density_radial(k, r) * r * r; }, 0.0, rho,
                           1e-13);
}

/// mu([-a, a]^3): exact radial integration along rays through each cube face.
inline double spectral_mass_centered_cube(const CorrelationKernel& k, double a) {
    // cube = 6 faces; on the face z = 1 the ray through (x, y, 1) leaves the
    // cube at radius a sqrt(1 + x^2 + y^2) and dOmega = dx dy / (1+x^2+y^2)^{3/2}.
    const auto& rule = quad::legendre(16);
    double total = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            const double s = 1.0 + rule.nodes[i] * rule.nodes[i] + rule.nodes[j] * rule.nodes[j];
            total += rule.weights[i] * rule.weights[j] * std::pow(s, -1.5) *
                     radial_mass(k, a * std::sqrt(s));
        }
    }
    return 6.0 * total;
}

/// mu(center + [-a, a]^3) by tensor Gauss-Legendre; the cube must not contain 0.
inline double spectral_mass_cube(const CorrelationKernel& k, const Vec3& center, double a,
                                 int points) {
    const auto& rule = quad::legendre(points);
    double total = 0.0;
    const std::size_t n = rule.nodes.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t l = 0; l < n; ++l) {
                const Vec3 xi{center[0] + a * rule.nodes[i], center[1] + a * rule.nodes[j],
                              center[2] + a * rule.nodes[l]};
                total += rule.weights[i] * rule.weights[j] * rule.weights[l] *
                         spectral_density(k, xi);
            }
    return total * a * a * a;
}

/// 4 pi r^2 times the density, written so Riesz kernels stay finite near r = 0.
inline double shell_density(const CorrelationKernel& k, double r) {
    if (k.is_riesz()) {
        const double b = k.riesz_beta();
        return 4.0 * std::numbers::pi * riesz_constant(b) * std::pow(r, b - 1.0);
    }
    return 4.0 * std::numbers::pi * r * r * density_radial(k, r);
}

struct DalangReport {
    double integral_value = 0.0;
    bool converged = false;
    std::vector<std::pair<double, double>> cutoff_history;  ///< (cutoff radius, partial value)
};

/// int <xi>^-2 mu(dxi) with doubling radial cutoffs 1, 2, 4, ... up to 2^64.
/// Converged once the last two doublings each changed the value by < 1%.
inline DalangReport check_dalang(const CorrelationKernel& k) {
    auto integrand = [&](double r) { return shell_density(k, r) / (1.0 + r * r); };

    DalangReport rep;
    double value = quad::tanh_sinh(integrand, 0.0, 1.0, 1e-12);
    rep.cutoff_history.emplace_back(1.0, value);

    int small_changes = 0;
    double cutoff = 1.0;
    for (int doubling = 0; doubling < 64; ++doubling) {
        const double next = quad::gk(integrand, cutoff, 2.0 * cutoff, 1e-12, 12);
        const double updated = value + next;
        const double rel = updated == 0.0 ? 0.0 : std::abs(next) / std::abs(updated);
        value = updated;
        cutoff *= 2.0;
        rep.cutoff_history.emplace_back(cutoff, value);
        small_changes = rel < 0.01 ? small_changes + 1 : 0;
        if (small_changes >= 2) {
            rep.converged = std::isfinite(value);
            break;
        }
    }
    rep.integral_value = value;
    return rep;
}

/// tau_beta = int_{B1 x B1} |x - y|^-beta dx dy.
///
/// The integrand depends only on r = |x - y|, whose density for two uniform
/// points of the unit ball is (3/16) r^2 (r^3 - 12 r + 16) on [0, 2]; the
/// remaining 1D integral has an exact antiderivative.
inline double tau_beta(double beta) {
    if (!(beta < 3.0)) throw DomainError("tau_beta diverges for beta >= 3");
    if (!(beta > 0.0)) throw DomainError("tau_beta: beta must be positive");
    const double ball = 4.0 * std::numbers::pi / 3.0;
    const double p6 = std::pow(2.0, 6.0 - beta) / (6.0 - beta);
    const double p4 = std::pow(2.0, 4.0 - beta) / (4.0 - beta);
    const double p3 = std::pow(2.0, 3.0 - beta) / (3.0 - beta);
    return ball * ball * (3.0 / 16.0) * (p6 - 12.0 * p4 + 16.0 * p3);
}

} // namespace swe::kernels
