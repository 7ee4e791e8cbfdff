#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "swe/kernels.hpp"

using namespace swe;
using kernels::CorrelationKernel;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double half_line(const std::function<double(double)>& f) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(f, 1e-14);
}

// Parseval with phi(x) = exp(-pi |x|^2) (its own transform):
// int |x|^-beta phi = c_beta int |xi|^(beta-3) phi, both sides as radial integrals.
double parseval_riesz_constant(double beta) {
    const double lhs = half_line([&](double r) { return 4 * kPi * std::pow(r, 2 - beta) * std::exp(-kPi * r * r); });
    const double rhs = half_line([&](double r) { return 4 * kPi * std::pow(r, beta - 1) * std::exp(-kPi * r * r); });
    return lhs / rhs;
}

// Distance density of two uniform points in the unit ball, integrated numerically.
double tau_by_distance_quadrature(double beta) {
    const double ball = 4 * kPi / 3;
    auto f = [&](double r) { return 3.0 / 16.0 * std::pow(r, 2 - beta) * (r * r * r - 12 * r + 16); };
    boost::math::quadrature::tanh_sinh<double> integrator;
    return ball * ball * integrator.integrate(f, 0.0, 2.0, 1e-13);
}

} // namespace

TEST_CASE("gamma_eval matches direct evaluation", "[kernels]") {
    CHECK(kernels::gamma_eval(CorrelationKernel::riesz(1.0), {0, 2, 0}) == Approx(0.5));
    CHECK(kernels::gamma_eval(CorrelationKernel::gaussian(1.0), {0, 0, 0}) == 1.0);
    CHECK(kernels::gamma_eval(CorrelationKernel::riesz(1.5), {0, 0, 4}) == Approx(0.125));
    CHECK_THROWS_AS(kernels::gamma_eval(CorrelationKernel::riesz(1.0), {0, 0, 0}), DomainError);
}

TEST_CASE("gamma_eval is even and radial", "[kernels]") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-5, 5);
    for (const auto& k : {CorrelationKernel::riesz(1.2), CorrelationKernel::gaussian(0.7)}) {
        for (int i = 0; i < 1000; ++i) {
            const Vec3 x{u(gen), u(gen), u(gen)};
            CHECK(kernels::gamma_eval(k, x) == kernels::gamma_eval(k, {-x[0], -x[1], -x[2]}));
            CHECK(kernels::gamma_eval(k, x) == Approx(kernels::gamma_eval(k, {x[2], x[0], x[1]})).epsilon(1e-12));
        }
    }
}

TEST_CASE("riesz_constant agrees with the Parseval oracle", "[kernels]") {
    for (double beta : {0.5, 1.0, 1.5, 2.0, 2.5}) {
        INFO("beta = " << beta);
        CHECK(kernels::riesz_constant(beta) == Approx(parseval_riesz_constant(beta)).epsilon(1e-9));
    }
    CHECK(kernels::riesz_constant(2.0) == Approx(kPi).epsilon(1e-12));
}

TEST_CASE("riesz_constant duality and domain", "[kernels]") {
    for (double beta : {0.3, 1.0, 1.5, 2.2})
        CHECK(kernels::riesz_constant(beta) * kernels::riesz_constant(3 - beta) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(kernels::riesz_constant(0.0), DomainError);
    CHECK_THROWS_AS(kernels::riesz_constant(3.0), DomainError);
    const double near3 = kernels::riesz_constant(3 - 1e-6);
    CHECK(std::isfinite(near3));
    CHECK(near3 > 1e5);
    // c_beta (3 - beta) -> 2 pi^1.5 / Gamma(3/2) = 4 pi.
    CHECK(near3 * (3 - (3 - 1e-6)) == Approx(4 * kPi).epsilon(1e-3));
}

TEST_CASE("spectral_density examples", "[kernels]") {
    CHECK(kernels::spectral_density(CorrelationKernel::riesz(2.0), {1, 0, 0}) == Approx(kPi));
    const auto g = CorrelationKernel::gaussian(1.0);
    CHECK(kernels::spectral_density(g, {0, 0, 0}) == Approx(kernels::l1_norm(g)));
    CHECK(kernels::l1_norm(g) == Approx(std::pow(2 * kPi, 1.5)));
    CHECK(kernels::spectral_density(CorrelationKernel::riesz(1.0), {0, 2, 0}) ==
          Approx(parseval_riesz_constant(1.0) / 4).epsilon(1e-9));
    CHECK_THROWS_AS(kernels::spectral_density(CorrelationKernel::riesz(1.0), {0, 0, 0}), DomainError);
}

TEST_CASE("spectral_density is nonnegative", "[kernels]") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-10, 10);
    for (const auto& k : {CorrelationKernel::riesz(0.5), CorrelationKernel::riesz(1.9), CorrelationKernel::gaussian(2.0)})
        for (int i = 0; i < 1000; ++i) CHECK(kernels::spectral_density(k, {u(gen), u(gen), u(gen)}) >= 0.0);
}

TEST_CASE("custom kernel rejects a negative density", "[kernels]") {
    kernels::Custom c;
    c.gamma = [](double) { return 1.0; };
    c.density = [](double r) { return r < 1 ? -1.0 : 0.0; };
    const auto k = CorrelationKernel::custom(c, "bad");
    CHECK_THROWS_AS(kernels::density_radial(k, 0.5), DomainError);
}

TEST_CASE("Parseval consistency for the Gaussian kernel", "[kernels]") {
    // phi(x) = exp(-pi a |x|^2) has F phi(xi) = a^-1.5 exp(-pi |xi|^2 / a).
    const double a = 0.8;
    const auto k = CorrelationKernel::gaussian(1.3);
    const double lhs = half_line([&](double r) { return 4 * kPi * r * r * kernels::gamma_radial(k, r) * std::exp(-kPi * a * r * r); });
    const double rhs = half_line([&](double r) {
        return 4 * kPi * r * r * kernels::density_radial(k, r) * std::pow(a, -1.5) * std::exp(-kPi * r * r / a);
    });
    CHECK(lhs == Approx(rhs).epsilon(1e-6));
}

TEST_CASE("check_dalang follows the beta < 2 threshold", "[kernels]") {
    for (double beta : {0.5, 1.0, 1.5, 1.9}) {
        INFO("beta = " << beta);
        const auto rep = kernels::check_dalang(CorrelationKernel::riesz(beta));
        CHECK(rep.converged);
        CHECK(rep.cutoff_history.size() >= 3);
    }
    for (double beta : {2.0, 2.5}) {
        INFO("beta = " << beta);
        CHECK_FALSE(kernels::check_dalang(CorrelationKernel::riesz(beta)).converged);
    }
    CHECK(kernels::check_dalang(CorrelationKernel::gaussian(1.0)).converged);
}

TEST_CASE("check_dalang value for Riesz beta = 1", "[kernels]") {
    // int <xi>^-2 c_1 |xi|^-2 dxi = 4 pi c_1 int dr / (1 + r^2) = 2 pi^2 c_1.
    const auto rep = kernels::check_dalang(CorrelationKernel::riesz(1.0));
    CHECK(rep.integral_value == Approx(2 * kPi * kPi * kernels::riesz_constant(1.0)).epsilon(0.02));
}

TEST_CASE("tau_beta closed form", "[kernels]") {
    const double ball = 4 * kPi / 3;
    CHECK(kernels::tau_beta(1e-9) == Approx(ball * ball).epsilon(1e-8));
    CHECK(kernels::tau_beta(1.0) == Approx(1.2 * ball * ball).epsilon(1e-13));
    CHECK(kernels::tau_beta(1.0) == Approx(21.0552).epsilon(1e-5));
    for (double beta : {0.25, 0.5, 1.5, 1.9, 2.5})
        CHECK(kernels::tau_beta(beta) == Approx(tau_by_distance_quadrature(beta)).epsilon(1e-8));
    CHECK_THROWS_AS(kernels::tau_beta(3.0), DomainError);
    CHECK_THROWS_AS(kernels::tau_beta(3.5), DomainError);
}

TEST_CASE("tau_beta is increasing in beta", "[kernels]") {
    double prev = 0.0;
    for (double beta = 0.1; beta <= 2.5 + 1e-12; beta += 0.1) {
        const double t = kernels::tau_beta(beta);
        CHECK(t > prev);
        prev = t;
    }
}

TEST_CASE("kernel flags", "[kernels]") {
    CHECK(CorrelationKernel::gaussian(1).integrable());
    CHECK_FALSE(CorrelationKernel::riesz(1).integrable());
    CHECK(CorrelationKernel::riesz(1.5).riesz_dalang_admissible());
    CHECK_FALSE(CorrelationKernel::riesz(2.5).riesz_dalang_admissible());
    CHECK_THROWS_AS(CorrelationKernel::riesz(3.0), DomainError);
    CHECK_THROWS_AS(CorrelationKernel::gaussian(0.0), DomainError);
    CHECK(std::isinf(kernels::l1_norm(CorrelationKernel::riesz(1))));
}

TEST_CASE("centered cube mass is exact for the Gaussian kernel", "[kernels]") {
    // The Gaussian density factorizes, so mu([-a, a]^3) = erf(sqrt(2) pi s a)^3.
    for (double s : {0.5, 1.0}) {
        const auto k = CorrelationKernel::gaussian(s);
        for (double a : {0.02, 0.1, 0.5}) {
            const double exact = std::pow(std::erf(std::sqrt(2.0) * kPi * s * a), 3);
            CHECK(kernels::spectral_mass_centered_cube(k, a) == Approx(exact).epsilon(1e-10));
        }
    }
}

TEST_CASE("centered cube mass for Riesz scales like a^beta", "[kernels]") {
    const auto k = CorrelationKernel::riesz(1.0);
    const double m1 = kernels::spectral_mass_centered_cube(k, 0.1);
    const double m2 = kernels::spectral_mass_centered_cube(k, 0.2);
    CHECK(m2 / m1 == Approx(2.0).epsilon(1e-12));
    // Between the inscribed and circumscribed balls.
    CHECK(m1 > kernels::riesz_constant(1.0) * 4 * kPi * 0.1);
    CHECK(m1 < kernels::riesz_constant(1.0) * 4 * kPi * 0.1 * std::sqrt(3.0));
}
