#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "swe/oracle.hpp"

using namespace swe;
using namespace swe::oracle;
using kernels::CorrelationKernel;
using Catch::Approx;

namespace {

double slope(const std::vector<double>& radii, const std::vector<double>& values) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < radii.size(); ++i) pts.emplace_back(radii[i], values[i]);
    return stats::scaling_exponent_fit(pts).slope;
}

EtaCurve constant_eta(double value, double t_end, int n) {
    EtaCurve e;
    for (int i = 0; i <= n; ++i) {
        e.times.push_back(t_end * i / n);
        e.values.push_back(value);
        e.stderrs.push_back(0.0);
    }
    return e;
}

} // namespace

TEST_CASE("time kernel matches direct quadrature", "[oracle]") {
    for (double t1 : {0.3, 1.0})
        for (double t2 : {0.5, 1.0})
            for (double r : {1e-4, 0.01, 0.7, 5.0}) {
                const double direct = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                    [&](double s) { return propagator::fourier_G(t1 - s, r) * propagator::fourier_G(t2 - s, r); }, 0.0,
                    std::min(t1, t2), 20u, 1e-14);
                CHECK(time_kernel(t1, t2, r) == Approx(direct).epsilon(1e-9).margin(1e-15));
            }
    CHECK(time_polynomial(1.0, 1.0) == Approx(1.0 / 3.0));
    CHECK(time_polynomial(0.5, 1.0) == Approx(0.5 * 0.5 - 0.75 * 0.25 + 0.125 / 3.0));
    CHECK(time_polynomial(0.0, 1.0) == 0.0);
}

TEST_CASE("linear covariance basic properties", "[oracle]") {
    const auto g = CorrelationKernel::gaussian(0.5);
    CHECK(linear_variance(2.0, 0.0, g) == 0.0);
    const double v = linear_variance(2.0, 1.0, g);
    CHECK(linear_variance(2.0, 1.0, g, 2.0) == Approx(4.0 * v).epsilon(1e-12));
    CHECK(linear_covariance(2.0, 0.5, 1.0, g) == Approx(linear_covariance(2.0, 1.0, 0.5, g)).epsilon(1e-10));
    CHECK(linear_variance(2.0, 0.5, g) < linear_variance(2.0, 0.75, g));
    CHECK(linear_variance(2.0, 0.75, g) < v);
    CHECK(v < linear_variance(3.0, 1.0, g));
    // Cauchy-Schwarz.
    const double c = linear_covariance(2.0, 0.5, 1.0, g);
    CHECK(c * c <= linear_variance(2.0, 0.5, g) * v * (1 + 1e-9));
    CHECK_THROWS_AS(linear_variance(0.0, 1.0, g), DomainError);
    CHECK_THROWS_AS(linear_variance(1.0, -1.0, g), DomainError);
    CHECK_THROWS_AS(linear_variance(1.0, 1.0, CorrelationKernel::riesz(2.5)), DomainError);
}

TEST_CASE("divergent spectral measure raises a quadrature error", "[oracle]") {
    kernels::Custom c;
    c.gamma = [](double) { return 0.0; };
    c.density = [](double r) { return r * r * r * r; };
    try {
        linear_variance(1.0, 1.0, CorrelationKernel::custom(c, "growing"));
        FAIL("no exception");
    } catch (const QuadratureError& e) {
        CHECK(std::string(e.what()).find("cutoff history") != std::string::npos);
    }
}

TEST_CASE("linear variance agrees with the lattice sum", "[oracle]") {
    // Riesz beta = 1, R = 2, t = 0.5 on a 128^3 grid.
    solver::SolverConfig cfg;
    cfg.grid = TorusGrid(128, 8.0);
    cfg.kernel = CorrelationKernel::riesz(1.0);
    cfg.sigma = solver::SigmaFunction::constant(1.0);
    cfg.T = 0.5;
    cfg.snapshot_times = {0.5};
    const auto tab = solver::SolverTables::build(cfg);
    const averages::BallFunctional ball(averages::ball_weights(cfg.grid, 2.0));
    const double lattice = lattice_linear_variance(*tab, ball, 32);
    const double continuum = linear_variance(2.0, 0.5, cfg.kernel);
    INFO(lattice << " vs " << continuum);
    CHECK(std::abs(lattice / continuum - 1.0) < 0.02);
    CHECK_THROWS_AS(lattice_linear_variance(*tab, averages::BallFunctional(averages::ball_weights(TorusGrid(16, 8.0), 1.0)), 4),
                    GridMismatch);
}

TEST_CASE("variance scaling exponents", "[oracle]") {
    const std::vector<double> radii{4, 8, 16};
    for (double beta : {0.5, 1.0, 1.5}) {
        std::vector<double> v;
        for (double R : radii) v.push_back(linear_variance(R, 1.0, CorrelationKernel::riesz(beta)));
        INFO("beta = " << beta);
        CHECK(std::abs(slope(radii, v) - (6.0 - beta)) < 0.15);
    }
    // Gaussian: R^3, with an R^2 boundary correction that fades for larger balls.
    const std::vector<double> big{8, 16, 32};
    std::vector<double> v;
    for (double R : big) v.push_back(linear_variance(R, 1.0, CorrelationKernel::gaussian(0.5)));
    CHECK(std::abs(slope(big, v) - 3.0) < 0.15);
}

TEST_CASE("variance approaches the additive limits", "[oracle]") {
    const auto k = CorrelationKernel::riesz(1.0);
    double prev_gap = 1.0;
    for (double R : {4.0, 8.0, 16.0}) {
        const double ratio = linear_variance(R, 1.0, k) / (std::pow(R, 5.0) * riesz_additive_limit(1.0, 1.0, 1.0));
        const double gap = std::abs(ratio - 1.0);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap < 0.01);
    CHECK(riesz_additive_limit(1.0, 1.0, 1.0) == Approx(21.0552 / 3.0).epsilon(1e-5));

    const auto g = CorrelationKernel::gaussian(0.5);
    CHECK(l1_additive_limit(1.0, 1.0, g) == Approx(kUnitBall * std::pow(2 * kPi * 0.25, 1.5) / 3.0).epsilon(1e-12));
    CHECK(l1_additive_limit(1.0, 1.0, g, 3.0) == Approx(9.0 * l1_additive_limit(1.0, 1.0, g)).epsilon(1e-12));
    const double r32 = linear_variance(32.0, 1.0, g) / (32.0 * 32.0 * 32.0 * l1_additive_limit(1.0, 1.0, g));
    CHECK(std::abs(r32 - 1.0) < 0.05);
    CHECK_THROWS_AS(l1_additive_limit(1.0, 1.0, k), DomainError);
}

TEST_CASE("Riesz limit covariance", "[oracle]") {
    const double tau = kernels::tau_beta(1.0);
    const auto ones = constant_eta(1.0, 1.0, 8);
    CHECK(limit_covariance_riesz(1.0, 1.0, 1.0, ones).value == Approx(tau / 3.0).epsilon(1e-12));
    CHECK(limit_covariance_riesz(0.5, 0.5, 1.0, ones).value == Approx(tau * 0.125 / 3.0).epsilon(1e-12));
    CHECK(limit_covariance_riesz(0.0, 1.0, 1.0, ones).value == 0.0);
    const double s1 = solver::SigmaFunction::sine_shift(0.5)(1.0);
    const auto flat = constant_eta(s1, 1.0, 64);
    CHECK(limit_covariance_riesz(1.0, 1.0, 1.0, flat).value == Approx(21.0552 * s1 * s1 / 3.0).epsilon(1e-5));
    CHECK(limit_covariance_riesz(0.5, 1.0, 1.0, flat).value ==
          Approx(limit_covariance_riesz(1.0, 0.5, 1.0, flat).value).epsilon(1e-14));
    CHECK(limit_covariance_riesz(1.0, 1.0, 1.0, flat).tau_beta == tau);

    // eta^2 = 1 + r is linear, so the rule is exact: int_0^1 (1 - r)^2 (1 + r) dr = 1/3 + 1/12.
    EtaCurve lin;
    for (int i = 0; i <= 4; ++i) {
        lin.times.push_back(0.25 * i);
        lin.values.push_back(std::sqrt(1.0 + 0.25 * i));
    }
    CHECK(limit_covariance_riesz(1.0, 1.0, 1.0, lin).value == Approx(tau * (1.0 / 3.0 + 1.0 / 12.0)).epsilon(1e-12));

    const auto short_curve = constant_eta(1.0, 0.5, 4);
    CHECK_THROWS_AS(limit_covariance_riesz(1.0, 1.0, 1.0, short_curve), ConfigError);
    EtaCurve late = ones;
    late.times.front() = 0.01;
    CHECK_THROWS_AS(limit_covariance_riesz(1.0, 1.0, 1.0, late), ConfigError);
}

TEST_CASE("L1 limit covariance from a lag curve", "[oracle]") {
    const TorusGrid g(32, 16.0);
    stats::LagCurve zero{g, g.make_real()};
    CHECK(limit_covariance_l1(1.0, 1.0, zero).value == 0.0);
    CHECK(limit_covariance_l1(1.0, 1.0, zero).lag_radius == 4.0);
    CHECK_THROWS_AS(limit_covariance_l1(1.0, 1.0, zero, 2.0), ConfigError);

    stats::LagCurve bump{g, g.make_real()};
    bump.values[0] = 2.0;
    bump.values[g.point_index(1, 0, 0)] = 1.0;
    const double h3 = g.cell_volume();
    CHECK(limit_covariance_l1(0.5, 1.0, bump).value == Approx(kUnitBall * 3.0 * h3).epsilon(1e-12));
    stats::LagCurve scaled = bump;
    for (double& v : scaled.values) v *= 4.0;
    CHECK(limit_covariance_l1(0.5, 1.0, scaled).value == Approx(4.0 * limit_covariance_l1(0.5, 1.0, bump).value));
}

TEST_CASE("additive lag integral reproduces the L1 limit", "[oracle]") {
    // Exact lattice covariance of the additive scheme at every lag:
    // sum_k lambda_k dt sum_{j < m1 ^ m2} S_k(m1 - j) S_k(m2 - j) e^{2 pi i k.l / L}.
    solver::SolverConfig cfg;
    cfg.dt = 1.0 / 128.0;
    cfg.sigma = solver::SigmaFunction::constant(1.0);
    cfg.snapshot_times = {0.5, 1.0};
    const auto tab = solver::SolverTables::build(cfg);
    const TorusGrid& g = cfg.grid;
    Fft3d fft(g);
    for (auto [t1, t2] : {std::pair{0.5, 1.0}, std::pair{1.0, 1.0}}) {
        const int m1 = cfg.step_of(t1), m2 = cfg.step_of(t2);
        SpectralField spec = g.make_spectral();
        for (std::size_t i = 0; i < spec.size(); ++i) {
            const double w = tab->rot.omega[i];
            auto S = [&](int n) { return w == 0.0 ? n * cfg.dt : std::sin(w * n * cfg.dt) / w; };
            double acc = 0.0;
            for (int j = 0; j < std::min(m1, m2); ++j) acc += S(m1 - j) * S(m2 - j);
            spec[i] = tab->sampler.weights().lambda[i] * cfg.dt * acc;
        }
        stats::LagCurve curve{g, g.make_real()};
        fft.inverse_destructive(spec, curve.values);
        const double lag = limit_covariance_l1(t1, t2, curve).value;
        const double limit = l1_additive_limit(t1, t2, cfg.kernel);
        INFO(t1 << ", " << t2 << ": " << lag << " vs " << limit);
        CHECK(std::abs(lag / limit - 1.0) < 0.02);
    }
}
