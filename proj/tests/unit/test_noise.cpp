#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "swe/noise.hpp"
#include "swe/rng.hpp"

using namespace swe;
using kernels::CorrelationKernel;
using Catch::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

double erf_mass(double s, double lo, double hi) {
    // mu of [lo, hi] along one axis for the Gaussian kernel (separable density).
    const double c = std::sqrt(2.0) * kPi * s;
    return 0.5 * (std::erf(c * hi) - std::erf(c * lo));
}

} // namespace

TEST_CASE("Philox4x32-10 known-answer vectors", "[rng]") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) == A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("seed policy streams", "[rng]") {
    const SeedPolicy seed{42};
    auto a = seed.stream(3, 5, StreamTag::noise), b = seed.stream(3, 5, StreamTag::noise);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    std::set<std::uint64_t> firsts;
    for (std::uint64_t p = 0; p < 4; ++p)
        for (std::uint64_t s = 0; s < 4; ++s)
            for (auto tag : {StreamTag::noise, StreamTag::synthetic_normal, StreamTag::monte_carlo})
                firsts.insert(seed.stream(p, s, tag)());
    CHECK(firsts.size() == 48);
    CHECK(SeedPolicy{43}.stream(3, 5, StreamTag::noise)() != SeedPolicy{42}.stream(3, 5, StreamTag::noise)());
    CHECK_THROWS_AS(seed.stream(1ull << 32, 0, StreamTag::noise), std::out_of_range);
    auto u = seed.stream(0, 0, StreamTag::monte_carlo);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("grid basics", "[noise]") {
    CHECK_THROWS_AS(TorusGrid(12, 1.0), ConfigError);
    CHECK_THROWS_AS(TorusGrid(4, 1.0), ConfigError);
    CHECK_THROWS_AS(TorusGrid(8, 0.0), ConfigError);
    const TorusGrid g(16, 4.0);
    CHECK(g.h() == 0.25);
    CHECK(g.wavenumber(8) == 8);
    CHECK(g.wavenumber(9) == -7);
    CHECK(g.num_modes() == 16u * 16u * 9u);
}

TEST_CASE("point-sample weights", "[noise]") {
    const TorusGrid g(16, 8.0);
    const auto w = noise::spectral_weights(g, CorrelationKernel::gaussian(1.0), noise::WeightRule::point_sample);
    CHECK(w.lambda[0] == 0.0);
    const double inv = 1.0 / (8.0 * 8.0 * 8.0);
    CHECK(w.lambda[g.mode_index(1, 2, 3)] ==
          Approx(kernels::spectral_density(CorrelationKernel::gaussian(1.0), {1 / 8.0, 2 / 8.0, 3 / 8.0}) * inv));
    const auto r = noise::spectral_weights(g, CorrelationKernel::riesz(1.0), noise::WeightRule::point_sample);
    CHECK(r.lambda[g.mode_index(1, 0, 0)] == Approx(r.lambda[g.mode_index(0, 1, 0)]).epsilon(1e-14));
    CHECK(r.lambda[g.mode_index(0, 0, 1)] == Approx(r.lambda[g.mode_index(15, 0, 0)]).epsilon(1e-14));
    CHECK(r.lambda[g.mode_index(2, 1, 2)] == Approx(r.lambda[g.mode_index(1, 2, 2)]).epsilon(1e-14));
    for (double x : r.lambda) CHECK(x >= 0.0);
}

TEST_CASE("cell-mass weights match the exact Gaussian cell masses", "[noise]") {
    const TorusGrid g(16, 8.0);
    const double s = 1.0, hw = 0.5 / 8.0;
    const auto w = noise::spectral_weights(g, CorrelationKernel::gaussian(s), noise::WeightRule::cell_mass);
    auto exact = [&](int kx, int ky, int kz) {
        double m = 1.0;
        for (int k : {kx, ky, kz}) m *= erf_mass(s, k / 8.0 - hw, k / 8.0 + hw);
        return m;
    };
    CHECK(w.lambda[0] == Approx(exact(0, 0, 0)).epsilon(1e-10));
    CHECK(w.lambda[g.mode_index(1, 0, 0)] == Approx(exact(1, 0, 0)).epsilon(1e-8));
    CHECK(w.lambda[g.mode_index(2, 15, 3)] == Approx(exact(2, -1, 3)).epsilon(1e-6));
    // Nyquist cells carry half their mass per Nyquist axis.
    CHECK(w.lambda[g.mode_index(8, 0, 0)] == Approx(0.5 * exact(8, 0, 0)).epsilon(1e-3));
}

TEST_CASE("weights sum to gamma(0) on a fine grid", "[noise]") {
    // The point rule drops the zero cell, worth about density(0) / L^3.
    const TorusGrid g(64, 16.0);
    for (auto rule : {noise::WeightRule::cell_mass, noise::WeightRule::point_sample}) {
        const auto w = noise::spectral_weights(g, CorrelationKernel::gaussian(1.0), rule);
        CHECK(w.total() == Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("weight rule parsing", "[noise]") {
    CHECK(noise::parse_weight_rule("cell") == noise::WeightRule::cell_mass);
    CHECK(noise::parse_weight_rule("point") == noise::WeightRule::point_sample);
    CHECK_THROWS_AS(noise::parse_weight_rule("aliased"), ConfigError);
}

TEST_CASE("zero weights give a zero field", "[noise]") {
    const TorusGrid g(8, 2.0);
    noise::SpectralWeights w{g, noise::WeightRule::point_sample, std::vector<double>(g.num_modes(), 0.0)};
    const noise::NoiseSampler sampler(w);
    Fft3d fft(g);
    const auto inc = sampler.sample_increment(SeedPolicy{1}, 0, 0, 0.1, fft);
    for (double x : inc.values) CHECK(x == 0.0);
}

TEST_CASE("sampled spectrum is Hermitian and the field real", "[noise]") {
    const TorusGrid g(16, 4.0);
    const noise::NoiseSampler sampler(noise::spectral_weights(g, CorrelationKernel::riesz(1.0)));
    SpectralField spec = g.make_spectral(), back = g.make_spectral();
    sampler.sample_spectrum(SeedPolicy{9}, 2, 3, 0.01, spec);
    RealField field = g.make_real();
    Fft3d fft(g);
    fft.inverse(spec, field);
    fft.forward(field, back);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        err = std::max(err, std::abs(spec[i] - back[i]));
        ref = std::max(ref, std::abs(spec[i]));
    }
    CHECK(err < 1e-12 * ref);
    CHECK_THROWS_AS(sampler.sample_spectrum(SeedPolicy{9}, 2, 3, 0.0, spec), DomainError);
}

TEST_CASE("point rule increments have zero spatial mean", "[noise]") {
    const TorusGrid g(8, 4.0);
    const auto inc = noise::sample_increment(g, CorrelationKernel::gaussian(1.0), 0.1, SeedPolicy{5}, 0, 0,
                                             noise::WeightRule::point_sample);
    double s = 0.0;
    for (double x : inc.values) s += x;
    CHECK(std::abs(s) < 1e-12);
}

TEST_CASE("increments are deterministic", "[noise]") {
    const TorusGrid g(8, 4.0);
    const auto k = CorrelationKernel::gaussian(0.5);
    const auto a = noise::sample_increment(g, k, 0.1, SeedPolicy{77}, 4, 9);
    const auto b = noise::sample_increment(g, k, 0.1, SeedPolicy{77}, 4, 9);
    CHECK(a.values == b.values);
    const auto c = noise::sample_increment(g, k, 0.1, SeedPolicy{77}, 4, 10);
    CHECK(a.values != c.values);
}

TEST_CASE("noise variance and stationary covariance", "[noise]") {
    const TorusGrid g(8, 4.0);
    const double dt = 0.05;
    const auto weights = noise::spectral_weights(g, CorrelationKernel::gaussian(0.6));
    const noise::NoiseSampler sampler(weights);
    Fft3d fft(g);

    // Exact lattice covariance dt sum_k lambda_k cos(2 pi k.l / L) over the full spectrum.
    auto lattice_cov = [&](int lx, int ly, int lz) {
        double s = 0.0;
        for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
            s += g.multiplicity(kz) * weights.lambda[idx] * std::cos(2 * std::numbers::pi * (kx * lx + ky * ly + kz * lz) / g.n());
        });
        return dt * s;
    };
    const std::array<std::array<int, 3>, 5> lags{{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {1, 1, 1}, {3, 0, 2}}};

    const int M = 5000;
    std::vector<std::vector<double>> per_draw(lags.size());
    std::vector<double> cross;
    for (int m = 0; m < M; ++m) {
        const auto a = sampler.sample_increment(SeedPolicy{11}, m, 0, dt, fft);
        const auto b = sampler.sample_increment(SeedPolicy{11}, m, 1, dt, fft);
        for (std::size_t l = 0; l < lags.size(); ++l) {
            double s = 0.0;
            for (int i = 0; i < 8; ++i)
                for (int j = 0; j < 8; ++j)
                    for (int k = 0; k < 8; ++k)
                        s += a.values[g.point_index((i + lags[l][0]) % 8, (j + lags[l][1]) % 8, (k + lags[l][2]) % 8)] *
                             a.values[g.point_index(i, j, k)];
            per_draw[l].push_back(s / 512.0);
        }
        cross.push_back(a.values[0] * b.values[0]);
    }
    for (std::size_t l = 0; l < lags.size(); ++l) {
        double m = 0.0, v = 0.0;
        for (double x : per_draw[l]) m += x;
        m /= M;
        for (double x : per_draw[l]) v += (x - m) * (x - m);
        const double se = std::sqrt(v / (M - 1.0) / M);
        INFO("lag " << l << " mean " << m << " exact " << lattice_cov(lags[l][0], lags[l][1], lags[l][2]));
        const double tol = l == 0 ? 5.0 : 4.0;
        CHECK(std::abs(m - lattice_cov(lags[l][0], lags[l][1], lags[l][2])) < tol * se);
    }
    CHECK(lattice_cov(0, 0, 0) == Approx(dt * weights.total()));

    // Temporal whiteness: correlation between steps 0 and 1 at the same point.
    double ab = 0.0;
    for (double x : cross) ab += x;
    ab /= M;
    CHECK(std::abs(ab / lattice_cov(0, 0, 0)) < 4.0 / std::sqrt(double(M)));
}
