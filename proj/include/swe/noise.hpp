#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "swe/error.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"
#include "swe/kernels.hpp"
#include "swe/rng.hpp"

/// White-in-time, spatially correlated Gaussian noise on a torus grid.
namespace swe::noise {

/// How the spectral measure is turned into per-mode variances lambda_k.
enum class WeightRule {
    /// lambda_k = mu(cell of k/L), zero cell included.
    cell_mass,
    /// lambda_k = L^-3 density(k/L), lambda_0 = 0.
    point_sample,
};

inline WeightRule parse_weight_rule(const std::string& s) {
    if (s == "cell") return WeightRule::cell_mass;
    if (s == "point") return WeightRule::point_sample;
    throw ConfigError("unknown spectral weight rule '" + s + "' (expected cell|point)");
}
inline std::string to_string(WeightRule r) { return r == WeightRule::cell_mass ? "cell" : "point"; }

/// Per-mode variance weights over the half spectrum. Nyquist modes carry a
/// factor 1/2 per Nyquist axis.
struct SpectralWeights {
    TorusGrid grid;
    WeightRule rule;
    std::vector<double> lambda;

    /// sum over the full spectrum = pointwise variance of a unit-dt increment.
    double total() const {
        return full_spectrum_sum(grid, [&](std::size_t i) { return lambda[i]; });
    }
};

inline double nyquist_factor(const TorusGrid& g, int kx, int ky, int kz) {
    const int nyq = g.n() / 2;
    double f = 1.0;
    if (kx == nyq) f *= 0.5;
    if (ky == nyq) f *= 0.5;
    if (kz == nyq) f *= 0.5;
    return f;
}

inline SpectralWeights spectral_weights(const TorusGrid& grid, const kernels::CorrelationKernel& kernel,
                                        WeightRule rule = WeightRule::cell_mass) {
    SpectralWeights w{grid, rule, std::vector<double>(grid.num_modes(), 0.0)};
    const double inv_l = 1.0 / grid.length();
    const double inv_vol = inv_l * inv_l * inv_l;
    const double half_width = 0.5 * inv_l;
    for_each_mode(grid, [&](std::size_t idx, int kx, int ky, int kz) {
        if (kx == 0 && ky == 0 && kz == 0) {
            w.lambda[idx] = rule == WeightRule::cell_mass
                                ? kernels::spectral_mass_centered_cube(kernel, half_width)
                                : 0.0;
            return;
        }
        const Vec3 xi{kx * inv_l, ky * inv_l, kz * inv_l};
        double value;
        if (rule == WeightRule::point_sample) {
            value = kernels::spectral_density(kernel, xi) * inv_vol;
        } else {
            const int kmax = std::max({std::abs(kx), std::abs(ky), std::abs(kz)});
            const int points = kmax <= 2 ? 16 : kmax <= 6 ? 8 : kmax <= 16 ? 4 : 2;
            value = kernels::spectral_mass_cube(kernel, xi, half_width, points);
        }
        w.lambda[idx] = value * nyquist_factor(grid, kx, ky, kz);
    });
    return w;
}

/// One time slab's noise, as a density: int phi(x) dW has variance dt * <phi, gamma_per * phi>.
struct NoiseIncrement {
    TorusGrid grid;
    double dt;
    RealField values;
};

/// Draws Hermitian-symmetric spectral noise from a fixed weight array.
class NoiseSampler {
public:
    explicit NoiseSampler(SpectralWeights weights)
        : weights_(std::move(weights)), amplitude_(weights_.lambda.size()),
          partner_(weights_.lambda.size()) {
        const TorusGrid& g = weights_.grid;
        for (std::size_t i = 0; i < amplitude_.size(); ++i) amplitude_[i] = std::sqrt(weights_.lambda[i]);
        // In the k_z = 0 and k_z = N/2 planes the half spectrum stores both k and -k.
        const int n = g.n();
        for (std::size_t i = 0; i < partner_.size(); ++i) partner_[i] = i;
        for (int kz : {0, n / 2}) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const std::size_t idx = g.mode_index(i, j, kz);
                    partner_[idx] = g.mode_index((n - i) % n, (n - j) % n, kz);
                }
        }
    }

    const SpectralWeights& weights() const noexcept { return weights_; }
    const TorusGrid& grid() const noexcept { return weights_.grid; }

    /// out_k = sqrt(dt lambda_k) Z_k with Z Hermitian, E|Z_k|^2 = 1.
    void sample_spectrum(const SeedPolicy& seed, std::uint64_t path, std::uint64_t step, double dt,
                         SpectralField& out) const {
        if (!(dt > 0.0)) throw DomainError("noise increment needs dt > 0");
        if (out.size() != amplitude_.size()) throw GridMismatch("noise spectrum size");
        NormalSampler normal(seed.stream(path, step, StreamTag::noise));
        const double sdt = std::sqrt(dt);
        constexpr double kHalf = 0.70710678118654752440;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double re = normal() * kHalf;
            const double im = normal() * kHalf;
            const double a = sdt * amplitude_[i];
            out[i] = Complex(a * re, a * im);
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            const std::size_t p = partner_[i];
            if (p == i) {
                // Self-conjugate modes carry a real N(0, 1) variable.
                if (is_plane_mode(i)) out[i] = Complex(std::sqrt(2.0) * out[i].real(), 0.0);
            } else if (p < i) {
                out[i] = std::conj(out[p]);
            }
        }
    }

    NoiseIncrement sample_increment(const SeedPolicy& seed, std::uint64_t path, std::uint64_t step,
                                    double dt, Fft3d& fft) const {
        SpectralField spec = grid().make_spectral();
        sample_spectrum(seed, path, step, dt, spec);
        NoiseIncrement inc{grid(), dt, grid().make_real()};
        fft.inverse_destructive(spec, inc.values);
        return inc;
    }

private:
    bool is_plane_mode(std::size_t idx) const {
        const int kz = static_cast<int>(idx % grid().half());
        return kz == 0 || kz == grid().n() / 2;
    }

    SpectralWeights weights_;
    std::vector<double> amplitude_;
    std::vector<std::size_t> partner_;
};

/// Convenience one-shot sampler.
inline NoiseIncrement sample_increment(const TorusGrid& grid, const kernels::CorrelationKernel& kernel,
                                       double dt, const SeedPolicy& seed, std::uint64_t path,
                                       std::uint64_t step, WeightRule rule = WeightRule::cell_mass) {
    NoiseSampler sampler(spectral_weights(grid, kernel, rule));
    Fft3d fft(grid);
    return sampler.sample_increment(seed, path, step, dt, fft);
}

} // namespace swe::noise
