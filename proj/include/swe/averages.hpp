#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "swe/error.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"
#include "swe/solver.hpp"

/// Centered ball integrals F_R(t) = int_{B_R} (u(t, x) - 1) dx on the grid.
namespace swe::averages {

/// Quadrature weights of B_R(center) on the grid nodes; node x owns the cell x + [-h/2, h/2]^3.
struct BallWeights {
    TorusGrid grid;
    double R;
    Vec3 center;
    RealField weights;

    double total() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

namespace detail {

/// Signed periodic displacement of coordinate x from c, in (-L/2, L/2].
inline double wrap(double x, double c, double L) {
    double d = std::fmod(x - c, L);
    if (d > 0.5 * L) d -= L;
    if (d <= -0.5 * L) d += L;
    return d;
}

} // namespace detail

inline BallWeights ball_weights(const TorusGrid& grid, double R, const Vec3& center = {0.0, 0.0, 0.0}) {
    if (!(R > 0.0)) throw ConfigError("ball radius must be positive");
    const double h = grid.h();
    const double L = grid.length();
    if (2.0 * R + 4.0 * h > L)
        throw ConfigError("ball of radius " + std::to_string(R) + " does not fit: need 2R + 4h <= L");

    BallWeights bw{grid, R, center, grid.make_real(0.0)};
    const int n = grid.n();
    const double cell = grid.cell_volume();
    const double R2 = R * R;
    const double sub[3] = {-h / 3.0, 0.0, h / 3.0};

    auto disp = [&](int i, int axis) { return detail::wrap(i * h, center[axis], L); };

    for (int i = 0; i < n; ++i) {
        const double dx = disp(i, 0);
        const double nx = std::max(0.0, std::abs(dx) - 0.5 * h), fx = std::abs(dx) + 0.5 * h;
        for (int j = 0; j < n; ++j) {
            const double dy = disp(j, 1);
            const double ny = std::max(0.0, std::abs(dy) - 0.5 * h), fy = std::abs(dy) + 0.5 * h;
            if (nx * nx + ny * ny >= R2) continue;
            for (int k = 0; k < n; ++k) {
                const double dz = disp(k, 2);
                const double nz = std::max(0.0, std::abs(dz) - 0.5 * h), fz = std::abs(dz) + 0.5 * h;
                const double near2 = nx * nx + ny * ny + nz * nz;
                if (near2 >= R2) continue;
                double w;
                if (fx * fx + fy * fy + fz * fz <= R2) {
                    w = cell;
                } else {
                    int hits = 0;
                    for (double sx : sub)
                        for (double sy : sub)
                            for (double sz : sub) {
                                const double ax = dx + sx, ay = dy + sy, az = dz + sz;
                                if (ax * ax + ay * ay + az * az < R2) ++hits;
                            }
                    w = cell * hits / 27.0;
                }
                bw.weights[grid.point_index(i, j, k)] = w;
            }
        }
    }

    // A ball that slips between all subsample points still gets its volume, on the nearest node.
    if (bw.total() == 0.0) {
        auto nearest = [&](int axis) {
            int i = static_cast<int>(std::lround(center[axis] / h)) % n;
            return i < 0 ? i + n : i;
        };
        bw.weights[grid.point_index(nearest(0), nearest(1), nearest(2))] =
            4.0 / 3.0 * std::numbers::pi * R * R * R;
    }
    return bw;
}

/// sum_x w(x) (u(x) - 1).
inline double spatial_average(const RealField& u, const BallWeights& w) {
    if (u.size() != w.weights.size()) throw GridMismatch("field and ball weights differ in size");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += w.weights[i] * (u[i] - 1.0);
    return s;
}

inline double spatial_average(const solver::FieldState& field, const BallWeights& w) {
    require_same_grid(field.grid, w.grid, "spatial_average");
    return spatial_average(field.u, w);
}

/// F_R evaluated directly from half-spectrum coefficients:
/// sum_x w(x) u(x) = N^3 sum_k conj(w_k) u_k over the full spectrum.
class BallFunctional {
public:
    explicit BallFunctional(BallWeights w) : weights_(std::move(w)), w_hat_(weights_.grid.make_spectral()) {
        Fft3d fft(weights_.grid);
        fft.forward(weights_.weights, w_hat_);
        total_ = weights_.total();
        scale_ = static_cast<double>(weights_.grid.num_points());
    }

    double operator()(const SpectralField& u_hat) const {
        if (u_hat.size() != w_hat_.size()) throw GridMismatch("spectrum and ball weights differ in size");
        const TorusGrid& g = weights_.grid;
        const int half = g.half();
        const int nyq = g.n() / 2;
        double s = 0.0;
        for (std::size_t idx = 0; idx < u_hat.size(); ++idx) {
            const int kz = static_cast<int>(idx % half);
            const double mult = (kz == 0 || kz == nyq) ? 1.0 : 2.0;
            const Complex& a = w_hat_[idx];
            const Complex& b = u_hat[idx];
            s += mult * (a.real() * b.real() + a.imag() * b.imag());
        }
        return scale_ * s - total_;
    }

    const BallWeights& weights() const noexcept { return weights_; }
    /// Fourier-series coefficients of the weight field.
    const SpectralField& spectrum() const noexcept { return w_hat_; }
    double radius() const noexcept { return weights_.R; }

private:
    BallWeights weights_;
    SpectralField w_hat_;
    double total_ = 0.0;
    double scale_ = 1.0;
};

} // namespace swe::averages
