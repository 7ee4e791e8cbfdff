#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <new>
#include <vector>

#include <fftw3.h>

#include "swe/error.hpp"

namespace swe {

using Vec3 = std::array<double, 3>;
using Complex = std::complex<double>;

inline double norm(const Vec3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

/// Allocator returning FFTW-aligned storage so every field can be handed to a shared plan.
template <class T>
struct FftwAllocator {
    using value_type = T;

    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) throw std::bad_alloc();
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

    template <class U>
    bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using RealField = std::vector<double, FftwAllocator<double>>;
/// Half spectrum (last axis k_z in [0, N/2]) in FFTW r2c layout.
using SpectralField = std::vector<Complex, FftwAllocator<Complex>>;

/// Periodic cube [0, L)^3 sampled at N^3 points; mode k has frequency k / L.
class TorusGrid {
public:
    TorusGrid(int n, double length) : n_(n), length_(length) {
        if (n < 8 || (n & (n - 1)) != 0)
            throw ConfigError("grid N must be a power of two >= 8 (got " + std::to_string(n) + ")");
        if (!(length > 0.0) || !std::isfinite(length))
            throw ConfigError("grid L must be positive and finite");
    }

    int n() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double h() const noexcept { return length_ / n_; }
    double cell_volume() const noexcept { return h() * h() * h(); }

    std::size_t num_points() const noexcept {
        return static_cast<std::size_t>(n_) * n_ * n_;
    }
    int half() const noexcept { return n_ / 2 + 1; }
    std::size_t num_modes() const noexcept {
        return static_cast<std::size_t>(n_) * n_ * half();
    }

    std::size_t point_index(int i, int j, int k) const noexcept {
        return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
    }
    std::size_t mode_index(int i, int j, int kz) const noexcept {
        return (static_cast<std::size_t>(i) * n_ + j) * half() + kz;
    }

    /// FFT index -> signed wavenumber in (-N/2, N/2].
    int wavenumber(int index) const noexcept { return index <= n_ / 2 ? index : index - n_; }

    /// Signed offset of a grid index from the origin in (-N/2, N/2], in cells.
    int offset(int index) const noexcept { return wavenumber(index); }

    /// How many times a half-spectrum mode appears in the full spectrum.
    int multiplicity(int kz) const noexcept { return (kz == 0 || kz == n_ / 2) ? 1 : 2; }

    RealField make_real(double fill = 0.0) const { return RealField(num_points(), fill); }
    SpectralField make_spectral() const { return SpectralField(num_modes(), Complex{}); }

    bool operator==(const TorusGrid& o) const noexcept {
        return n_ == o.n_ && length_ == o.length_;
    }

private:
    int n_;
    double length_;
};

inline void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
    if (!(a == b)) throw GridMismatch(std::string("grid mismatch in ") + what);
}

/// Visit every half-spectrum mode with its signed integer wavevector.
template <class Fn>
void for_each_mode(const TorusGrid& g, Fn&& fn) {
    const int n = g.n();
    const int half = g.half();
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i) {
        const int kx = g.wavenumber(i);
        for (int j = 0; j < n; ++j) {
            const int ky = g.wavenumber(j);
            for (int kz = 0; kz < half; ++kz, ++idx) fn(idx, kx, ky, kz);
        }
    }
}

/// |k| / L for every half-spectrum mode.
inline std::vector<double> mode_frequencies(const TorusGrid& g) {
    std::vector<double> out(g.num_modes());
    const double inv_l = 1.0 / g.length();
    for_each_mode(g, [&](std::size_t idx, int kx, int ky, int kz) {
        out[idx] = std::sqrt(double(kx) * kx + double(ky) * ky + double(kz) * kz) * inv_l;
    });
    return out;
}

} // namespace swe
