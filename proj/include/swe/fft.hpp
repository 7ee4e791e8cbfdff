#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "swe/grid.hpp"

namespace swe {

namespace detail {

struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

// FFTW's planner is not thread safe; execution of an existing plan is. Plans are
// made once per N with FFTW_ESTIMATE so the chosen algorithm (and therefore the
// rounding) does not depend on timing.
inline PlanPair shared_plans(int n) {
    static std::mutex mutex;
    static std::map<int, PlanPair> plans;
    std::lock_guard lock(mutex);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;

    const std::size_t npts = static_cast<std::size_t>(n) * n * n;
    const std::size_t nmodes = static_cast<std::size_t>(n) * n * (n / 2 + 1);
    double* r = fftw_alloc_real(npts);
    fftw_complex* c = fftw_alloc_complex(nmodes);
    PlanPair p;
    p.r2c = fftw_plan_dft_r2c_3d(n, n, n, r, c, FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r_3d(n, n, n, c, r, FFTW_ESTIMATE);
    fftw_free(r);
    fftw_free(c);
    plans.emplace(n, p);
    return p;
}

} // namespace detail

/// Real <-> half-spectrum transforms on a torus grid.
///
/// Spectral coefficients use the Fourier-series normalization
/// u(x) = sum_k u_k exp(2 pi i k.x / L), so forward() divides by N^3 and
/// inverse() does not. Each instance owns scratch space; use one per thread.
class Fft3d {
public:
    explicit Fft3d(const TorusGrid& grid)
        : grid_(grid), plans_(detail::shared_plans(grid.n())), scratch_(grid.make_spectral()) {}

    const TorusGrid& grid() const noexcept { return grid_; }

    void forward(const RealField& in, SpectralField& out) const {
        check(in.size(), out.size());
        // r2c out-of-place leaves its input untouched.
        fftw_execute_dft_r2c(plans_.r2c, const_cast<double*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()));
        const double scale = 1.0 / static_cast<double>(grid_.num_points());
        for (auto& z : out) z *= scale;
    }

    /// c2r destroys its input, so the spectrum is copied to scratch first.
    void inverse(const SpectralField& in, RealField& out) {
        check(out.size(), in.size());
        std::copy(in.begin(), in.end(), scratch_.begin());
        fftw_execute_dft_c2r(plans_.c2r, reinterpret_cast<fftw_complex*>(scratch_.data()),
                             out.data());
    }

    /// Inverse transform that may overwrite `in`.
    void inverse_destructive(SpectralField& in, RealField& out) const {
        check(out.size(), in.size());
        fftw_execute_dft_c2r(plans_.c2r, reinterpret_cast<fftw_complex*>(in.data()),
                             out.data());
    }

private:
    void check(std::size_t nreal, std::size_t nspec) const {
        if (nreal != grid_.num_points() || nspec != grid_.num_modes())
            throw GridMismatch("FFT buffer size does not match grid");
    }

    TorusGrid grid_;
    detail::PlanPair plans_;
    SpectralField scratch_;
};

/// Sum over the full spectrum of f(mode) given half-spectrum storage.
template <class Fn>
double full_spectrum_sum(const TorusGrid& g, Fn&& fn) {
    double total = 0.0;
    for_each_mode(g, [&](std::size_t idx, int, int, int kz) {
        total += g.multiplicity(kz) * fn(idx);
    });
    return total;
}

} // namespace swe
