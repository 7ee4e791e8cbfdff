#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "swe/error.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"
#include "swe/rng.hpp"
#include "swe/solver.hpp"

/// Ensemble estimators for F_R(t) and the fields behind it.
namespace swe::stats {

struct EnsembleMeta {
    double R = 0.0;
    double t = 0.0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

/// One F_R(t) sample per path, in path order.
struct Ensemble {
    std::vector<double> samples;
    EnsembleMeta meta;

    std::size_t size() const noexcept { return samples.size(); }
};

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

struct DistanceReport {
    double w1 = 0.0;
    double kolmogorov = 0.0;
    std::size_t M = 0;
    double mc_floor = 0.0;
};

struct ScalingFit {
    std::vector<double> radii;
    std::vector<double> values;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline double mean(const std::vector<double>& x) {
    if (x.empty()) throw DegenerateEnsemble("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Centered and scaled to unit (1/M) variance.
inline Ensemble normalize(const Ensemble& e) {
    if (e.size() < 2) throw DegenerateEnsemble("need at least two samples to normalize");
    const double m = mean(e.samples);
    double ss = 0.0;
    for (double x : e.samples) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(e.size()));
    if (!(sd > 0.0) || sd <= 1e-300)
        throw DegenerateEnsemble("zero sample variance (is sigma(1) = 0?)");
    Ensemble out{std::vector<double>(e.size()), e.meta};
    for (std::size_t i = 0; i < e.size(); ++i) out.samples[i] = (e.samples[i] - m) / sd;
    return out;
}

/// Unbiased variance; stderr from the fourth central moment.
inline Estimate variance_with_ci(const Ensemble& e) {
    const std::size_t M = e.size();
    if (M < 2) throw DegenerateEnsemble("variance needs at least two samples");
    const double m = mean(e.samples);
    double s2 = 0.0, s4 = 0.0;
    for (double x : e.samples) {
        const double d = (x - m) * (x - m);
        s2 += d;
        s4 += d * d;
    }
    const double n = static_cast<double>(M);
    const double var = s2 / (n - 1.0);
    const double m2 = s2 / n, m4 = s4 / n;
    const double v = (m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n;
    return {var, std::sqrt(std::max(v, 0.0))};
}

namespace detail {

inline void distances(std::vector<double> x, const std::vector<double>& q, double& w1, double& kol) {
    std::sort(x.begin(), x.end());
    const std::size_t M = x.size();
    const boost::math::normal_distribution<double> z;
    w1 = 0.0;
    kol = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        w1 += std::abs(x[i] - q[i]);
        const double F = boost::math::cdf(z, x[i]);
        kol = std::max({kol, F - static_cast<double>(i) / M, static_cast<double>(i + 1) / M - F});
    }
    w1 /= static_cast<double>(M);
    kol = std::min(kol, 1.0);
}

inline std::vector<double> normal_quantiles(std::size_t M) {
    const boost::math::normal_distribution<double> z;
    std::vector<double> q(M);
    for (std::size_t i = 0; i < M; ++i) q[i] = boost::math::quantile(z, (i + 0.5) / static_cast<double>(M));
    return q;
}

} // namespace detail

/// W1 by quantile coupling against Phi^-1((i - 1/2)/M); Kolmogorov as the sup CDF gap.
/// mc_floor is the mean W1 of 32 synthetic N(0,1) samples of the same size,
/// treated the same way (normalized iff `normalized`).
inline DistanceReport wasserstein1_to_normal(const Ensemble& e, bool normalized = true,
                                             std::uint64_t floor_seed = 0x5eedf100full) {
    const std::size_t M = e.size();
    if (M < 2) throw DegenerateEnsemble("distance needs at least two samples");
    const auto q = detail::normal_quantiles(M);
    DistanceReport rep;
    rep.M = M;
    const Ensemble x = normalized ? normalize(e) : e;
    detail::distances(x.samples, q, rep.w1, rep.kolmogorov);

    constexpr int trials = 32;
    const SeedPolicy seeds{floor_seed};
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        NormalSampler draw(seeds.stream(static_cast<std::uint64_t>(trial), M, StreamTag::synthetic_normal));
        Ensemble syn{std::vector<double>(M), {}};
        for (auto& v : syn.samples) v = draw();
        if (normalized) syn = normalize(syn);
        double w = 0.0, k = 0.0;
        detail::distances(std::move(syn.samples), q, w, k);
        acc += w;
    }
    rep.mc_floor = acc / trials;
    return rep;
}

/// Least squares of log(value) on log(R).
inline ScalingFit scaling_exponent_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw ConfigError("scaling fit needs at least three points");
    ScalingFit fit;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto [r, v] = points[i];
        if (!(r > 0.0)) throw DomainError("scaling fit: radii must be positive");
        if (!(v > 0.0)) throw DomainError("scaling fit: values must be positive");
        if (i > 0 && !(r > points[i - 1].first)) throw ConfigError("scaling fit: radii must increase");
        fit.radii.push_back(r);
        fit.values.push_back(v);
    }
    const double n = static_cast<double>(points.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        sx += std::log(fit.radii[i]);
        sy += std::log(fit.values[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dx = std::log(fit.radii[i]) - mx, dy = std::log(fit.values[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double r = std::log(fit.values[i]) - (fit.intercept + fit.slope * std::log(fit.radii[i]));
            ss_res += r * r;
        }
        fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    }
    return fit;
}

namespace detail {

inline void require_paired(const Ensemble& a, const Ensemble& b) {
    if (a.size() != b.size()) throw ConfigError("ensembles are not paired: different path counts");
    if (a.meta.R != b.meta.R) throw ConfigError("ensembles are not paired: different radii");
    if (a.meta.seed != b.meta.seed || a.meta.config_hash != b.meta.config_hash)
        throw ConfigError("ensembles are not paired: different runs");
    if (a.size() < 2) throw DegenerateEnsemble("need at least two paired samples");
}

} // namespace detail

/// Sample covariance of (F_R(t1), F_R(t2)) over paired paths.
inline Estimate covariance_estimate(const Ensemble& e1, const Ensemble& e2) {
    detail::require_paired(e1, e2);
    const double n = static_cast<double>(e1.size());
    const double m1 = mean(e1.samples), m2 = mean(e2.samples);
    std::vector<double> prod(e1.size());
    for (std::size_t i = 0; i < e1.size(); ++i) prod[i] = (e1.samples[i] - m1) * (e2.samples[i] - m2);
    const double s = std::accumulate(prod.begin(), prod.end(), 0.0);
    const double cov = s / (n - 1.0);
    const double pm = s / n;
    double v = 0.0;
    for (double p : prod) v += (p - pm) * (p - pm);
    return {cov, std::sqrt(v / (n - 1.0) / n)};
}

/// E|F_R(t) - F_R(s)|^2 over paired paths.
inline Estimate increment_moment(const Ensemble& at_s, const Ensemble& at_t) {
    detail::require_paired(at_s, at_t);
    const double n = static_cast<double>(at_s.size());
    std::vector<double> sq(at_s.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        const double d = at_t.samples[i] - at_s.samples[i];
        sq[i] = d * d;
    }
    const double m = std::accumulate(sq.begin(), sq.end(), 0.0) / n;
    double v = 0.0;
    for (double x : sq) v += (x - m) * (x - m);
    return {m, std::sqrt(v / (n - 1.0) / n)};
}

/// Per-path spatial mean of sigma(u).
inline double eta_path_mean(const RealField& u, const solver::SigmaFunction& sigma) {
    double s = 0.0;
    for (double x : u) s += sigma(x);
    return s / static_cast<double>(u.size());
}

/// eta(r) = E sigma(u(r, x)), pooled over paths and grid points; stderr across paths.
inline Estimate eta_estimate(const std::vector<solver::FieldState>& fields, const solver::SigmaFunction& sigma) {
    if (fields.empty()) throw DegenerateEnsemble("eta estimate needs at least one field");
    std::vector<double> per_path;
    per_path.reserve(fields.size());
    for (const auto& f : fields) per_path.push_back(eta_path_mean(f.u, sigma));
    const double m = mean(per_path);
    if (per_path.size() < 2) return {m, 0.0};
    double v = 0.0;
    for (double x : per_path) v += (x - m) * (x - m);
    return {m, std::sqrt(v / (per_path.size() - 1.0) / per_path.size())};
}

using Lag = std::array<int, 3>;

/// Lag in grid cells from a physical 3-vector; throws unless it is a multiple of h.
inline Lag lag_cells(const TorusGrid& g, const Vec3& lag) {
    Lag out{};
    for (int a = 0; a < 3; ++a) {
        const double q = lag[a] / g.h();
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q))) throw DomainError("lag is not on the grid");
        out[a] = static_cast<int>(r);
    }
    return out;
}

/// Cov(u(t1, x + lag), u(t2, x)), pooled over grid points and paths; fields paired by path.
inline std::vector<double> spatial_covariance_lag(const std::vector<solver::FieldState>& at_t1,
                                                  const std::vector<solver::FieldState>& at_t2,
                                                  const std::vector<Vec3>& lags) {
    if (at_t1.size() != at_t2.size() || at_t1.empty()) throw ConfigError("lag covariance needs paired fields");
    const TorusGrid& g = at_t1.front().grid;
    for (std::size_t p = 0; p < at_t1.size(); ++p) {
        require_same_grid(g, at_t1[p].grid, "spatial_covariance_lag");
        require_same_grid(g, at_t2[p].grid, "spatial_covariance_lag");
    }
    const int n = g.n();
    const double npts = static_cast<double>(g.num_points()) * at_t1.size();
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t p = 0; p < at_t1.size(); ++p) {
        for (double x : at_t1[p].u) m1 += x;
        for (double x : at_t2[p].u) m2 += x;
    }
    m1 /= npts;
    m2 /= npts;

    std::vector<double> out;
    for (const auto& lv : lags) {
        const Lag l = lag_cells(g, lv);
        double s = 0.0;
        for (std::size_t p = 0; p < at_t1.size(); ++p) {
            const auto& u1 = at_t1[p].u;
            const auto& u2 = at_t2[p].u;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        const int a = ((i + l[0]) % n + n) % n, b = ((j + l[1]) % n + n) % n,
                                  c = ((k + l[2]) % n + n) % n;
                        s += (u1[g.point_index(a, b, c)] - m1) * (u2[g.point_index(i, j, k)] - m2);
                    }
        }
        out.push_back(s / npts);
    }
    return out;
}

/// Covariance at every grid lag, from the spectral accumulation
/// S_k = sum_paths u1_k conj(u2_k): mean_x u1(x + l) u2(x) = sum_k S_k exp(2 pi i k.l / L) / M.
struct LagCurve {
    TorusGrid grid;
    RealField values;  ///< indexed like grid points: lag (i, j, k) cells

    /// h^3 sum over lags with |lag| <= radius.
    double integral(double radius) const {
        if (radius > 0.5 * grid.length())
            throw ConfigError("lag truncation radius exceeds half the torus");
        const int n = grid.n();
        const double h = grid.h();
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const double x = grid.offset(i) * h, y = grid.offset(j) * h, z = grid.offset(k) * h;
                    if (x * x + y * y + z * z <= radius * radius) s += values[grid.point_index(i, j, k)];
                }
        return s * grid.cell_volume();
    }

    double at(const Vec3& lag) const {
        const Lag l = lag_cells(grid, lag);
        const int n = grid.n();
        return values[grid.point_index(((l[0] % n) + n) % n, ((l[1] % n) + n) % n, ((l[2] % n) + n) % n)];
    }
};

/// Running cross-spectrum of (u(t1), u(t2)) over paths; merge order fixes the rounding.
class LagAccumulator {
public:
    explicit LagAccumulator(const TorusGrid& g) : grid_(g), cross_(g.make_spectral()) {}

    void add(const SpectralField& u1, const SpectralField& u2) {
        if (u1.size() != cross_.size() || u2.size() != cross_.size()) throw GridMismatch("lag accumulator");
        for (std::size_t i = 0; i < cross_.size(); ++i) cross_[i] += u1[i] * std::conj(u2[i]);
        mean1_ += u1[0].real();
        mean2_ += u2[0].real();
        ++count_;
    }

    void merge(const LagAccumulator& o) {
        require_same_grid(grid_, o.grid_, "LagAccumulator::merge");
        for (std::size_t i = 0; i < cross_.size(); ++i) cross_[i] += o.cross_[i];
        mean1_ += o.mean1_;
        mean2_ += o.mean2_;
        count_ += o.count_;
    }

    std::size_t count() const noexcept { return count_; }

    LagCurve curve() const {
        if (count_ == 0) throw DegenerateEnsemble("empty lag accumulator");
        const double inv = 1.0 / static_cast<double>(count_);
        SpectralField s(cross_.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = cross_[i] * inv;
        LagCurve c{grid_, grid_.make_real()};
        Fft3d fft(grid_);
        fft.inverse_destructive(s, c.values);
        const double mm = (mean1_ * inv) * (mean2_ * inv);
        for (double& v : c.values) v -= mm;
        return c;
    }

private:
    TorusGrid grid_;
    SpectralField cross_;
    double mean1_ = 0.0, mean2_ = 0.0;
    std::size_t count_ = 0;
};

} // namespace swe::stats
