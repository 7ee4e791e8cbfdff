#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "swe/error.hpp"
#include "swe/fft.hpp"
#include "swe/grid.hpp"
#include "swe/kernels.hpp"
#include "swe/noise.hpp"
#include "swe/propagator.hpp"
#include "swe/rng.hpp"

/// Stochastic trigonometric time stepping of u_tt = Lap u + sigma(u) W'(t, x),
/// u(0) = 1, u_t(0) = 0, on a periodic grid, plus the mollified Picard scheme.
namespace swe::solver {

class SigmaFunction {
public:
    struct Constant { double c; };
    struct Linear { double a, b; };          ///< a + b u
    struct SineShift { double epsilon; };    ///< 1 + epsilon sin(u)
    struct Custom {
        std::function<double(double)> fn;
        double lipschitz;
    };
    using Variant = std::variant<Constant, Linear, SineShift, Custom>;

    static SigmaFunction constant(double c) { return SigmaFunction(Constant{c}); }
    static SigmaFunction linear(double a, double b) { return SigmaFunction(Linear{a, b}); }
    static SigmaFunction sine_shift(double epsilon) { return SigmaFunction(SineShift{epsilon}); }
    static SigmaFunction custom(std::function<double(double)> fn, double lipschitz) {
        if (!fn) throw ConfigError("custom sigma needs a callable");
        return SigmaFunction(Custom{std::move(fn), lipschitz});
    }

    double operator()(double u) const {
        return std::visit(
            [u](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Constant>) return s.c;
                else if constexpr (std::is_same_v<T, Linear>) return s.a + s.b * u;
                else if constexpr (std::is_same_v<T, SineShift>) return 1.0 + s.epsilon * std::sin(u);
                else return s.fn(u);
            },
            sigma_);
    }

    /// out[i] = sigma(u[i]) * w[i], with one dispatch for the whole field.
    template <class U, class W, class Out>
    void multiply(const U& u, const W& w, Out& out) const {
        const std::size_t n = out.size();
        if (auto* c = std::get_if<Constant>(&sigma_)) {
            for (std::size_t i = 0; i < n; ++i) out[i] = c->c * w[i];
        } else if (auto* l = std::get_if<Linear>(&sigma_)) {
            for (std::size_t i = 0; i < n; ++i) out[i] = (l->a + l->b * u[i]) * w[i];
        } else if (auto* s = std::get_if<SineShift>(&sigma_)) {
            const double e = s->epsilon;
            for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 + e * std::sin(u[i])) * w[i];
        } else {
            const auto& f = std::get<Custom>(sigma_).fn;
            for (std::size_t i = 0; i < n; ++i) out[i] = f(u[i]) * w[i];
        }
    }

    /// Declared Lipschitz constant; 0 for constants.
    double lipschitz() const {
        return std::visit(
            [](const auto& s) -> double {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Constant>) return 0.0;
                else if constexpr (std::is_same_v<T, Linear>) return std::abs(s.b);
                else if constexpr (std::is_same_v<T, SineShift>) return std::abs(s.epsilon);
                else return s.lipschitz;
            },
            sigma_);
    }

    bool is_constant() const {
        if (std::holds_alternative<Constant>(sigma_)) return true;
        if (auto* l = std::get_if<Linear>(&sigma_)) return l->b == 0.0;
        if (auto* s = std::get_if<SineShift>(&sigma_)) return s->epsilon == 0.0;
        return false;
    }

    /// Lipschitz in (0, inf) and sigma(1) != 0: what the CLT experiments require.
    void require_clt_admissible() const {
        const double l = lipschitz();
        if (!(l > 0.0 && std::isfinite(l)))
            throw ConfigError("sigma must have a finite positive Lipschitz constant for CLT experiments");
        if ((*this)(1.0) == 0.0) throw ConfigError("sigma(1) must be nonzero for CLT experiments");
    }

    const Variant& variant() const noexcept { return sigma_; }

private:
    explicit SigmaFunction(Variant v) : sigma_(std::move(v)) {}
    Variant sigma_;
};

enum class Mode { trig, picard, additive };

struct SolverMode {
    Mode kind = Mode::trig;
    int picard_iterations = 0;

    static SolverMode trig() { return {Mode::trig, 0}; }
    static SolverMode additive() { return {Mode::additive, 0}; }
    static SolverMode picard(int n) { return {Mode::picard, n}; }
};

struct SolverConfig {
    TorusGrid grid{64, 24.0};
    double dt = 1.0 / 64.0;
    double T = 1.0;
    SigmaFunction sigma = SigmaFunction::sine_shift(0.5);
    kernels::CorrelationKernel kernel = kernels::CorrelationKernel::gaussian(0.5);
    SolverMode mode = SolverMode::trig();
    std::vector<double> snapshot_times{1.0};
    noise::WeightRule weight_rule = noise::WeightRule::cell_mass;
    propagator::MollifierSequence mollifiers = propagator::MollifierSequence::dyadic();

    int num_steps() const { return static_cast<int>(std::llround(T / dt)); }

    /// Step index of a time that must be a multiple of dt.
    int step_of(double t) const {
        const double q = t / dt;
        const double r = std::round(q);
        if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
            throw ConfigError("time " + std::to_string(t) + " is not a multiple of dt");
        return static_cast<int>(r);
    }

    std::vector<int> snapshot_steps() const {
        std::vector<int> out;
        for (double t : snapshot_times) out.push_back(step_of(t));
        return out;
    }

    void validate() const {
        if (!(dt > 0.0)) throw ConfigError("dt must be positive");
        if (!(T > 0.0)) throw ConfigError("T must be positive");
        step_of(T);
        double prev = -1.0;
        for (double t : snapshot_times) {
            if (t < 0.0 || t > T + 1e-12) throw ConfigError("snapshot time outside [0, T]");
            if (t < prev) throw ConfigError("snapshot times must be sorted");
            prev = t;
            step_of(t);
        }
        if (mode.kind == Mode::additive && !sigma.is_constant())
            throw ConfigError("additive mode requires a constant sigma");
        if (mode.kind == Mode::picard && mode.picard_iterations < 0)
            throw ConfigError("picard iteration count must be >= 0");
    }

    /// L >= 2 (R_max + T) + 4 h: the averaging ball and its light cone never wrap.
    void require_fits(double r_max) const {
        const double need = 2.0 * (r_max + T) + 4.0 * grid.h();
        if (grid.length() < need)
            throw ConfigError("grid too small: L = " + std::to_string(grid.length()) + " < 2(R+T)+4h = " +
                              std::to_string(need));
    }
};

/// u and v = du/dt on the grid at time t.
struct FieldState {
    TorusGrid grid;
    double t = 0.0;
    RealField u;
    RealField v;
};

inline FieldState initial_state(const TorusGrid& grid) {
    return FieldState{grid, 0.0, grid.make_real(1.0), grid.make_real(0.0)};
}

/// Exact one-step rotation of the linear wave part, per half-spectrum mode.
struct Rotation {
    std::vector<double> omega;       ///< 2 pi |k| / L
    std::vector<double> cos_wdt;     ///< cos(omega dt)
    std::vector<double> sin_over_w;  ///< sin(omega dt) / omega, dt at k = 0

    static Rotation build(const TorusGrid& grid, double dt) {
        const auto freq = mode_frequencies(grid);
        Rotation r;
        r.omega.resize(freq.size());
        r.cos_wdt.resize(freq.size());
        r.sin_over_w.resize(freq.size());
        for (std::size_t i = 0; i < freq.size(); ++i) {
            const double w = 2.0 * std::numbers::pi * freq[i];
            r.omega[i] = w;
            r.cos_wdt[i] = std::cos(w * dt);
            r.sin_over_w[i] = propagator::fourier_G(dt, freq[i]);
        }
        return r;
    }
};

/// Immutable per-config arrays and the noise sampler, shared by all paths.
struct SolverTables {
    TorusGrid grid;
    double dt;
    noise::NoiseSampler sampler;
    Rotation rot;
    std::vector<std::vector<double>> rho;  ///< rho[m-1][k] = F rho_m(k / L)

    static std::shared_ptr<const SolverTables> build(const SolverConfig& cfg) {
        auto weights = noise::spectral_weights(cfg.grid, cfg.kernel, cfg.weight_rule);
        auto t = std::make_shared<SolverTables>(SolverTables{
            cfg.grid, cfg.dt, noise::NoiseSampler(std::move(weights)), Rotation::build(cfg.grid, cfg.dt), {}});
        if (cfg.mode.kind == Mode::picard) {
            const auto freq = mode_frequencies(cfg.grid);
            for (int m = 1; m <= cfg.mode.picard_iterations; ++m) {
                std::vector<double> r(freq.size());
                for (std::size_t i = 0; i < freq.size(); ++i)
                    r[i] = propagator::fourier_rho(m, freq[i], cfg.mollifiers);
                t->rho.push_back(std::move(r));
            }
        }
        return t;
    }
};

namespace detail {

/// One exact rotation of the linear wave part plus the noise kick `kick`
/// (already F[sigma(u) dW], optionally times a mollifier factor).
inline void advance(const Rotation& rot, SpectralField& u_hat, SpectralField& v_hat,
                    const SpectralField& kick, const std::vector<double>* factor) {
    const std::size_t n = u_hat.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double c = rot.cos_wdt[i];
        const double s = rot.sin_over_w[i];
        const double w2 = rot.omega[i] * rot.omega[i];
        const Complex p = factor ? (*factor)[i] * kick[i] : kick[i];
        const Complex u0 = u_hat[i];
        const Complex v0 = v_hat[i];
        u_hat[i] = c * u0 + s * v0 + s * p;
        v_hat[i] = -w2 * s * u0 + c * v0 + c * p;
    }
}

inline bool all_finite(const RealField& f) {
    for (double x : f)
        if (!std::isfinite(x)) return false;
    return true;
}
inline bool all_finite(const SpectralField& f) {
    for (const auto& z : f)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

/// Scratch buffers for one path; not shared between threads.
struct Workspace {
    explicit Workspace(const TorusGrid& g)
        : fft(g), noise_hat(g.make_spectral()), kick(g.make_spectral()), noise_real(g.make_real()),
          product(g.make_real()) {}

    Fft3d fft;
    SpectralField noise_hat;
    SpectralField kick;
    RealField noise_real;
    RealField product;
};

/// kick = F[sigma(u) dW] given dW in spectral form.
inline void noise_kick(const SigmaFunction& sigma, const RealField* u, Workspace& ws, bool noise_real_ready) {
    if (sigma.is_constant()) {
        const double c = sigma(1.0);
        for (std::size_t i = 0; i < ws.kick.size(); ++i) ws.kick[i] = c * ws.noise_hat[i];
        return;
    }
    if (!noise_real_ready) ws.fft.inverse(ws.noise_hat, ws.noise_real);
    sigma.multiply(*u, ws.noise_real, ws.product);
    ws.fft.forward(ws.product, ws.kick);
}

} // namespace detail

/// Read-only view of one path's state after a step; u() is materialized on demand.
class StepView {
public:
    StepView(int step, double t, const SpectralField& u_hat, const SpectralField& v_hat, RealField& u,
             bool& u_valid, Fft3d& fft)
        : step(step), t(t), u_hat(u_hat), v_hat(v_hat), u_(u), u_valid_(u_valid), fft_(fft) {}

    int step;
    double t;
    const SpectralField& u_hat;
    const SpectralField& v_hat;

    const RealField& u() const {
        if (!u_valid_) {
            fft_.inverse(u_hat, u_);
            u_valid_ = true;
        }
        return u_;
    }
    RealField v() const {
        RealField out(u_.size());
        fft_.inverse(v_hat, out);
        return out;
    }

private:
    RealField& u_;
    bool& u_valid_;
    Fft3d& fft_;
};

/// Runs single paths of the trig scheme (modes trig and additive).
class PathEngine {
public:
    PathEngine(SolverConfig cfg, std::shared_ptr<const SolverTables> tables)
        : cfg_(std::move(cfg)), tab_(std::move(tables)), ws_(cfg_.grid), u_hat_(cfg_.grid.make_spectral()),
          v_hat_(cfg_.grid.make_spectral()), u_(cfg_.grid.make_real()) {
        cfg_.validate();
        if (cfg_.mode.kind == Mode::picard) throw ConfigError("PathEngine does not run picard mode");
    }

    /// obs(const StepView&) is called for step 0 (initial data) and after every step.
    template <class Observer>
    void run(const SeedPolicy& seed, std::uint64_t path, Observer&& obs) {
        std::fill(u_hat_.begin(), u_hat_.end(), Complex{});
        std::fill(v_hat_.begin(), v_hat_.end(), Complex{});
        u_hat_[0] = 1.0;
        std::fill(u_.begin(), u_.end(), 1.0);
        bool u_valid = true;
        const bool linear = cfg_.sigma.is_constant();
        const int steps = cfg_.num_steps();

        obs(StepView(0, 0.0, u_hat_, v_hat_, u_, u_valid, ws_.fft));
        for (int j = 0; j < steps; ++j) {
            tab_->sampler.sample_spectrum(seed, path, static_cast<std::uint64_t>(j), cfg_.dt, ws_.noise_hat);
            if (!linear && !u_valid) {
                ws_.fft.inverse(u_hat_, u_);
                u_valid = true;
            }
            detail::noise_kick(cfg_.sigma, &u_, ws_, false);
            detail::advance(tab_->rot, u_hat_, v_hat_, ws_.kick, nullptr);
            if (linear) {
                u_valid = false;
                if (!detail::all_finite(u_hat_)) throw NumericalBlowup(j);
            } else {
                ws_.fft.inverse(u_hat_, u_);
                u_valid = true;
                if (!detail::all_finite(u_)) throw NumericalBlowup(j);
            }
            obs(StepView(j + 1, (j + 1) * cfg_.dt, u_hat_, v_hat_, u_, u_valid, ws_.fft));
        }
    }

    const SolverConfig& config() const noexcept { return cfg_; }
    const SolverTables& tables() const noexcept { return *tab_; }

private:
    SolverConfig cfg_;
    std::shared_ptr<const SolverTables> tab_;
    detail::Workspace ws_;
    SpectralField u_hat_, v_hat_;
    RealField u_;
};

/// Runs the mollified Picard iterates u_1..u_n in lockstep on one noise path.
///
/// u_0 = 1 and u_{m+1}(t) = 1 + int_0^t G_{m+1}(t - s) * [sigma(u_m(s)) dW(s)]; the
/// kick for iterate m uses sigma(u_{m-1}) at the left endpoint and the
/// multiplier F rho_m. All iterates see the same increments.
class PicardEngine {
public:
    PicardEngine(SolverConfig cfg, std::shared_ptr<const SolverTables> tables)
        : cfg_(std::move(cfg)), tab_(std::move(tables)), ws_(cfg_.grid) {
        cfg_.validate();
        if (cfg_.mode.kind != Mode::picard) throw ConfigError("PicardEngine needs picard mode");
        const int n = cfg_.mode.picard_iterations;
        if (static_cast<int>(tab_->rho.size()) < n) throw ConfigError("solver tables lack mollifier factors");
        for (int m = 0; m <= n; ++m) {
            u_hat_.push_back(cfg_.grid.make_spectral());
            v_hat_.push_back(cfg_.grid.make_spectral());
            u_.push_back(cfg_.grid.make_real());
        }
    }

    /// obs(int iterate, const StepView&) for iterates 0..n at every step.
    template <class Observer>
    void run(const SeedPolicy& seed, std::uint64_t path, Observer&& obs) {
        const int n = cfg_.mode.picard_iterations;
        std::vector<char> valid(n + 1, 1);
        for (int m = 0; m <= n; ++m) {
            std::fill(u_hat_[m].begin(), u_hat_[m].end(), Complex{});
            std::fill(v_hat_[m].begin(), v_hat_[m].end(), Complex{});
            u_hat_[m][0] = 1.0;
            std::fill(u_[m].begin(), u_[m].end(), 1.0);
        }
        auto emit = [&](int step, double t) {
            for (int m = 0; m <= n; ++m) {
                bool v = valid[m] != 0;
                obs(m, StepView(step, t, u_hat_[m], v_hat_[m], u_[m], v, ws_.fft));
                valid[m] = v;
            }
        };
        emit(0, 0.0);
        const int steps = cfg_.num_steps();
        for (int j = 0; j < steps; ++j) {
            tab_->sampler.sample_spectrum(seed, path, static_cast<std::uint64_t>(j), cfg_.dt, ws_.noise_hat);
            bool noise_ready = false;
            // Highest iterate first so u_{m-1} is still at the left endpoint.
            for (int m = n; m >= 1; --m) {
                const RealField& prev = u_[m - 1];
                if (cfg_.sigma.is_constant() || m == 1) {
                    const double c = cfg_.sigma(1.0);
                    for (std::size_t i = 0; i < ws_.kick.size(); ++i) ws_.kick[i] = c * ws_.noise_hat[i];
                } else {
                    if (!valid[m - 1]) {
                        ws_.fft.inverse(u_hat_[m - 1], u_[m - 1]);
                        valid[m - 1] = 1;
                    }
                    detail::noise_kick(cfg_.sigma, &prev, ws_, noise_ready);
                    noise_ready = true;
                }
                detail::advance(tab_->rot, u_hat_[m], v_hat_[m], ws_.kick, &tab_->rho[m - 1]);
                valid[m] = 0;
            }
            for (int m = 1; m <= n; ++m) {
                if (m < n && !cfg_.sigma.is_constant()) {
                    ws_.fft.inverse(u_hat_[m], u_[m]);
                    valid[m] = 1;
                    if (!detail::all_finite(u_[m])) throw NumericalBlowup(j);
                } else if (!detail::all_finite(u_hat_[m])) {
                    throw NumericalBlowup(j);
                }
            }
            emit(j + 1, (j + 1) * cfg_.dt);
        }
    }

private:
    SolverConfig cfg_;
    std::shared_ptr<const SolverTables> tab_;
    detail::Workspace ws_;
    std::vector<SpectralField> u_hat_, v_hat_;
    std::vector<RealField> u_;
};

/// One trig step in physical variables: transform, rotate, kick, transform back.
inline FieldState step_trig(const FieldState& state, const noise::NoiseIncrement& incr, double dt,
                            const SigmaFunction& sigma) {
    require_same_grid(state.grid, incr.grid, "step_trig");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (std::abs(incr.dt - dt) > 1e-12 * dt) throw ConfigError("increment dt does not match step dt");
    const TorusGrid& g = state.grid;
    const Rotation rot = Rotation::build(g, dt);

    Fft3d fft(g);
    SpectralField u_hat = g.make_spectral(), v_hat = g.make_spectral(), kick = g.make_spectral();
    fft.forward(state.u, u_hat);
    fft.forward(state.v, v_hat);
    RealField product = g.make_real();
    for (std::size_t i = 0; i < product.size(); ++i) product[i] = sigma(state.u[i]) * incr.values[i];
    fft.forward(product, kick);
    detail::advance(rot, u_hat, v_hat, kick, nullptr);

    FieldState out{g, state.t + dt, g.make_real(), g.make_real()};
    fft.inverse(u_hat, out.u);
    fft.inverse(v_hat, out.v);
    if (!detail::all_finite(out.u) || !detail::all_finite(out.v))
        throw NumericalBlowup(static_cast<std::int64_t>(std::llround(state.t / dt)));
    return out;
}

/// Snapshots of one path of the trig (or additive) scheme.
inline std::vector<FieldState> simulate_path(const SolverConfig& cfg, const SeedPolicy& seed,
                                             std::uint64_t path) {
    cfg.validate();
    const auto steps = cfg.snapshot_steps();
    std::vector<FieldState> out;
    if (steps.empty()) return out;
    const int last = steps.back();
    SolverConfig run_cfg = cfg;
    run_cfg.T = std::max(last, 1) * cfg.dt;
    if (last == 0) {
        for (std::size_t i = 0; i < steps.size(); ++i) out.push_back(initial_state(cfg.grid));
        return out;
    }
    PathEngine engine(run_cfg, SolverTables::build(run_cfg));
    std::size_t next = 0;
    engine.run(seed, path, [&](const StepView& view) {
        while (next < steps.size() && steps[next] == view.step) {
            out.push_back(FieldState{cfg.grid, view.t, view.u(), view.v()});
            ++next;
        }
    });
    return out;
}

/// Snapshots of iterates 0..n of the Picard scheme; result[m][snapshot].
inline std::vector<std::vector<FieldState>> simulate_picard(const SolverConfig& cfg, const SeedPolicy& seed,
                                                            std::uint64_t path) {
    cfg.validate();
    const int n = cfg.mode.picard_iterations;
    const auto steps = cfg.snapshot_steps();
    std::vector<std::vector<FieldState>> out(n + 1);
    if (steps.empty()) return out;
    SolverConfig run_cfg = cfg;
    run_cfg.T = std::max(steps.back(), 1) * cfg.dt;
    PicardEngine engine(run_cfg, SolverTables::build(run_cfg));
    std::vector<std::size_t> next(n + 1, 0);
    engine.run(seed, path, [&](int m, const StepView& view) {
        while (next[m] < steps.size() && steps[next[m]] == view.step) {
            out[m].push_back(FieldState{cfg.grid, view.t, view.u(), view.v()});
            ++next[m];
        }
    });
    return out;
}

/// sum_{j<m} (F rho(k) sin(omega (m - j) dt) / omega)^2 dt per mode: the
/// variance of u_hat_k(m dt) per unit lambda_k and unit sigma in the additive
/// scheme (factor = nullptr for no mollifier).
inline std::vector<double> duhamel_factor(const SolverTables& tab, int m,
                                          const std::vector<double>* factor = nullptr) {
    std::vector<double> out(tab.rot.omega.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double w = tab.rot.omega[i];
        const double f = factor ? (*factor)[i] : 1.0;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            const double tau = (m - j) * tab.dt;
            const double s = propagator::fourier_G(tau, w / (2.0 * std::numbers::pi));
            acc += s * s;
        }
        out[i] = f * f * acc * tab.dt;
    }
    return out;
}

} // namespace swe::solver
