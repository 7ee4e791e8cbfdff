#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "swe/averages.hpp"
#include "swe/oracle.hpp"
#include "swe/runner/config.hpp"
#include "swe/solver.hpp"
#include "swe/stats.hpp"

namespace swe::runner {

inline constexpr std::uint64_t kBlockSize = 32;

/// Paths [0, paths) in blocks of kBlockSize. Each block is filled by exactly one
/// worker in path order and blocks are merged in block order, so every
/// aggregate is independent of the worker count.
///
/// make_worker() -> W (per thread), make_block() -> B,
/// run_path(W&, path, B&), merge(B&&) called on the calling thread's behalf under a lock.
template <class MakeWorker, class MakeBlock, class RunPath, class Merge>
void run_blocks(std::uint64_t paths, int threads, MakeWorker make_worker, MakeBlock make_block, RunPath run_path,
                Merge merge) {
    using Block = decltype(make_block());
    const std::uint64_t blocks = (paths + kBlockSize - 1) / kBlockSize;
    const int nthreads = static_cast<int>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(threads, blocks)));

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mutex;
    std::map<std::uint64_t, Block> ready;
    std::uint64_t merged = 0;
    std::exception_ptr error;

    auto work = [&] {
        try {
            auto worker = make_worker();
            for (;;) {
                const std::uint64_t b = next.fetch_add(1);
                if (b >= blocks || failed.load()) break;
                Block blk = make_block();
                const std::uint64_t end = std::min(paths, (b + 1) * kBlockSize);
                for (std::uint64_t p = b * kBlockSize; p < end; ++p) run_path(worker, p, blk);
                std::lock_guard lock(mutex);
                ready.emplace(b, std::move(blk));
                for (auto it = ready.find(merged); it != ready.end(); it = ready.find(merged)) {
                    merge(std::move(it->second));
                    ready.erase(it);
                    ++merged;
                }
            }
        } catch (...) {
            std::lock_guard lock(mutex);
            if (!error) error = std::current_exception();
            failed = true;
        }
    };

    if (nthreads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

/// Per-path measurements.
struct PathRecord {
    std::vector<double> F;    ///< F[r * times + s]
    std::vector<double> eta;  ///< spatial mean of sigma(u) at each eta time
    std::vector<RealField> fields;  ///< snapshots for dumped paths only
};

/// Everything an ensemble run measures; per-path data stays in path order.
struct EnsembleResult {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    TorusGrid grid{8, 1.0};
    std::vector<double> radii;
    std::vector<double> times;
    std::vector<double> eta_times;
    std::vector<std::pair<double, double>> lag_pairs;
    std::vector<PathRecord> paths;
    std::vector<stats::LagCurve> lag_curves;

    std::size_t radius_index(double R) const {
        for (std::size_t i = 0; i < radii.size(); ++i)
            if (std::abs(radii[i] - R) < 1e-12) return i;
        throw ConfigError("radius " + std::to_string(R) + " was not measured");
    }
    std::size_t time_index(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - t) < 1e-9) return i;
        throw ConfigError("time " + std::to_string(t) + " was not measured");
    }

    stats::Ensemble ensemble(double R, double t) const {
        const std::size_t r = radius_index(R), s = time_index(t);
        stats::Ensemble e;
        e.meta = {R, t, config_hash, seed};
        e.samples.reserve(paths.size());
        for (const auto& p : paths) e.samples.push_back(p.F[r * times.size() + s]);
        return e;
    }

    oracle::EtaCurve eta_curve() const {
        oracle::EtaCurve c;
        for (std::size_t i = 0; i < eta_times.size(); ++i) {
            std::vector<double> v;
            v.reserve(paths.size());
            for (const auto& p : paths) v.push_back(p.eta[i]);
            const double m = stats::mean(v);
            double var = 0.0;
            for (double x : v) var += (x - m) * (x - m);
            c.times.push_back(eta_times[i]);
            c.values.push_back(m);
            c.stderrs.push_back(v.size() > 1 ? std::sqrt(var / (v.size() - 1.0) / v.size()) : 0.0);
        }
        return c;
    }

    const stats::LagCurve& lag_curve(double t1, double t2) const {
        for (std::size_t i = 0; i < lag_pairs.size(); ++i)
            if (std::abs(lag_pairs[i].first - t1) < 1e-9 && std::abs(lag_pairs[i].second - t2) < 1e-9)
                return lag_curves[i];
        throw ConfigError("no lag curve for the requested time pair");
    }
};

struct EnsembleOptions {
    bool eta = false;
    bool lag_curves = false;
};

/// Runs cfg.paths paths of the configured solver mode (trig or additive) and measures
/// F_R at every measurement time, eta on its time grid and the lag cross-spectra.
inline EnsembleResult run_ensemble(const ExperimentConfig& cfg, EnsembleOptions opt) {
    const solver::SolverConfig scfg = cfg.solver_config();
    if (scfg.mode.kind == solver::Mode::picard) throw ConfigError("ensembles run in trig or additive mode");
    const auto tables = solver::SolverTables::build(scfg);
    const TorusGrid grid = scfg.grid;
    const int nsteps = scfg.num_steps();

    EnsembleResult res;
    res.config_hash = cfg.hash();
    res.seed = cfg.seed;
    res.grid = grid;
    res.radii = cfg.radii;
    res.times = scfg.snapshot_times;

    std::vector<int> snap_at(nsteps + 1, -1);
    for (std::size_t s = 0; s < res.times.size(); ++s) snap_at[scfg.step_of(res.times[s])] = static_cast<int>(s);

    std::vector<int> eta_at(nsteps + 1, -1);
    if (opt.eta) {
        std::vector<int> steps;
        if (cfg.eta_stride > 0)
            for (int j = 0; j <= nsteps; j += cfg.eta_stride) steps.push_back(j);
        steps.push_back(0);
        steps.push_back(nsteps);
        for (double t : res.times) steps.push_back(scfg.step_of(t));
        std::sort(steps.begin(), steps.end());
        steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
        for (std::size_t i = 0; i < steps.size(); ++i) {
            eta_at[steps[i]] = static_cast<int>(i);
            res.eta_times.push_back(steps[i] * scfg.dt);
        }
    }

    // Lag pairs: keep u_hat at the earlier time, accumulate at the later one.
    struct PairSteps {
        int s1, s2;
    };
    std::vector<PairSteps> pair_steps;
    std::vector<int> keep_steps;
    if (opt.lag_curves) {
        for (auto [t1, t2] : cfg.covariance_pairs) {
            res.lag_pairs.emplace_back(t1, t2);
            pair_steps.push_back({scfg.step_of(t1), scfg.step_of(t2)});
            keep_steps.push_back(scfg.step_of(t1));
            keep_steps.push_back(scfg.step_of(t2));
        }
        std::sort(keep_steps.begin(), keep_steps.end());
        keep_steps.erase(std::unique(keep_steps.begin(), keep_steps.end()), keep_steps.end());
    }

    std::vector<averages::BallFunctional> balls;
    for (double R : cfg.radii) balls.emplace_back(averages::ball_weights(grid, R));

    const solver::SigmaFunction sigma = scfg.sigma;
    const SeedPolicy seed{cfg.seed};
    res.paths.resize(cfg.paths);
    const std::size_t ntimes = res.times.size();

    struct Worker {
        solver::PathEngine engine;
        std::map<int, SpectralField> kept;
    };
    struct Block {
        std::vector<stats::LagAccumulator> lags;
    };

    auto make_worker = [&] {
        Worker w{solver::PathEngine(scfg, tables), {}};
        for (int s : keep_steps) w.kept.emplace(s, grid.make_spectral());
        return w;
    };
    auto make_block = [&] {
        Block b;
        for (std::size_t i = 0; i < pair_steps.size(); ++i) b.lags.emplace_back(grid);
        return b;
    };
    auto run_path = [&](Worker& w, std::uint64_t path, Block& blk) {
        PathRecord rec;
        rec.F.assign(balls.size() * ntimes, 0.0);
        rec.eta.assign(res.eta_times.size(), 0.0);
        const bool dump = path < cfg.dump_field_paths;
        w.engine.run(seed, path, [&](const solver::StepView& view) {
            const int s = snap_at[view.step];
            if (s >= 0) {
                for (std::size_t r = 0; r < balls.size(); ++r) rec.F[r * ntimes + s] = balls[r](view.u_hat);
                if (dump) rec.fields.push_back(view.u());
            }
            const int e = eta_at[view.step];
            if (e >= 0) rec.eta[e] = stats::eta_path_mean(view.u(), sigma);
            auto kept = w.kept.find(view.step);
            if (kept != w.kept.end()) std::copy(view.u_hat.begin(), view.u_hat.end(), kept->second.begin());
            for (std::size_t i = 0; i < pair_steps.size(); ++i) {
                if (std::max(pair_steps[i].s1, pair_steps[i].s2) == view.step)
                    blk.lags[i].add(w.kept.at(pair_steps[i].s1), w.kept.at(pair_steps[i].s2));
            }
        });
        res.paths[path] = std::move(rec);
    };

    std::vector<stats::LagAccumulator> total;
    for (std::size_t i = 0; i < pair_steps.size(); ++i) total.emplace_back(grid);
    auto merge = [&](Block&& b) {
        for (std::size_t i = 0; i < total.size(); ++i) total[i].merge(b.lags[i]);
    };

    run_blocks(cfg.paths, cfg.threads, make_worker, make_block, run_path, merge);
    for (const auto& acc : total) res.lag_curves.push_back(acc.curve());
    return res;
}

/// sup over snapshot times of the grid RMS of u_n - u_ref, per Picard iterate n = 0..n_max, on one path.
inline std::vector<double> picard_errors(const ExperimentConfig& cfg, std::uint64_t path) {
    solver::SolverConfig ref_cfg = cfg.solver_config();
    ref_cfg.mode = solver::SolverMode::trig();
    solver::SolverConfig pic_cfg = ref_cfg;
    pic_cfg.mode = solver::SolverMode::picard(cfg.picard_iterations);
    const SeedPolicy seed{cfg.seed};

    const auto ref = solver::simulate_path(ref_cfg, seed, path);
    const auto iterates = solver::simulate_picard(pic_cfg, seed, path);
    std::vector<double> err;
    for (const auto& snaps : iterates) {
        double sup = 0.0;
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            double ss = 0.0;
            for (std::size_t i = 0; i < snaps[s].u.size(); ++i) {
                const double d = snaps[s].u[i] - ref[s].u[i];
                ss += d * d;
            }
            sup = std::max(sup, std::sqrt(ss / static_cast<double>(snaps[s].u.size())));
        }
        err.push_back(sup);
    }
    return err;
}

} // namespace swe::runner
