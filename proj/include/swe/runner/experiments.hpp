#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "swe/kernels.hpp"
#include "swe/oracle.hpp"
#include "swe/propagator.hpp"
#include "swe/runner/config.hpp"
#include "swe/runner/ensemble.hpp"
#include "swe/runner/io.hpp"
#include "swe/stats.hpp"

namespace swe::runner {

struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    std::string relation;  ///< "<=", ">=", "in", "monotone"
    bool pass = false;
};

inline json to_json(const Check& c) {
    return {{"name", c.name}, {"value", c.value}, {"limit", c.limit}, {"relation", c.relation}, {"pass", c.pass}};
}

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    std::string started;
    std::string finished;
    std::vector<OutputFile> outputs;
    std::vector<Check> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline Check check_le(std::string name, double value, double limit) {
    return {std::move(name), value, limit, "<=", value <= limit};
}
inline Check check_ge(std::string name, double value, double limit) {
    return {std::move(name), value, limit, ">=", value >= limit};
}

/// Nonincreasing up to one rise of at most `slack`; value is the worst rise.
inline Check check_nonincreasing(std::string name, const std::vector<double>& v, double slack) {
    int rises = 0;
    double worst = 0.0;
    bool big = false;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double d = v[i] - v[i - 1];
        if (d > 0.0) {
            ++rises;
            worst = std::max(worst, d);
            if (d > slack) big = true;
        }
    }
    return {std::move(name), worst, slack, "monotone", rises <= 1 && !big};
}

/// Relative difference |a - b| / |b|.
inline double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

namespace detail {

struct Emitter {
    fs::path dir;
    RunManifest& manifest;

    void file(const std::string& name, const std::string& bytes) { manifest.outputs.push_back(write_atomic(dir, name, bytes)); }
};

inline std::string samples_csv(const EnsembleResult& res) {
    Csv csv({"path_index", "R", "t", "value"});
    for (std::size_t p = 0; p < res.paths.size(); ++p)
        for (std::size_t r = 0; r < res.radii.size(); ++r)
            for (std::size_t s = 0; s < res.times.size(); ++s)
                csv.row(p, res.radii[r], res.times[s], res.paths[p].F[r * res.times.size() + s]);
    return csv.str();
}

inline void dump_fields(const ExperimentConfig& cfg, const EnsembleResult& res, Emitter& out) {
    for (std::size_t p = 0; p < res.paths.size(); ++p) {
        const auto& fields = res.paths[p].fields;
        for (std::size_t s = 0; s < fields.size(); ++s) {
            const std::string name = "path" + std::to_string(p) + "_t" + fmt(res.times[s]) + ".field";
            out.file(name, encode_field(cfg.grid(), res.times[s], fields[s]));
        }
    }
}

inline void dump_multipliers(const ExperimentConfig& cfg, Emitter& out) {
    const auto scfg = cfg.solver_config();
    const auto weights = noise::spectral_weights(scfg.grid, scfg.kernel, scfg.weight_rule);
    const auto rot = solver::Rotation::build(scfg.grid, scfg.dt);
    const auto seq = propagator::MollifierSequence::dyadic();
    std::vector<std::string> header{"kx", "xi", "cos_wdt", "sin_over_w", "lambda"};
    for (int m = 1; m <= cfg.picard_iterations; ++m) header.push_back("rho_" + std::to_string(m));
    std::string text;
    {
        Csv csv(header);
        text = csv.str();
    }
    const TorusGrid g = scfg.grid;
    for (int kx = 0; kx <= g.n() / 2; ++kx) {
        const std::size_t idx = g.mode_index(kx, 0, 0);
        const double xi = kx / g.length();
        text += std::to_string(kx) + "," + fmt(xi) + "," + fmt(rot.cos_wdt[idx]) + "," + fmt(rot.sin_over_w[idx]) +
                "," + fmt(weights.lambda[idx]);
        for (int m = 1; m <= cfg.picard_iterations; ++m) text += "," + fmt(propagator::fourier_rho(m, xi, seq));
        text += "\n";
    }
    out.file("multipliers.csv", text);
}

inline double sigma_constant(const ExperimentConfig& cfg) { return cfg.sigma()(1.0); }

} // namespace detail

/// clt-scan table at time t: (R, variance, stderr, w1, kolmogorov, mc_floor).
struct CltRow {
    double R, variance, variance_se, w1, kolmogorov, mc_floor;
};

inline std::vector<CltRow> clt_table(const EnsembleResult& res, double t) {
    std::vector<CltRow> rows;
    for (double R : res.radii) {
        const auto e = res.ensemble(R, t);
        const auto v = stats::variance_with_ci(e);
        const auto d = stats::wasserstein1_to_normal(e, true);
        rows.push_back({R, v.value, v.stderr_, d.w1, d.kolmogorov, d.mc_floor});
    }
    return rows;
}

struct CovarianceRow {
    double t1, t2, R, cov, cov_se, normalized, target, parseval;
};

/// Normalized covariances against the limit targets (Riesz: eta curve; L1: lag-curve integral).
inline std::vector<CovarianceRow> covariance_table(const ExperimentConfig& cfg, const EnsembleResult& res) {
    const auto kernel = cfg.kernel();
    const double R = cfg.cov_radius();
    std::vector<CovarianceRow> rows;
    const auto eta = res.eta_times.empty() ? oracle::EtaCurve{} : res.eta_curve();
    const bool additive = cfg.mode.kind == solver::Mode::additive;
    const double c = detail::sigma_constant(cfg);
    for (auto [t1, t2] : cfg.covariance_pairs) {
        const auto cov = stats::covariance_estimate(res.ensemble(R, t1), res.ensemble(R, t2));
        CovarianceRow row{t1, t2, R, cov.value, cov.stderr_, 0.0, 0.0, std::nan("")};
        if (kernel.is_riesz()) {
            const double beta = kernel.riesz_beta();
            const double scale = std::pow(R, beta - 6.0);
            row.normalized = cov.value * scale;
            row.target = oracle::limit_covariance_riesz(t1, t2, beta, eta).value;
            if (additive) row.parseval = oracle::riesz_additive_limit(t1, t2, beta, c);
        } else {
            row.normalized = cov.value / (R * R * R);
            const double radius = cfg.lag_radius > 0.0 ? cfg.lag_radius : t1 + t2 + 2.0;
            row.target = oracle::limit_covariance_l1(t1, t2, res.lag_curve(t1, t2), radius).value;
            if (additive) row.parseval = oracle::l1_additive_limit(t1, t2, kernel, c);
        }
        rows.push_back(row);
    }
    return rows;
}

struct IncrementRow {
    double delta, moment, moment_se;
};

inline std::vector<IncrementRow> increment_table(const ExperimentConfig& cfg, const EnsembleResult& res) {
    std::vector<IncrementRow> rows;
    const double R = cfg.incr_radius();
    const double end = cfg.incr_end();
    std::vector<double> lags = cfg.increment_lags;
    std::sort(lags.begin(), lags.end());
    for (double d : lags) {
        const auto m = stats::increment_moment(res.ensemble(R, end - d), res.ensemble(R, end));
        rows.push_back({d, m.value, m.stderr_});
    }
    return rows;
}

inline stats::ScalingFit increment_fit(const std::vector<IncrementRow>& rows) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(r.delta, r.moment);
    return stats::scaling_exponent_fit(pts);
}

/// Executes one experiment, writes its CSVs, summary.json and manifest.json into `out_dir`.
inline RunManifest run(const ExperimentConfig& cfg) {
    cfg.validate();
    RunManifest man;
    man.config_hash = cfg.hash();
    man.seed = cfg.seed;
    man.started = utc_now();
    detail::Emitter out{fs::path(cfg.output_dir), man};
    json summary;
    summary["kind"] = to_string(cfg.kind);
    summary["config_hash"] = hex64(man.config_hash);
    summary["seed"] = cfg.seed;

    const auto kernel = cfg.kernel();
    const bool additive = cfg.mode.kind == solver::Mode::additive;

    if (cfg.dump_multipliers) detail::dump_multipliers(cfg, out);

    switch (cfg.kind) {
    case Kind::report:
        throw ConfigError("report is handled by report()");

    case Kind::oracle: {
        Csv csv({"R", "t", "value", "source"});
        std::vector<std::pair<double, double>> pts;
        for (double R : cfg.radii) {
            const double v = oracle::linear_variance(R, cfg.T, kernel, detail::sigma_constant(cfg));
            csv.row(R, cfg.T, v, "oracle");
            pts.emplace_back(R, v);
        }
        out.file("oracle.csv", csv.str());
        const double target = kernel.is_riesz() ? 6.0 - kernel.riesz_beta() : 3.0;
        if (pts.size() >= 3) {
            const auto fit = stats::scaling_exponent_fit(pts);
            summary["slope"] = fit.slope;
            summary["slope_target"] = target;
            summary["r_squared"] = fit.r_squared;
            man.checks.push_back(check_le("oracle_slope_error", std::abs(fit.slope - target),
                                          cfg.tolerance("slope_tol", 0.15)));
        }
        if (kernel.is_riesz()) {
            summary["tau_beta"] = kernels::tau_beta(kernel.riesz_beta());
            summary["riesz_constant"] = kernels::riesz_constant(kernel.riesz_beta());
        }
        break;
    }

    case Kind::picard_check: {
        const auto err = picard_errors(cfg, 0);
        Csv csv({"n", "error"});
        for (std::size_t n = 0; n < err.size(); ++n) csv.row(n, err[n]);
        out.file("picard.csv", csv.str());
        std::vector<double> tail(err.begin() + 1, err.end());
        bool mono = true;
        for (std::size_t i = 1; i < tail.size(); ++i) mono = mono && tail[i] <= tail[i - 1];
        man.checks.push_back({"picard_monotone", tail.empty() ? 0.0 : tail.back(), 0.0, "monotone", mono});
        if (tail.size() >= 2)
            man.checks.push_back(check_le("picard_last_over_first", tail.back() / tail.front(),
                                          cfg.tolerance("ratio_max", 0.25)));
        summary["errors"] = err;
        break;
    }

    default: {
        EnsembleOptions opt;
        opt.eta = cfg.kind == Kind::covariance_limit || cfg.kind == Kind::simulate;
        opt.lag_curves = cfg.kind == Kind::covariance_limit && !kernel.is_riesz();
        const auto res = run_ensemble(cfg, opt);
        out.file("samples.csv", detail::samples_csv(res));
        if (cfg.dump_field_paths > 0) detail::dump_fields(cfg, res, out);

        if (cfg.kind == Kind::simulate) {
            json stats_j = json::array();
            for (double R : res.radii)
                for (double t : res.times) {
                    const auto e = res.ensemble(R, t);
                    json row = {{"R", R}, {"t", t}, {"mean", stats::mean(e.samples)}};
                    if (e.size() >= 2) row["variance"] = stats::variance_with_ci(e).value;
                    stats_j.push_back(row);
                }
            summary["moments"] = stats_j;
            if (!res.eta_times.empty()) {
                const auto eta = res.eta_curve();
                Csv csv({"t", "eta", "stderr"});
                for (std::size_t i = 0; i < eta.times.size(); ++i) csv.row(eta.times[i], eta.values[i], eta.stderrs[i]);
                out.file("eta.csv", csv.str());
            }
        }

        if (cfg.kind == Kind::clt_scan) {
            const auto rows = clt_table(res, cfg.T);
            Csv csv({"R", "t", "variance", "variance_se", "w1", "kolmogorov", "mc_floor"});
            std::vector<double> w1s;
            std::vector<std::pair<double, double>> w1_pts;
            for (const auto& r : rows) {
                csv.row(r.R, cfg.T, r.variance, r.variance_se, r.w1, r.kolmogorov, r.mc_floor);
                w1s.push_back(r.w1);
                w1_pts.emplace_back(r.R, r.w1);
            }
            out.file("clt.csv", csv.str());
            if (w1_pts.size() >= 3) summary["w1_decay_slope"] = stats::scaling_exponent_fit(w1_pts).slope;
            if (cfg.has_tolerance("w1_max"))
                man.checks.push_back(check_le("w1_at_largest_R", rows.back().w1, cfg.tolerance("w1_max", 0.1)));
            if (cfg.has_tolerance("monotone_slack"))
                man.checks.push_back(check_nonincreasing("w1_nonincreasing", w1s, cfg.tolerance("monotone_slack", 0.01)));
            if (cfg.has_tolerance("floor_margin"))
                for (const auto& r : rows)
                    man.checks.push_back(check_le("w1_minus_floor_R" + fmt(r.R), r.w1 - r.mc_floor,
                                                  cfg.tolerance("floor_margin", 0.02)));
        }

        if (cfg.kind == Kind::variance_scan) {
            Csv csv({"R", "t", "value", "stderr", "source"});
            std::vector<std::pair<double, double>> pts;
            const auto scfg = cfg.solver_config();
            std::shared_ptr<const solver::SolverTables> tables;
            if (additive) tables = solver::SolverTables::build(scfg);
            for (double R : res.radii) {
                const auto v = stats::variance_with_ci(res.ensemble(R, cfg.T));
                csv.row(R, cfg.T, v.value, v.stderr_, "measured");
                pts.emplace_back(R, v.value);
                if (additive) {
                    const double c = detail::sigma_constant(cfg);
                    const averages::BallFunctional ball(averages::ball_weights(res.grid, R));
                    const double lattice = oracle::lattice_linear_variance(*tables, ball, scfg.num_steps(), c);
                    const double cont = oracle::linear_variance(R, cfg.T, kernel, c);
                    csv.row(R, cfg.T, lattice, 0.0, "oracle-lattice");
                    csv.row(R, cfg.T, cont, 0.0, "oracle");
                    if (cfg.has_tolerance("lattice_sigmas"))
                        man.checks.push_back(check_le("lattice_zscore_R" + fmt(R), std::abs(v.value - lattice) / v.stderr_,
                                                      cfg.tolerance("lattice_sigmas", 3.0)));
                    if (cfg.has_tolerance("continuum_rel"))
                        man.checks.push_back(check_le("continuum_rel_R" + fmt(R), rel_diff(v.value, cont),
                                                      cfg.tolerance("continuum_rel", 0.05)));
                }
            }
            out.file("variance.csv", csv.str());
            const auto fit = stats::scaling_exponent_fit(pts);
            summary["slope"] = fit.slope;
            summary["intercept"] = fit.intercept;
            summary["r_squared"] = fit.r_squared;
            if (cfg.has_tolerance("slope_min")) man.checks.push_back(check_ge("slope_min", fit.slope, cfg.tolerance("slope_min", 0)));
            if (cfg.has_tolerance("slope_max")) man.checks.push_back(check_le("slope_max", fit.slope, cfg.tolerance("slope_max", 0)));
            if (cfg.has_tolerance("r2_min")) man.checks.push_back(check_ge("r2_min", fit.r_squared, cfg.tolerance("r2_min", 0)));
        }

        if (cfg.kind == Kind::covariance_limit) {
            const auto rows = covariance_table(cfg, res);
            Csv csv({"t1", "t2", "R", "cov", "cov_se", "normalized", "target", "parseval"});
            for (const auto& r : rows) {
                csv.row(r.t1, r.t2, r.R, r.cov, r.cov_se, r.normalized, r.target, r.parseval);
                man.checks.push_back(check_le("cov_rel_" + fmt(r.t1) + "_" + fmt(r.t2), rel_diff(r.normalized, r.target),
                                              cfg.tolerance("covariance_rel", 0.15)));
                if (additive && cfg.has_tolerance("parseval_rel")) {
                    man.checks.push_back(check_le("parseval_rel_meas_" + fmt(r.t1) + "_" + fmt(r.t2),
                                                  rel_diff(r.normalized, r.parseval), cfg.tolerance("parseval_rel", 0.1)));
                    man.checks.push_back(check_le("parseval_rel_lag_" + fmt(r.t1) + "_" + fmt(r.t2),
                                                  rel_diff(r.target, r.parseval), cfg.tolerance("parseval_rel", 0.1)));
                }
            }
            out.file("covariance.csv", csv.str());
            if (!res.eta_times.empty()) {
                const auto eta = res.eta_curve();
                Csv ecsv({"t", "eta", "stderr"});
                for (std::size_t i = 0; i < eta.times.size(); ++i) ecsv.row(eta.times[i], eta.values[i], eta.stderrs[i]);
                out.file("eta.csv", ecsv.str());
            }
        }

        if (cfg.kind == Kind::tightness_scan) {
            const auto rows = increment_table(cfg, res);
            Csv csv({"delta", "moment", "stderr"});
            for (const auto& r : rows) csv.row(r.delta, r.moment, r.moment_se);
            out.file("increments.csv", csv.str());
            const auto fit = increment_fit(rows);
            summary["slope"] = fit.slope;
            summary["r_squared"] = fit.r_squared;
            man.checks.push_back(check_ge("increment_slope", fit.slope, cfg.tolerance("slope_min", 1.7)));
        }
        break;
    }
    }

    summary["checks"] = json::array();
    for (const auto& c : man.checks) summary["checks"].push_back(to_json(c));
    summary["passed"] = man.passed();
    out.file("summary.json", summary.dump(2) + "\n");

    man.finished = utc_now();
    json mj;
    mj["config_hash"] = hex64(man.config_hash);
    mj["tool_version"] = man.tool_version;
    mj["seed"] = man.seed;
    mj["started"] = man.started;
    mj["finished"] = man.finished;
    mj["config"] = cfg.physics_json();
    mj["outputs"] = json::array();
    for (const auto& f : man.outputs)
        mj["outputs"].push_back({{"file", f.name}, {"crc32", hex32(f.crc32)}, {"bytes", f.bytes}});
    write_atomic(out.dir, "manifest.json", mj.dump(2) + "\n");
    return man;
}

struct ReportResult {
    bool checksums_ok = true;
    bool checks_ok = true;
    std::vector<std::string> lines;
};

/// Re-reads a finished run directory: verifies every listed checksum and restates the checks.
inline ReportResult report(const fs::path& dir) {
    ReportResult rep;
    const json man = json::parse(read_file(dir / "manifest.json"));
    for (const auto& f : man.at("outputs")) {
        const std::string name = f.at("file");
        bool ok = false;
        try {
            ok = hex32(crc32_of(read_file(dir / name))) == f.at("crc32").get<std::string>();
        } catch (const std::exception&) {
            ok = false;
        }
        rep.checksums_ok = rep.checksums_ok && ok;
        rep.lines.push_back(std::string(ok ? "ok       " : "MISMATCH ") + name);
    }
    const json summary = json::parse(read_file(dir / "summary.json"));
    for (const auto& c : summary.at("checks")) {
        const bool pass = c.at("pass");
        rep.checks_ok = rep.checks_ok && pass;
        rep.lines.push_back(std::string(pass ? "PASS " : "FAIL ") + c.at("name").get<std::string>() + " = " +
                            fmt(c.at("value")) + " (" + c.at("relation").get<std::string>() + " " +
                            fmt(c.at("limit")) + ")");
    }
    return rep;
}

} // namespace swe::runner
