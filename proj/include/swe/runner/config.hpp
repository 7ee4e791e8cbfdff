#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "swe/error.hpp"
#include "swe/kernels.hpp"
#include "swe/noise.hpp"
#include "swe/solver.hpp"

namespace swe::runner {

using json = nlohmann::json;

enum class Kind { simulate, clt_scan, variance_scan, covariance_limit, picard_check, tightness_scan, oracle, report };

inline Kind parse_kind(const std::string& s) {
    static const std::map<std::string, Kind> kinds{
        {"simulate", Kind::simulate},           {"clt-scan", Kind::clt_scan},
        {"variance-scan", Kind::variance_scan}, {"covariance-limit", Kind::covariance_limit},
        {"picard-check", Kind::picard_check},   {"tightness-scan", Kind::tightness_scan},
        {"oracle", Kind::oracle},               {"oracle-only", Kind::oracle},
        {"report", Kind::report}};
    auto it = kinds.find(s);
    if (it == kinds.end()) throw ConfigError("unknown experiment kind '" + s + "'");
    return it->second;
}

inline std::string to_string(Kind k) {
    switch (k) {
    case Kind::simulate: return "simulate";
    case Kind::clt_scan: return "clt-scan";
    case Kind::variance_scan: return "variance-scan";
    case Kind::covariance_limit: return "covariance-limit";
    case Kind::picard_check: return "picard-check";
    case Kind::tightness_scan: return "tightness-scan";
    case Kind::oracle: return "oracle";
    case Kind::report: return "report";
    }
    return "?";
}

/// One experiment, as read from a JSON file. `raw` keeps the parsed document
/// for hashing and for the manifest.
struct ExperimentConfig {
    Kind kind = Kind::simulate;
    json kernel_spec = {{"type", "gaussian"}, {"scale", 0.5}};
    json sigma_spec = {{"type", "sine_shift"}, {"epsilon", 0.5}};
    int N = 64;
    double L = 24.0;
    double dt = 1.0 / 64.0;
    double T = 1.0;
    std::vector<double> snapshot_times{1.0};
    std::vector<double> radii{2.0, 3.0, 4.0, 6.0, 8.0};
    std::uint64_t paths = 2000;
    std::uint64_t seed = 20240601;
    solver::SolverMode mode = solver::SolverMode::trig();
    noise::WeightRule weight_rule = noise::WeightRule::cell_mass;
    std::string output_dir = "out";
    int threads = 1;
    std::map<std::string, double> tolerances;
    std::vector<std::pair<double, double>> covariance_pairs;
    double covariance_radius = 0.0;  ///< 0: largest radius
    std::vector<double> increment_lags;
    double increment_end = 0.0;  ///< 0: T
    double increment_radius = 0.0;  ///< 0: largest radius
    int eta_stride = 0;  ///< record eta every k steps; 0: only at snapshot times
    double lag_radius = 0.0;  ///< 0: t1 + t2 + 2
    int picard_iterations = 4;
    std::uint64_t dump_field_paths = 0;
    bool dump_multipliers = false;

    kernels::CorrelationKernel kernel() const {
        const std::string type = kernel_spec.value("type", "");
        if (type == "gaussian") return kernels::CorrelationKernel::gaussian(kernel_spec.value("scale", 1.0));
        if (type == "riesz") return kernels::CorrelationKernel::riesz(kernel_spec.value("beta", 1.0));
        throw ConfigError("kernel.type must be gaussian or riesz");
    }

    solver::SigmaFunction sigma() const {
        const std::string type = sigma_spec.value("type", "");
        if (type == "constant") return solver::SigmaFunction::constant(sigma_spec.value("c", 1.0));
        if (type == "linear") return solver::SigmaFunction::linear(sigma_spec.value("a", 0.0), sigma_spec.value("b", 1.0));
        if (type == "sine_shift") return solver::SigmaFunction::sine_shift(sigma_spec.value("epsilon", 0.5));
        throw ConfigError("sigma.type must be constant, linear or sine_shift");
    }

    TorusGrid grid() const { return TorusGrid(N, L); }

    double max_radius() const { return radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end()); }
    double cov_radius() const { return covariance_radius > 0.0 ? covariance_radius : max_radius(); }
    double incr_radius() const { return increment_radius > 0.0 ? increment_radius : max_radius(); }
    double incr_end() const { return increment_end > 0.0 ? increment_end : T; }

    /// Every time the ensemble must record: snapshots, covariance and increment times.
    std::vector<double> measurement_times() const {
        std::vector<double> t = snapshot_times;
        for (auto [a, b] : covariance_pairs) {
            t.push_back(a);
            t.push_back(b);
        }
        for (double d : increment_lags) {
            t.push_back(incr_end());
            t.push_back(incr_end() - d);
        }
        std::sort(t.begin(), t.end());
        std::vector<double> out;
        for (double x : t)
            if (out.empty() || std::abs(x - out.back()) > 1e-9 * dt) out.push_back(x);
        return out;
    }

    solver::SolverConfig solver_config() const {
        solver::SolverConfig c;
        c.grid = grid();
        c.dt = dt;
        c.T = T;
        c.sigma = sigma();
        c.kernel = kernel();
        c.mode = mode;
        c.snapshot_times = measurement_times();
        c.weight_rule = weight_rule;
        return c;
    }

    double tolerance(const std::string& key, double fallback) const {
        auto it = tolerances.find(key);
        return it == tolerances.end() ? fallback : it->second;
    }
    bool has_tolerance(const std::string& key) const { return tolerances.count(key) != 0; }

    /// Physics-relevant fields only; output location, threads and tolerances are excluded.
    json physics_json() const {
        json j;
        j["kind"] = to_string(kind);
        j["kernel"] = kernel_spec;
        j["sigma"] = sigma_spec;
        j["grid"] = {{"N", N}, {"L", L}};
        j["dt"] = dt;
        j["T"] = T;
        j["snapshot_times"] = snapshot_times;
        j["radii"] = radii;
        j["paths"] = paths;
        j["seed"] = seed;
        j["mode"] = {{"type", mode.kind == solver::Mode::trig       ? "trig"
                              : mode.kind == solver::Mode::additive ? "additive"
                                                                    : "picard"},
                     {"iterations", mode.picard_iterations}};
        j["spectral_weights"] = noise::to_string(weight_rule);
        j["covariance_pairs"] = covariance_pairs;
        j["covariance_radius"] = covariance_radius;
        j["increment_lags"] = increment_lags;
        j["increment_end"] = increment_end;
        j["increment_radius"] = increment_radius;
        j["eta_stride"] = eta_stride;
        j["lag_radius"] = lag_radius;
        j["picard_iterations"] = picard_iterations;
        return j;
    }

    /// FNV-1a (64 bit) of the canonical physics JSON.
    std::uint64_t hash() const {
        const std::string s = physics_json().dump();
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    bool is_clt_kind() const {
        return kind == Kind::clt_scan || kind == Kind::variance_scan || kind == Kind::covariance_limit ||
               kind == Kind::tightness_scan;
    }

    /// Structured checks of every stated invariant; throws ConfigError naming the one violated.
    void validate() const {
        if (kind == Kind::report) return;
        const auto g = grid();
        const auto k = kernel();
        const auto s = sigma();
        if (radii.empty()) throw ConfigError("radii: at least one radius is required");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!(radii[i] > 0.0)) throw ConfigError("radii: must be positive");
            if (i > 0 && !(radii[i] > radii[i - 1])) throw ConfigError("radii: must be strictly increasing");
        }
        if (kind == Kind::oracle) {
            if (k.is_riesz() && !k.riesz_dalang_admissible())
                throw ConfigError("kernel: Dalang's condition fails (Riesz beta must be < 2)");
            return;
        }
        if (paths < 1) throw ConfigError("paths: must be >= 1");
        if (threads < 1) throw ConfigError("threads: must be >= 1");
        const double need = 2.0 * (max_radius() + T) + 4.0 * g.h();
        if (L < need)
            throw ConfigError("grid.L: L >= 2(max radius + T) + 4h violated (L = " + std::to_string(L) +
                              ", need " + std::to_string(need) + ")");
        auto sc = solver_config();
        sc.validate();
        for (double t : measurement_times())
            if (t < -1e-12 || t > T + 1e-12) throw ConfigError("measurement time outside [0, T]");
        if (k.is_riesz() && !k.riesz_dalang_admissible())
            throw ConfigError("kernel: Dalang's condition fails (Riesz beta must be < 2)");
        if (!k.is_riesz() && !kernels::check_dalang(k).converged)
            throw ConfigError("kernel: Dalang's condition fails");
        if (is_clt_kind()) {
            if (mode.kind == solver::Mode::additive) {
                if (s(1.0) == 0.0) throw ConfigError("sigma: sigma(1) must be nonzero");
            } else {
                s.require_clt_admissible();
            }
        }
        if (kind == Kind::picard_check && picard_iterations < 1)
            throw ConfigError("picard_iterations: must be >= 1");
        if (kind == Kind::tightness_scan && increment_lags.size() < 2)
            throw ConfigError("increment_lags: need at least two lags");
        if (kind == Kind::covariance_limit && covariance_pairs.empty())
            throw ConfigError("covariance_pairs: at least one pair is required");
        if (eta_stride < 0) throw ConfigError("eta_stride: must be >= 0");
    }
};

namespace detail {

inline std::vector<double> read_doubles(const json& j, const char* key) {
    std::vector<double> out;
    for (const auto& v : j.at(key)) out.push_back(v.get<double>());
    return out;
}

} // namespace detail

inline ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("kind")) c.kind = parse_kind(j.at("kind").get<std::string>());
        if (j.contains("kernel")) c.kernel_spec = j.at("kernel");
        if (j.contains("sigma")) c.sigma_spec = j.at("sigma");
        if (j.contains("grid")) {
            c.N = j.at("grid").value("N", c.N);
            c.L = j.at("grid").value("L", c.L);
        }
        c.dt = j.value("dt", c.dt);
        c.T = j.value("T", c.T);
        if (j.contains("snapshot_times")) c.snapshot_times = detail::read_doubles(j, "snapshot_times");
        if (j.contains("radii")) c.radii = detail::read_doubles(j, "radii");
        c.paths = j.value("paths", c.paths);
        c.seed = j.value("seed", c.seed);
        if (j.contains("mode")) {
            const json& m = j.at("mode");
            const std::string type = m.is_string() ? m.get<std::string>() : m.value("type", "trig");
            if (type == "trig") c.mode = solver::SolverMode::trig();
            else if (type == "additive") c.mode = solver::SolverMode::additive();
            else if (type == "picard") c.mode = solver::SolverMode::picard(m.is_object() ? m.value("iterations", 4) : 4);
            else throw ConfigError("mode.type must be trig, additive or picard");
        }
        if (j.contains("spectral_weights")) c.weight_rule = noise::parse_weight_rule(j.at("spectral_weights"));
        c.output_dir = j.value("output_dir", c.output_dir);
        c.threads = j.value("threads", c.threads);
        if (j.contains("tolerances"))
            for (auto& [k, v] : j.at("tolerances").items()) c.tolerances[k] = v.get<double>();
        if (j.contains("covariance_pairs"))
            for (const auto& p : j.at("covariance_pairs")) c.covariance_pairs.emplace_back(p.at(0), p.at(1));
        c.covariance_radius = j.value("covariance_radius", c.covariance_radius);
        if (j.contains("increment_lags")) c.increment_lags = detail::read_doubles(j, "increment_lags");
        c.increment_end = j.value("increment_end", c.increment_end);
        c.increment_radius = j.value("increment_radius", c.increment_radius);
        c.eta_stride = j.value("eta_stride", c.eta_stride);
        c.lag_radius = j.value("lag_radius", c.lag_radius);
        c.picard_iterations = j.value("picard_iterations", c.picard_iterations);
        c.dump_field_paths = j.value("dump_field_paths", c.dump_field_paths);
        c.dump_multipliers = j.value("dump_multipliers", c.dump_multipliers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace swe::runner
