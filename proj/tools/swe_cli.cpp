#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "swe/runner/config.hpp"
#include "swe/runner/experiments.hpp"

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> paths;
    std::optional<std::string> out;
    std::optional<int> threads;
};

void add_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config, "experiment JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--paths", o.paths, "number of paths M");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads");
}

swe::runner::ExperimentConfig load(const Overrides& o, const std::string& kind) {
    auto cfg = swe::runner::load_config(o.config);
    cfg.kind = swe::runner::parse_kind(kind);
    if (o.seed) cfg.seed = *o.seed;
    if (o.paths) cfg.paths = *o.paths;
    if (o.out) cfg.output_dir = *o.out;
    if (o.threads) cfg.threads = *o.threads;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic wave equation ball-average CLT harness"};
    app.require_subcommand(1);
    Overrides o;
    const char* kinds[] = {"simulate", "clt-scan", "variance-scan", "covariance-limit",
                           "picard-check", "tightness-scan", "oracle", "report"};
    for (const char* k : kinds) add_flags(app.add_subcommand(k), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    try {
        auto cfg = load(o, kind);
        if (kind == "report") {
            const auto rep = swe::runner::report(cfg.output_dir);
            for (const auto& line : rep.lines) std::cout << line << '\n';
            if (!rep.checksums_ok) return 1;
            return rep.checks_ok ? 0 : 2;
        }
        const auto man = swe::runner::run(cfg);
        for (const auto& c : man.checks)
            std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << swe::runner::fmt(c.value) << " ("
                      << c.relation << " " << swe::runner::fmt(c.limit) << ")\n";
        std::cout << "wrote " << man.outputs.size() << " files to " << cfg.output_dir << " (config "
                  << swe::runner::hex64(man.config_hash) << ")\n";
        return man.passed() ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
