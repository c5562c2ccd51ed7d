#include "kcurv/errors.hpp"
#include "kcurv/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace kcurv;

    CLI::App app{"Solvers and checks for curvature measure and graph problems"};
    app.set_version_flag("--version", kToolVersion);
    std::string mode_name, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("mode", mode_name, "solve-measure | solve-graph | verify-inequalities | convergence-study")
        ->required();
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--seed", seed, "override the configured seed");
    app.add_flag("--quiet", quiet, "suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    const auto mode = parse_mode(mode_name);
    if (!mode) {
        std::cerr << "unknown mode '" << mode_name << "'\n" << app.help();
        return kExitUsage;
    }

    RunConfig cfg;
    try {
        cfg = parse_config(config_path, *mode);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }
    if (seed) override_seed(cfg, *seed);

    RunOptions opts;
    opts.out_dir = out_dir;
    opts.log = quiet ? nullptr : &std::cerr;
    try {
        return run(cfg, opts);
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitHardFailure;
    }
}
