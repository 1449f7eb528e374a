#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "spdelab/harness.hpp"

// Subcommands: simulate | decompose | regularity | converge | checks.
// Exit codes: 0 all enabled checks pass, 1 any check fails, 2 usage/config error.
int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for a quasilinear stochastic heat equation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string scenario;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t replicas = 0;
    bool replicas_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "path to a key=value config file");
        sub->add_option("--scenario", scenario,
                        "named preset (heat, additive, linearq, quasi, compat_k2_pass, "
                        "compat_k2_fail); ignored when --config is given");
        sub->add_option("--out", out_dir, "output directory (omit to skip artifacts)");
        sub->add_option("--seed", seed, "override noise.seed")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--replicas", replicas, "override replica count")
            ->each([&](const std::string&) { replicas_set = true; });
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run replicas and persist fields");
    CLI::App* decompose =
        app.add_subcommand("decompose", "split runs into y + z and run the estimate checks");
    CLI::App* regularity =
        app.add_subcommand("regularity", "estimate Hoelder exponents and Bessel profiles");
    CLI::App* converge = app.add_subcommand("converge", "refinement study over a grid ladder");
    CLI::App* checks = app.add_subcommand("checks", "static hypothesis and compatibility checks");
    for (CLI::App* sub : {simulate, decompose, regularity, converge, checks}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        spdelab::ExperimentConfig cfg =
            !config_path.empty()  ? spdelab::ExperimentConfig::from_file(config_path)
            : !scenario.empty()   ? spdelab::ExperimentConfig::preset(scenario)
                                  : throw spdelab::ConfigError("need --config or --scenario");
        if (seed_set) cfg.override_seed(seed);
        if (replicas_set) cfg.override_replicas(replicas);

        spdelab::ScenarioOutcome outcome;
        if (simulate->parsed()) outcome = spdelab::cli_simulate(cfg, out_dir);
        if (decompose->parsed()) outcome = spdelab::cli_decompose(cfg, out_dir);
        if (regularity->parsed()) outcome = spdelab::cli_regularity(cfg, out_dir);
        if (converge->parsed()) outcome = spdelab::cli_converge(cfg, out_dir);
        if (checks->parsed()) outcome = spdelab::cli_checks(cfg, out_dir);

        for (const auto& v : outcome.verdicts)
            std::printf("[%s] %s: %.6g %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.value,
                        v.detail.c_str());
        return spdelab::exit_code(outcome);
    } catch (const spdelab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
