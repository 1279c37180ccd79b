#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "patrol/commands.hpp"

namespace {

template <typename T>
std::optional<T> given(const CLI::Option* opt, const T& value) {
    return opt->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent frequency-based patrolling simulator"};
    app.require_subcommand(1);

    patrol::RunOptions run_opts;
    std::uint64_t seed = 0;
    int runs = 0;
    patrol::Step steps = 0;
    int jobs = 1;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "run a batch of replicate learning runs");
    run->add_option("config,--config", run_opts.config, "experiment or world config (JSON)")->required();
    auto* seed_opt = run->add_option("--seed", seed, "base seed; replicates use seed, seed+1, ...");
    auto* runs_opt = run->add_option("--runs", runs, "number of replicates")->check(CLI::PositiveNumber);
    auto* steps_opt = run->add_option("--steps", steps, "learning steps per run")->check(CLI::NonNegativeNumber);
    auto* jobs_opt = run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* out_opt = run->add_option("--out", out_dir, "output root (default $PATROLSIM_OUT or ./out)");

    patrol::DynamicOptions dyn_opts;
    std::string dyn_out;
    auto* dynamic = app.add_subcommand("dynamic", "apply a world mutation to a checkpoint and continue");
    dynamic->add_option("--checkpoint", dyn_opts.checkpoint, "checkpoint.bin of a finished run")->required();
    dynamic->add_option("--mutation,--config", dyn_opts.mutation, "mutation file (JSON)")->required();
    dynamic->add_option("--steps", dyn_opts.steps, "steps after the mutation")->check(CLI::NonNegativeNumber);
    dynamic->add_flag("--freeze", dyn_opts.freeze, "stop Q updates during the replay");
    auto* dyn_out_opt = dynamic->add_option("--out", dyn_out, "output root (default $PATROLSIM_OUT or ./out)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a world config and print its requirements");
    validate->add_option("config,--config", validate_path, "world or experiment config (JSON)")->required();

    patrol::HeatmapOptions heat_opts;
    std::string heat_out;
    auto* heat = app.add_subcommand("export-heatmap", "pivot a snapshot into an agents x nodes matrix");
    heat->add_option("source", heat_opts.source, "run directory, snapshots directory or snapshot CSV")->required();
    heat->add_option("--step", heat_opts.step, "latest snapshot at or before this step is used")->required();
    auto* heat_out_opt = heat->add_option("--out,-o", heat_out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        run_opts.seed = given(seed_opt, seed);
        run_opts.runs = given(runs_opt, runs);
        run_opts.steps = given(steps_opt, steps);
        run_opts.jobs = given(jobs_opt, jobs);
        if (out_opt->count()) {
            run_opts.out = out_dir;
        }
        return patrol::cmd_run(run_opts, std::cout, std::cerr);
    }
    if (dynamic->parsed()) {
        if (dyn_out_opt->count()) {
            dyn_opts.out = dyn_out;
        }
        return patrol::cmd_dynamic(dyn_opts, std::cout, std::cerr);
    }
    if (validate->parsed()) {
        return patrol::cmd_validate(validate_path, std::cout, std::cerr);
    }
    if (heat->parsed()) {
        if (heat_out_opt->count()) {
            heat_opts.output = heat_out;
        }
        return patrol::cmd_export_heatmap(heat_opts, std::cout, std::cerr);
    }
    return 2;
}
