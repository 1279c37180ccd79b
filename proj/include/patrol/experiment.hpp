#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patrol/engine.hpp"
#include "patrol/world.hpp"

namespace patrol {

/// A batch of replicate runs over one world.
struct ExperimentConfig {
    WorldConfig world;
    SimParams params;
    Step total_steps = 1'000'000;
    int runs = 10;
    std::uint64_t base_seed = 1;
    std::vector<std::uint64_t> seeds;  // explicit list wins over base_seed + index
    Step log_every = 1000;
    std::vector<Step> snapshot_steps{5000, 50000, 500000};
    bool write_contacts = false;
    int jobs = 1;
    std::filesystem::path out = "out";

    /// Seeds in replicate order.
    std::vector<std::uint64_t> seed_list() const;

    /// Throws InvalidConfig.
    void validate() const;

    /// `base` resolves a relative "world" path. A document with top-level
    /// "circles" is a bare world config and gets the default settings.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// Default output root: $PATROLSIM_OUT, else "out".
std::filesystem::path default_output_root();

/// `<root>/<world name>/<seed>`.
std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& world_name,
                                    std::uint64_t seed);

/// Writes run.csv, summary.json, checkpoint.bin, snapshots/step_<n>.csv and,
/// when asked, contacts.csv into `dir`.
void write_run(const std::filesystem::path& dir, const RunResult& result, bool write_contacts);

/// Per-seed trace of what aggregation needs.
struct RunTrace {
    std::uint64_t seed = 0;
    std::vector<Step> steps;
    std::vector<double> mean_insufficiency;
    std::vector<int> comm_count;
    nlohmann::json summary;
};

struct AggregateRow {
    Step step = 0;
    int runs = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample, zero for a single run
    double comm_mean = 0.0;
};

/// Rows are emitted for steps logged by every run.
std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& traces);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

/// Runs every replicate on a pool of `config.jobs` threads, writing each run's
/// files as it finishes, then writes aggregate.csv. Traces come back in seed
/// order. `progress` is called from worker threads, serialised.
std::vector<RunTrace> run_experiment(const ExperimentConfig& config,
                                     const std::function<void(const RunTrace&)>& progress = {});

}  // namespace patrol
