#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "patrol/history.hpp"

namespace patrol {

// Subcommand bodies. Each returns a process exit code and reports on the
// given streams instead of throwing.

struct RunOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;  // replaces the seed list with base seed
    std::optional<int> runs;
    std::optional<Step> steps;
    std::optional<int> jobs;
    std::optional<std::filesystem::path> out;
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct DynamicOptions {
    std::filesystem::path checkpoint;
    std::filesystem::path mutation;
    Step steps = 100000;
    bool freeze = false;
    std::optional<std::filesystem::path> out;
};

int cmd_dynamic(const DynamicOptions& options, std::ostream& out, std::ostream& err);

int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

struct HeatmapOptions {
    /// A snapshot CSV, a snapshots/ directory or a run directory.
    std::filesystem::path source;
    Step step = 0;
    std::optional<std::filesystem::path> output;  // stdout when empty
};

int cmd_export_heatmap(const HeatmapOptions& options, std::ostream& out, std::ostream& err);

}  // namespace patrol
