#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "patrol/commands.hpp"
#include "patrol/engine.hpp"
#include "patrol/experiment.hpp"
#include "patrol/io.hpp"
#include "support.hpp"

using namespace patrol;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("patrol_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::string f;
        std::istringstream ls(line);
        while (std::getline(ls, f, ',')) {
            fields.push_back(f);
        }
        rows.push_back(fields);
    }
    return rows;
}

fs::path write_experiment(const fs::path& dir, const nlohmann::json& j) {
    const auto p = dir / "experiment.json";
    write_text(p, j.dump());
    return p;
}

}  // namespace

TEST_CASE("validate prints the world summary") {
    std::ostringstream out;
    std::ostringstream err;
    REQUIRE(cmd_validate(testing::config_path("general.json"), out, err) == 0);
    const auto text = out.str();
    CHECK(text.find("nodes 20") != std::string::npos);
    CHECK(text.find("circles 3 (11, 8, 8)") != std::string::npos);
    CHECK(text.find("capacity sum 90.01%") != std::string::npos);

    std::ostringstream bench;
    REQUIRE(cmd_validate(testing::config_path("benchmark.json"), bench, err) == 0);
    int nine = 0;
    for (const auto& row : parse_csv(bench.str())) {
        nine += row.size() == 4 && row[3] == "9.00";
    }
    CHECK(nine == 20);
}

TEST_CASE("validate rejects over-capacity worlds") {
    TempDir tmp("validate");
    auto cfg = testing::ring_config(20, 2, 5.1);
    write_text(tmp.path / "over.json", cfg.to_json().dump());
    std::ostringstream out;
    std::ostringstream err;
    CHECK(cmd_validate(tmp.path / "over.json", out, err) != 0);
    CHECK(err.str().find("team capacity constraint") != std::string::npos);
    CHECK(err.str().find("102") != std::string::npos);
    CHECK(cmd_validate(tmp.path / "missing.json", out, err) != 0);
}

TEST_CASE("run writes per-seed outputs and an aggregate") {
    TempDir tmp("run");
    const auto cfg = write_experiment(tmp.path, {{"world", testing::config_path("general.json")},
                                                 {"steps", 3000},
                                                 {"runs", 3},
                                                 {"base_seed", 5},
                                                 {"log_every", 500},
                                                 {"snapshot_steps", {1000, 2000}},
                                                 {"jobs", 2},
                                                 {"out", (tmp.path / "out").string()}});
    std::ostringstream out;
    std::ostringstream err;
    REQUIRE(cmd_run({cfg, {}, {}, {}, {}, {}}, out, err) == 0);
    const auto root = tmp.path / "out" / "general";
    for (int seed : {5, 6, 7}) {
        const auto dir = root / std::to_string(seed);
        CHECK(fs::exists(dir / "run.csv"));
        CHECK(fs::exists(dir / "checkpoint.bin"));
        CHECK(fs::exists(dir / "summary.json"));
        CHECK(fs::exists(dir / "snapshots" / "step_2000.csv"));
    }

    SUBCASE("aggregate matches a recomputation from the run files") {
        std::map<std::string, std::vector<double>> by_step;
        for (int seed : {5, 6, 7}) {
            const auto rows = parse_csv(read_text(root / std::to_string(seed) / "run.csv"));
            REQUIRE(rows[0][2] == "mean_insufficiency");
            for (std::size_t r = 1; r < rows.size(); ++r) {
                by_step[rows[r][0]].push_back(std::stod(rows[r][2]));
            }
        }
        const auto agg = parse_csv(read_text(root / "aggregate.csv"));
        REQUIRE(agg.size() == 7);
        for (std::size_t r = 1; r < agg.size(); ++r) {
            const auto& xs = by_step.at(agg[r][0]);
            REQUIRE(xs.size() == 3);
            const double mean = (xs[0] + xs[1] + xs[2]) / 3.0;
            double ss = 0.0;
            for (double x : xs) {
                ss += (x - mean) * (x - mean);
            }
            CHECK(std::abs(std::stod(agg[r][2]) - mean) < 1e-9);
            CHECK(std::abs(std::stod(agg[r][3]) - std::sqrt(ss / 2.0)) < 1e-9);
        }
    }
    SUBCASE("csv fields survive a parse and print") {
        const auto rows = parse_csv(read_text(root / "5" / "run.csv"));
        for (std::size_t r = 1; r < rows.size(); ++r) {
            REQUIRE(rows[r].size() == rows[0].size());
            for (const auto& f : rows[r]) {
                CHECK(format_double(std::stod(f)) == f);
            }
        }
    }
    SUBCASE("flags override the file and the run is reproducible") {
        const auto first = read_text(root / "6" / "run.csv");
        REQUIRE(cmd_run({cfg, 6, 1, {}, 1, tmp.path / "again"}, out, err) == 0);
        CHECK(read_text(tmp.path / "again" / "general" / "6" / "run.csv") == first);
        CHECK_FALSE(fs::exists(tmp.path / "again" / "general" / "7"));
    }
    SUBCASE("heat map from a run") {
        std::ostringstream heat;
        REQUIRE(cmd_export_heatmap({root / "5", 2500, {}}, heat, err) == 0);
        const auto rows = parse_csv(heat.str());
        REQUIRE(rows.size() == 6);  // header, three agents, total, F
        CHECK(rows[0].size() == 21);
        CHECK(rows[4][0] == "total");
        CHECK(rows[5][0] == "F");
        for (std::size_t c = 1; c < rows[0].size(); ++c) {
            double sum = 0.0;
            for (std::size_t a = 1; a <= 3; ++a) {
                sum += std::stod(rows[a][c]);
            }
            CHECK(sum == doctest::Approx(std::stod(rows[4][c])));
        }
        std::ostringstream none;
        std::ostringstream why;
        CHECK(cmd_export_heatmap({root / "5", 999, {}}, none, why) != 0);
        CHECK(why.str().find("1000") != std::string::npos);
    }
    SUBCASE("dynamic replay from the checkpoint") {
        std::ostringstream dyn;
        REQUIRE(cmd_dynamic({root / "5" / "checkpoint.bin", testing::config_path("dynamic_swap.json"), 1500, false,
                             tmp.path / "out"},
                            dyn, err) == 0);
        const auto dir = root / "5" / "dynamic_swap";
        const auto transient = parse_csv(read_text(dir / "transient.csv"));
        CHECK(transient.size() == 1002);
        CHECK(transient[0][0] == "offset");
        CHECK(fs::exists(dir / "snapshots" / "step_4000.csv"));
        std::ostringstream bad;
        CHECK(cmd_dynamic({root / "5" / "checkpoint.bin", testing::config_path("general.json"), 10, false,
                           tmp.path / "out"},
                          bad, err) != 0);
    }
}

TEST_CASE("empty run") {
    TempDir tmp("empty");
    const auto cfg = write_experiment(tmp.path, {{"world", testing::config_path("benchmark.json")},
                                                 {"steps", 0},
                                                 {"runs", 1},
                                                 {"out", (tmp.path / "out").string()}});
    std::ostringstream out;
    std::ostringstream err;
    REQUIRE(cmd_run({cfg, {}, {}, {}, {}, {}}, out, err) == 0);
    const auto rows = parse_csv(read_text(tmp.path / "out" / "benchmark" / "1" / "run.csv"));
    CHECK(rows.size() == 1);
    CHECK(parse_csv(read_text(tmp.path / "out" / "benchmark" / "aggregate.csv")).size() == 1);
}

TEST_CASE("experiment config parsing") {
    SUBCASE("bare world gets defaults") {
        const auto cfg = ExperimentConfig::load(testing::config_path("general.json"));
        CHECK(cfg.runs == 10);
        CHECK(cfg.total_steps == 1'000'000);
        CHECK(cfg.seed_list().front() == 1);
        CHECK(cfg.world.name == "general");
    }
    SUBCASE("explicit seeds and inline world") {
        nlohmann::json j = {{"world", testing::ring_config(5, 1, 10.0).to_json()},
                            {"seeds", {42, 7}},
                            {"learner", {{"alpha", 0.2}, {"reward", "absolute"}}},
                            {"freq_window", 50}};
        const auto cfg = ExperimentConfig::from_json(j);
        CHECK(cfg.seed_list() == std::vector<std::uint64_t>{42, 7});
        CHECK(cfg.params.learner.alpha == 0.2);
        CHECK(cfg.params.learner.reward == RewardMode::AbsolutePenalty);
        CHECK(cfg.params.windows.frequency == 50);
    }
    SUBCASE("bad values") {
        nlohmann::json j = {{"world", testing::ring_config(5, 1, 10.0).to_json()}, {"runs", 0}};
        CHECK_THROWS(ExperimentConfig::from_json(j).validate());
        j = {{"world", testing::ring_config(5, 1, 10.0).to_json()}, {"window", 50}, {"freq_window", 100}};
        CHECK_THROWS(ExperimentConfig::from_json(j));
    }
}
