#include "patrol/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "patrol/error.hpp"
#include "patrol/io.hpp"

namespace patrol {

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (!seeds.empty()) {
        return seeds;
    }
    std::vector<std::uint64_t> out;
    for (int k = 0; k < runs; ++k) {
        out.push_back(base_seed + static_cast<std::uint64_t>(k));
    }
    return out;
}

void ExperimentConfig::validate() const {
    if (runs < 1) {
        throw Error(ErrorCode::InvalidConfig, "runs must be at least 1");
    }
    if (total_steps < 0) {
        throw Error(ErrorCode::InvalidConfig, "steps must be non-negative");
    }
    if (log_every < 1) {
        throw Error(ErrorCode::InvalidConfig, "log_every must be at least 1");
    }
    if (jobs < 1) {
        throw Error(ErrorCode::InvalidConfig, "jobs must be at least 1");
    }
    params.validate();
    PatrolWorld::build(world);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    ExperimentConfig cfg;
    try {
        if (j.contains("circles")) {
            cfg.world = WorldConfig::from_json(j);
            return cfg;
        }
        const auto& w = j.at("world");
        if (w.is_string()) {
            std::filesystem::path p = w.get<std::string>();
            if (p.is_relative()) {
                p = base / p;
            }
            cfg.world = WorldConfig::load(p);
        } else {
            cfg.world = WorldConfig::from_json(w);
        }
        if (j.contains("name")) {
            cfg.world.name = j.at("name").get<std::string>();
        }
        cfg.params = SimParams::from_json(j);
        cfg.total_steps = j.value("steps", cfg.total_steps);
        cfg.runs = j.value("runs", cfg.runs);
        cfg.base_seed = j.value("base_seed", cfg.base_seed);
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
            cfg.runs = static_cast<int>(cfg.seeds.size());
        }
        cfg.log_every = j.value("log_every", cfg.log_every);
        if (j.contains("snapshot_steps")) {
            cfg.snapshot_steps = j.at("snapshot_steps").get<std::vector<Step>>();
        }
        cfg.write_contacts = j.value("write_contacts", cfg.write_contacts);
        cfg.jobs = j.value("jobs", cfg.jobs);
        if (j.contains("out")) {
            cfg.out = j.at("out").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("experiment config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    const auto j = read_json(path);
    ExperimentConfig cfg = from_json(j, path.parent_path());
    if (cfg.world.name.empty()) {
        cfg.world.name = path.stem().string();
    }
    if (!j.contains("out")) {
        cfg.out = default_output_root();
    }
    return cfg;
}

std::filesystem::path default_output_root() {
    const char* env = std::getenv("PATROLSIM_OUT");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("out");
}

std::filesystem::path run_directory(const std::filesystem::path& root, const std::string& world_name,
                                    std::uint64_t seed) {
    return root / world_name / std::to_string(seed);
}

void write_run(const std::filesystem::path& dir, const RunResult& result, bool write_contacts) {
    write_text(dir / "run.csv", result.log.run_csv());
    write_text(dir / "summary.json", result.log.summary().dump(2) + "\n");
    save_checkpoint(dir / "checkpoint.bin", result.checkpoint);
    std::filesystem::create_directories(dir / "snapshots");
    for (const auto& snap : result.log.snapshots) {
        RunLog one;
        one.snapshots.push_back(snap);
        write_text(dir / "snapshots" / ("step_" + std::to_string(snap.step) + ".csv"), one.snapshots_csv());
    }
    if (!result.log.transient.empty()) {
        write_text(dir / "transient.csv", result.log.transient_csv());
    }
    if (write_contacts) {
        write_text(dir / "contacts.csv", result.log.contacts_csv());
    }
}

std::vector<AggregateRow> aggregate(const std::vector<RunTrace>& traces) {
    std::map<Step, std::pair<std::vector<double>, std::vector<int>>> by_step;
    for (const auto& t : traces) {
        for (std::size_t k = 0; k < t.steps.size(); ++k) {
            auto& slot = by_step[t.steps[k]];
            slot.first.push_back(t.mean_insufficiency[k]);
            slot.second.push_back(t.comm_count[k]);
        }
    }
    std::vector<AggregateRow> rows;
    for (const auto& [step, values] : by_step) {
        const auto& xs = values.first;
        if (xs.size() != traces.size()) {
            continue;
        }
        AggregateRow row;
        row.step = step;
        row.runs = static_cast<int>(xs.size());
        double sum = 0.0;
        for (double x : xs) {
            sum += x;
        }
        row.mean = sum / static_cast<double>(xs.size());
        if (xs.size() > 1) {
            double ss = 0.0;
            for (double x : xs) {
                ss += (x - row.mean) * (x - row.mean);
            }
            row.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        }
        double comm = 0.0;
        for (int c : values.second) {
            comm += c;
        }
        row.comm_mean = comm / static_cast<double>(values.second.size());
        rows.push_back(row);
    }
    return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "step,runs,mean_insufficiency,std_insufficiency,mean_comm_count\n";
    for (const auto& r : rows) {
        out << r.step << ',' << r.runs << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ','
            << format_double(r.comm_mean) << '\n';
    }
    return out.str();
}

std::vector<RunTrace> run_experiment(const ExperimentConfig& config,
                                     const std::function<void(const RunTrace&)>& progress) {
    config.validate();
    auto world = std::make_shared<const PatrolWorld>(PatrolWorld::build(config.world));
    const auto seeds = config.seed_list();

    RunSpec spec;
    spec.world = world;
    spec.params = config.params;
    spec.total_steps = config.total_steps;
    spec.log_every = config.log_every;
    spec.snapshot_steps = config.snapshot_steps;

    std::vector<RunTrace> traces(seeds.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;

    auto worker = [&] {
        for (std::size_t k = next++; k < seeds.size(); k = next++) {
            try {
                RunResult result = run(spec, seeds[k]);
                write_run(run_directory(config.out, world->name(), seeds[k]), result, config.write_contacts);
                RunTrace t;
                t.seed = seeds[k];
                for (const auto& row : result.log.rows) {
                    t.steps.push_back(row.step);
                    t.mean_insufficiency.push_back(row.mean_insufficiency);
                    t.comm_count.push_back(row.comm_count);
                }
                t.summary = result.log.summary();
                std::lock_guard lock(mu);
                if (progress) {
                    progress(t);
                }
                traces[k] = std::move(t);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = seeds.size();
            }
        }
    };

    const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), seeds.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n_threads; ++i) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    write_text(config.out / world->name() / "aggregate.csv", aggregate_csv(aggregate(traces)));
    return traces;
}

}  // namespace patrol
