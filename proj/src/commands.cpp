#include "patrol/commands.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "patrol/engine.hpp"
#include "patrol/error.hpp"
#include "patrol/experiment.hpp"
#include "patrol/io.hpp"
#include "patrol/world.hpp"

namespace patrol {

namespace {

std::pair<double, double> span(const std::vector<double>& values) {
    if (values.empty()) {
        return {0.0, 0.0};
    }
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return {*lo, *hi};
}

}  // namespace

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
    try {
        ExperimentConfig cfg = ExperimentConfig::load(options.config);
        if (options.seed) {
            cfg.base_seed = *options.seed;
            cfg.seeds.clear();
        }
        if (options.runs) {
            // an explicit seed list is cut short, never extended
            cfg.runs = *options.runs;
            if (*options.runs >= 0 && static_cast<std::size_t>(*options.runs) <= cfg.seeds.size()) {
                cfg.seeds.resize(static_cast<std::size_t>(*options.runs));
            } else if (!cfg.seeds.empty()) {
                cfg.base_seed = cfg.seeds.front();
                cfg.seeds.clear();
            }
        }
        if (options.steps) {
            cfg.total_steps = *options.steps;
        }
        if (options.jobs) {
            cfg.jobs = *options.jobs;
        }
        if (options.out) {
            cfg.out = *options.out;
        }
        cfg.validate();
        const auto seeds = cfg.seed_list();
        out << "running " << seeds.size() << " run(s) of " << cfg.total_steps << " steps on " << cfg.world.name
            << " with " << cfg.jobs << " job(s)\n";
        const auto traces = run_experiment(cfg, [&](const RunTrace& t) {
            out << "  seed " << t.seed;
            if (!t.mean_insufficiency.empty()) {
                out << ": final mean insufficiency " << format_fixed(t.mean_insufficiency.back(), 3) << "%";
            }
            out << '\n';
            out.flush();
        });
        out << "wrote " << (cfg.out / cfg.world.name).string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << '\n';
        return 1;
    }
}

int cmd_dynamic(const DynamicOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const auto checkpoint = load_checkpoint(options.checkpoint);
        const auto mutations = load_mutations(options.mutation);
        const Simulation base = restore_checkpoint(checkpoint);

        ReplaySpec spec;
        spec.steps = options.steps;
        spec.freeze_learning = options.freeze;
        RunResult result = replay_mutated(checkpoint, mutations, spec);

        const auto root = options.out.value_or(default_output_root());
        std::string label = options.mutation.stem().string();
        if (options.freeze) {
            label += "_frozen";
        }
        const auto dir = run_directory(root, base.world().name(), base.seed()) / label;
        write_run(dir, result, false);

        out << "applied " << mutations.size() << " mutation(s) at step " << base.now() << ", ran " << options.steps
            << " steps" << (options.freeze ? " without Q updates" : "") << '\n';
        for (const auto& row : result.log.transient) {
            if (row.offset == 0 || row.offset == 100 || row.offset == 200 || row.offset == 1000) {
                const auto [lo, hi] = span(row.difference);
                out << "  +" << row.offset << ": D in [" << format_fixed(lo, 2) << ", " << format_fixed(hi, 2)
                    << "]\n";
            }
        }
        out << "wrote " << dir.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "dynamic failed: " << e.what() << '\n';
        return 1;
    }
}

int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
    WorldConfig world;
    try {
        world = ExperimentConfig::load(config).world;
    } catch (const std::exception& e) {
        err << "cannot read " << config.string() << ": " << e.what() << '\n';
        return 1;
    }

    const auto violations = find_violations(world);
    if (!violations.empty()) {
        err << config.string() << ": " << violations.size() << " violation(s)\n";
        for (const auto& v : violations) {
            err << "  " << v.what();
            if (v.code() == ErrorCode::CapacityExceeded) {
                err << " (team capacity constraint: sum of C_i <= 1)";
            }
            err << '\n';
        }
        return 1;
    }

    const PatrolWorld w = PatrolWorld::build(world);
    out << "world " << w.name() << '\n';
    out << "nodes " << w.node_count() << '\n';
    out << "circles " << w.circles().size() << " (";
    for (std::size_t k = 0; k < w.circles().size(); ++k) {
        out << (k ? ", " : "") << w.circles()[k].size();
    }
    out << ")\n";
    out << "agents " << w.agent_count() << '\n';
    out << "capacity sum " << format_fixed(w.capacity_sum(), 2) << "% (limit 100%)\n";
    out << "node,circles,C_percent,F_percent\n";
    for (NodeId n : w.nodes()) {
        std::string circles;
        for (const auto& c : w.circles()) {
            if (c.contains(n)) {
                circles += (circles.empty() ? "" : ";") + std::to_string(c.id.value);
            }
        }
        const auto& req = w.requirement(n);
        out << n.value << ',' << circles << ',' << format_fixed(req.component, 2) << ','
            << format_fixed(req.required, 2) << '\n';
    }
    return 0;
}

namespace {

struct SnapshotCell {
    double frequency = 0.0;
    double required = 0.0;
};

// step -> agent -> node -> cell
using SnapshotTable = std::map<Step, std::map<int, std::map<int, SnapshotCell>>>;

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) {
        out.push_back(field);
    }
    return out;
}

void read_snapshot_csv(const std::filesystem::path& path, SnapshotTable& table) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || line != "step,agent,node,frequency,required") {
        throw Error(ErrorCode::Io, path.string() + " is not a snapshot CSV");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 5) {
            throw Error(ErrorCode::Io, path.string() + ": malformed row '" + line + "'");
        }
        try {
            table[std::stoll(f[0])][std::stoi(f[1])][std::stoi(f[2])] = {std::stod(f[3]), std::stod(f[4])};
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::Io, path.string() + ": malformed row '" + line + "'");
        }
    }
}

}  // namespace

int cmd_export_heatmap(const HeatmapOptions& options, std::ostream& out, std::ostream& err) {
    try {
        SnapshotTable table;
        std::filesystem::path src = options.source;
        if (std::filesystem::is_directory(src) && std::filesystem::is_directory(src / "snapshots")) {
            src /= "snapshots";
        }
        if (std::filesystem::is_directory(src)) {
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(src)) {
                if (entry.path().extension() == ".csv" && entry.path().stem().string().rfind("step_", 0) == 0) {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                read_snapshot_csv(f, table);
            }
        } else {
            read_snapshot_csv(src, table);
        }

        auto it = table.upper_bound(options.step);
        if (it == table.begin()) {
            err << "no snapshot at or before step " << options.step << " in " << options.source.string();
            if (!table.empty()) {
                err << " (available:";
                for (const auto& entry : table) {
                    err << ' ' << entry.first;
                }
                err << ')';
            }
            err << '\n';
            return 1;
        }
        --it;
        const auto& [step, agents] = *it;

        std::set<int> nodes;
        std::map<int, double> required;
        for (const auto& [agent, cells] : agents) {
            for (const auto& [node, cell] : cells) {
                nodes.insert(node);
                required[node] = cell.required;
            }
        }

        std::ostringstream csv;
        csv << "agent";
        for (int n : nodes) {
            csv << ',' << n;
        }
        csv << '\n';
        std::map<int, double> total;
        for (const auto& [agent, cells] : agents) {
            csv << agent;
            for (int n : nodes) {
                auto c = cells.find(n);
                const double f = c == cells.end() ? 0.0 : c->second.frequency;
                total[n] += f;
                csv << ',' << format_double(f);
            }
            csv << '\n';
        }
        csv << "total";
        for (int n : nodes) {
            csv << ',' << format_double(total[n]);
        }
        csv << "\nF";
        for (int n : nodes) {
            csv << ',' << format_double(required[n]);
        }
        csv << '\n';

        if (options.output) {
            write_text(*options.output, csv.str());
            out << "heat map at step " << step << " written to " << options.output->string() << '\n';
        } else {
            out << csv.str();
        }
        return 0;
    } catch (const std::exception& e) {
        err << "export-heatmap failed: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace patrol
