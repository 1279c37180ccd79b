#include "patrol/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "patrol/error.hpp"
#include "patrol/io.hpp"

namespace patrol {

void SimParams::validate() const {
    if (windows.frequency < 1 || windows.transition < windows.frequency) {
        throw Error(ErrorCode::InvalidConfig, "windows must satisfy w >= w_f >= 1");
    }
    if (recompute_every < 1) {
        throw Error(ErrorCode::InvalidConfig, "recompute_every must be at least 1");
    }
    learner.validate();
}

nlohmann::json SimParams::to_json() const {
    return {{"window", windows.transition},
            {"freq_window", windows.frequency},
            {"recompute_every", recompute_every},
            {"peer_model", peer_model_name(peer_model)},
            {"communication", communication},
            {"learner", learner.to_json()}};
}

SimParams SimParams::from_json(const nlohmann::json& j) {
    SimParams p;
    p.windows.transition = j.value("window", p.windows.transition);
    p.windows.frequency = j.value("freq_window", p.windows.frequency);
    p.recompute_every = j.value("recompute_every", p.recompute_every);
    p.peer_model = peer_model_from_name(j.value("peer_model", peer_model_name(p.peer_model)));
    p.communication = j.value("communication", p.communication);
    if (j.contains("learner")) {
        p.learner = LearnerParams::from_json(j.at("learner"));
    }
    p.validate();
    return p;
}

Simulation::Simulation(std::shared_ptr<const PatrolWorld> world, SimParams params, std::uint64_t seed,
                       std::optional<std::vector<NodeId>> start)
    : world_(std::move(world)), params_(std::move(params)), seed_(seed), engine_rng_(seed, 0) {
    params_.validate();
    communication_ = params_.communication;
    const auto& agents = world_->agents();
    for (std::size_t k = 0; k < agents.size(); ++k) {
        views_.emplace_back(agents[k].agent, world_, params_.windows, params_.peer_model);
        agent_rngs_.emplace_back(seed, static_cast<std::uint64_t>(k) + 1);
    }
    if (start) {
        if (start->size() != agents.size()) {
            throw Error(ErrorCode::InvalidConfig, "start positions must cover every agent");
        }
        positions_ = *start;
    } else {
        for (const auto& a : agents) {
            const Circle& c = world_->circle(a.circle);
            positions_.push_back(c.nodes[engine_rng_.below(c.size())]);
        }
    }
    true_counts_.assign(node_slots(), 0);
    agent_counts_.assign(agents.size(), std::vector<int>(node_slots(), 0));
    last_actions_.assign(agents.size(), Action::Right);

    now_ = 0;
    record_positions();
    communicate();
    observe_all();
}

void Simulation::record_positions() {
    for (std::size_t k = 0; k < views_.size(); ++k) {
        views_[k].record_own(now_, positions_[k]);
        views_[k].advance_peers(now_);
    }
    recent_positions_.push_back(positions_);
    for (std::size_t k = 0; k < positions_.size(); ++k) {
        ++true_counts_[positions_[k].index()];
        ++agent_counts_[k][positions_[k].index()];
    }
    if (static_cast<std::int64_t>(recent_positions_.size()) > params_.windows.frequency) {
        const auto& old = recent_positions_.front();
        for (std::size_t k = 0; k < old.size(); ++k) {
            --true_counts_[old[k].index()];
            --agent_counts_[k][old[k].index()];
        }
        recent_positions_.pop_front();
    }
}

void Simulation::communicate() {
    last_contacts_.clear();
    if (!communication_) {
        return;
    }
    std::map<AgentId, NodeId> where;
    for (std::size_t k = 0; k < views_.size(); ++k) {
        where[views_[k].id()] = positions_[k];
    }
    last_contacts_ = detect_contacts(*world_, where, now_);
    for (const auto& e : last_contacts_) {
        exchange(e, views_);
    }
    contact_log_.record(now_, last_contacts_);
    contact_log_.trim(now_, 1000);
}

void Simulation::observe_all() {
    observations_.clear();
    for (std::size_t k = 0; k < views_.size(); ++k) {
        observations_.push_back(discretize_state(views_[k], positions_[k], now_, params_.learner.bins));
    }
}

double Simulation::epsilon() const {
    return fixed_epsilon_ ? *fixed_epsilon_ : epsilon_at(now_, params_.learner);
}

void Simulation::step() {
    const double eps = epsilon();
    const Step next = now_ + 1;
    const auto& agents = world_->agents();

    for (std::size_t k = 0; k < views_.size(); ++k) {
        std::optional<Action> forced;
        if (override_) {
            forced = override_(agents[k].agent, positions_[k], next);
        }
        // the learner's draw is consumed either way so overrides do not shift the stream
        const Action chosen = select_action(views_[k].q(), observations_[k], eps, agent_rngs_[k]);
        last_actions_[k] = forced.value_or(chosen);
        positions_[k] = world_->circle_step(agents[k].circle, positions_[k], last_actions_[k]);
    }

    now_ = next;
    record_positions();
    communicate();

    for (std::size_t k = 0; k < views_.size(); ++k) {
        const double reward = compute_reward(views_[k], positions_[k], now_, params_.learner.reward);
        const ObservedState s_next = discretize_state(views_[k], positions_[k], now_, params_.learner.bins);
        if (learning_) {
            q_update(views_[k].q(), observations_[k], last_actions_[k], reward, s_next, params_.learner);
        }
        observations_[k] = s_next;
    }

    if (now_ >= params_.windows.transition && (now_ - params_.windows.transition) % params_.recompute_every == 0) {
        for (auto& v : views_) {
            v.refresh_matrix();
        }
    }
}

void Simulation::advance(Step steps) {
    for (Step i = 0; i < steps; ++i) {
        step();
    }
}

double Simulation::true_frequency(NodeId node) const {
    if (node.index() >= true_counts_.size()) {
        return 0.0;
    }
    return 100.0 * static_cast<double>(true_counts_[node.index()]) /
           static_cast<double>(window_denominator(now_, params_.windows.frequency));
}

double Simulation::insufficiency(NodeId node) const {
    return std::max(0.0, world_->required(node) - true_frequency(node));
}

double Simulation::mean_insufficiency() const {
    double total = 0.0;
    for (NodeId n : world_->nodes()) {
        total += insufficiency(n);
    }
    return total / static_cast<double>(world_->node_count());
}

double Simulation::agent_frequency(std::size_t agent_index, NodeId node) const {
    const auto& counts = agent_counts_.at(agent_index);
    if (node.index() >= counts.size()) {
        return 0.0;
    }
    return 100.0 * static_cast<double>(counts[node.index()]) /
           static_cast<double>(window_denominator(now_, params_.windows.frequency));
}

void Simulation::apply_mutation(const WorldMutation& mutation) {
    world_ = std::make_shared<const PatrolWorld>(patrol::apply_mutation(*world_, mutation));
    true_counts_.resize(node_slots(), 0);
    for (auto& c : agent_counts_) {
        c.resize(node_slots(), 0);
    }
    for (auto& v : views_) {
        v.rebind_world(world_);
    }
    observe_all();
}

LogRow Simulation::log_row() const {
    LogRow row;
    row.step = now_;
    row.epsilon = epsilon();
    row.comm_count = communication_count(contact_log_, now_, 1000);
    double total = 0.0;
    for (NodeId n : world_->nodes()) {
        const double f = true_frequency(n);
        const double required = world_->required(n);
        const double i = std::max(0.0, required - f);
        row.insufficiency.push_back(i);
        row.difference.push_back(f - required);
        total += i;
    }
    row.mean_insufficiency = total / static_cast<double>(world_->node_count());
    return row;
}

Snapshot Simulation::snapshot() const {
    Snapshot s;
    s.step = now_;
    s.nodes = world_->nodes();
    for (std::size_t k = 0; k < views_.size(); ++k) {
        s.agents.push_back(views_[k].id());
        std::vector<double> row;
        for (NodeId n : s.nodes) {
            row.push_back(agent_frequency(k, n));
        }
        s.frequency.push_back(std::move(row));
    }
    for (NodeId n : s.nodes) {
        s.required.push_back(world_->required(n));
    }
    return s;
}

nlohmann::json Simulation::to_json() const {
    std::vector<int> pos;
    for (NodeId n : positions_) {
        pos.push_back(n.value);
    }
    nlohmann::json views = nlohmann::json::array();
    for (const auto& v : views_) {
        views.push_back(v.to_json());
    }
    std::vector<std::string> rngs;
    for (const auto& r : agent_rngs_) {
        rngs.push_back(r.state());
    }
    nlohmann::json recent = nlohmann::json::array();
    for (const auto& step_positions : recent_positions_) {
        std::vector<int> ids;
        for (NodeId n : step_positions) {
            ids.push_back(n.value);
        }
        recent.push_back(ids);
    }
    std::vector<int> actions;
    for (Action a : last_actions_) {
        actions.push_back(static_cast<int>(a));
    }
    std::vector<std::size_t> obs;
    for (const auto& o : observations_) {
        obs.push_back(o.index());
    }
    nlohmann::json j = {{"world", world_->to_config().to_json()},
                        {"params", params_.to_json()},
                        {"seed", seed_},
                        {"now", now_},
                        {"positions", pos},
                        {"views", views},
                        {"agent_rngs", rngs},
                        {"engine_rng", engine_rng_.state()},
                        {"recent_positions", recent},
                        {"true_counts", true_counts_},
                        {"agent_counts", agent_counts_},
                        {"contacts", contact_log_.to_json()},
                        {"last_actions", actions},
                        {"observations", obs},
                        {"communication", communication_},
                        {"learning", learning_}};
    j["fixed_epsilon"] = fixed_epsilon_ ? nlohmann::json(*fixed_epsilon_) : nlohmann::json();
    return j;
}

Simulation Simulation::from_json(const nlohmann::json& j) {
    Simulation sim;
    sim.world_ = std::make_shared<const PatrolWorld>(PatrolWorld::build(WorldConfig::from_json(j.at("world"))));
    sim.params_ = SimParams::from_json(j.at("params"));
    sim.seed_ = j.at("seed").get<std::uint64_t>();
    sim.now_ = j.at("now").get<Step>();
    for (int id : j.at("positions").get<std::vector<int>>()) {
        sim.positions_.push_back(NodeId{id});
    }
    for (const auto& v : j.at("views")) {
        sim.views_.push_back(AgentView::from_json(v, sim.world_));
    }
    for (const auto& s : j.at("agent_rngs").get<std::vector<std::string>>()) {
        Rng r;
        r.set_state(s);
        sim.agent_rngs_.push_back(r);
    }
    sim.engine_rng_.set_state(j.at("engine_rng").get<std::string>());
    for (const auto& step_positions : j.at("recent_positions")) {
        std::vector<NodeId> ids;
        for (int id : step_positions.get<std::vector<int>>()) {
            ids.push_back(NodeId{id});
        }
        sim.recent_positions_.push_back(std::move(ids));
    }
    sim.true_counts_ = j.at("true_counts").get<std::vector<int>>();
    sim.agent_counts_ = j.at("agent_counts").get<std::vector<std::vector<int>>>();
    sim.contact_log_ = ContactLog::from_json(j.at("contacts"));
    for (int a : j.at("last_actions").get<std::vector<int>>()) {
        sim.last_actions_.push_back(static_cast<Action>(a));
    }
    for (std::size_t idx : j.at("observations").get<std::vector<std::size_t>>()) {
        sim.observations_.push_back(ObservedState::from_index(idx));
    }
    sim.communication_ = j.at("communication").get<bool>();
    sim.learning_ = j.at("learning").get<bool>();
    if (!j.at("fixed_epsilon").is_null()) {
        sim.fixed_epsilon_ = j.at("fixed_epsilon").get<double>();
    }
    if (sim.views_.size() != sim.positions_.size() || sim.agent_rngs_.size() != sim.positions_.size()) {
        throw Error(ErrorCode::InvalidConfig, "checkpoint agent records are inconsistent");
    }
    return sim;
}

nlohmann::json make_checkpoint(const Simulation& sim) {
    return {{"version", kCheckpointVersion}, {"world_hash", sim.world().config_hash()}, {"state", sim.to_json()}};
}

Simulation restore_checkpoint(const nlohmann::json& checkpoint) {
    try {
        if (checkpoint.at("version").get<int>() != kCheckpointVersion) {
            throw Error(ErrorCode::InvalidConfig, "unsupported checkpoint version");
        }
        Simulation sim = Simulation::from_json(checkpoint.at("state"));
        if (sim.world().config_hash() != checkpoint.at("world_hash").get<std::uint64_t>()) {
            throw Error(ErrorCode::InvalidConfig, "checkpoint world does not match its hash");
        }
        return sim;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("corrupt checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& checkpoint) {
    write_bytes(path, nlohmann::json::to_cbor(checkpoint));
}

nlohmann::json load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    try {
        return nlohmann::json::from_cbor(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": not a checkpoint (" + e.what() + ")");
    }
}

namespace {

void record_contacts(const Simulation& sim, RunLog& log) {
    if (sim.last_contacts().empty()) {
        return;
    }
    ContactRecord rec{sim.now(), {}};
    for (const auto& e : sim.last_contacts()) {
        rec.sizes.push_back(static_cast<int>(e.participants.size()));
    }
    log.contacts.push_back(std::move(rec));
}

RunResult drive(Simulation& sim, Step steps, Step log_every, const std::vector<Step>& snapshot_steps) {
    RunResult result;
    result.log.nodes = sim.world().nodes();
    auto wants_snapshot = [&](Step s) {
        return std::find(snapshot_steps.begin(), snapshot_steps.end(), s) != snapshot_steps.end();
    };
    record_contacts(sim, result.log);
    if (wants_snapshot(sim.now())) {
        result.log.snapshots.push_back(sim.snapshot());
    }
    for (Step i = 0; i < steps; ++i) {
        sim.step();
        record_contacts(sim, result.log);
        if (log_every > 0 && sim.now() % log_every == 0) {
            result.log.rows.push_back(sim.log_row());
        }
        if (wants_snapshot(sim.now())) {
            result.log.snapshots.push_back(sim.snapshot());
        }
    }
    result.checkpoint = make_checkpoint(sim);
    return result;
}

}  // namespace

RunResult run(const RunSpec& spec, std::uint64_t seed) {
    Simulation sim(spec.world, spec.params, seed);
    return drive(sim, spec.total_steps, spec.log_every, spec.snapshot_steps);
}

RunResult resume(const nlohmann::json& checkpoint, Step steps, Step log_every,
                 const std::vector<Step>& snapshot_steps) {
    Simulation sim = restore_checkpoint(checkpoint);
    return drive(sim, steps, log_every, snapshot_steps);
}

RunResult replay_mutated(const nlohmann::json& checkpoint, const std::vector<WorldMutation>& mutations,
                         const ReplaySpec& spec) {
    Simulation sim = restore_checkpoint(checkpoint);
    for (const auto& m : mutations) {
        try {
            sim.apply_mutation(m);
        } catch (const Error& e) {
            throw Error(ErrorCode::IncompatibleMutation, e.what());
        }
    }
    sim.set_fixed_epsilon(sim.params().learner.epsilon_min);
    sim.set_learning(!spec.freeze_learning);

    const Step start = sim.now();
    RunResult result;
    result.log.nodes = sim.world().nodes();
    result.log.transient_nodes = sim.world().nodes();

    auto capture = [&](Step offset) {
        if (offset <= spec.transient_steps) {
            result.log.transient.push_back({offset, sim.log_row().difference});
        }
        if (std::find(spec.snapshot_offsets.begin(), spec.snapshot_offsets.end(), offset) !=
            spec.snapshot_offsets.end()) {
            result.log.snapshots.push_back(sim.snapshot());
        }
    };
    capture(0);
    for (Step i = 1; i <= spec.steps; ++i) {
        sim.step();
        record_contacts(sim, result.log);
        if (spec.log_every > 0 && (sim.now() - start) % spec.log_every == 0) {
            result.log.rows.push_back(sim.log_row());
        }
        capture(i);
    }
    result.checkpoint = make_checkpoint(sim);
    return result;
}

namespace {

void csv_row(std::ostringstream& out, const std::vector<double>& values) {
    for (double v : values) {
        out << ',' << format_double(v);
    }
}

}  // namespace

std::string RunLog::run_csv() const {
    std::ostringstream out;
    out << "step,epsilon,mean_insufficiency,comm_count";
    for (NodeId n : nodes) {
        out << ",I_" << n.value;
    }
    for (NodeId n : nodes) {
        out << ",D_" << n.value;
    }
    out << '\n';
    for (const auto& r : rows) {
        out << r.step << ',' << format_double(r.epsilon) << ',' << format_double(r.mean_insufficiency) << ','
            << r.comm_count;
        csv_row(out, r.insufficiency);
        csv_row(out, r.difference);
        out << '\n';
    }
    return out.str();
}

std::string RunLog::snapshots_csv() const {
    std::ostringstream out;
    out << "step,agent,node,frequency,required\n";
    for (const auto& s : snapshots) {
        for (std::size_t a = 0; a < s.agents.size(); ++a) {
            for (std::size_t k = 0; k < s.nodes.size(); ++k) {
                out << s.step << ',' << s.agents[a].value << ',' << s.nodes[k].value << ','
                    << format_double(s.frequency[a][k]) << ',' << format_double(s.required[k]) << '\n';
            }
        }
    }
    return out.str();
}

std::string RunLog::contacts_csv() const {
    std::ostringstream out;
    out << "step,contact,component_sizes\n";
    for (const auto& c : contacts) {
        out << c.step << ",1,";
        for (std::size_t k = 0; k < c.sizes.size(); ++k) {
            out << (k ? ";" : "") << c.sizes[k];
        }
        out << '\n';
    }
    return out.str();
}

std::string RunLog::transient_csv() const {
    std::ostringstream out;
    out << "offset";
    for (NodeId n : transient_nodes) {
        out << ",D_" << n.value;
    }
    out << '\n';
    for (const auto& r : transient) {
        out << r.offset;
        csv_row(out, r.difference);
        out << '\n';
    }
    return out.str();
}

std::optional<Step> RunLog::convergence_step(double threshold) const {
    for (const auto& r : rows) {
        if (r.mean_insufficiency < threshold) {
            return r.step;
        }
    }
    return std::nullopt;
}

nlohmann::json RunLog::summary(double threshold) const {
    nlohmann::json j;
    const auto conv = convergence_step(threshold);
    j["convergence_threshold"] = threshold;
    j["convergence_step"] = conv ? nlohmann::json(*conv) : nlohmann::json();
    if (!rows.empty()) {
        const auto& last = rows.back();
        j["final_step"] = last.step;
        j["final_mean_insufficiency"] = last.mean_insufficiency;
        j["final_comm_count"] = last.comm_count;
        j["final_max_insufficiency"] = *std::max_element(last.insufficiency.begin(), last.insufficiency.end());
    }
    j["logged_rows"] = rows.size();
    j["contact_steps"] = contacts.size();
    return j;
}

}  // namespace patrol
