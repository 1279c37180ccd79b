#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "patrol/agent_view.hpp"
#include "patrol/comms.hpp"
#include "patrol/learner.hpp"
#include "patrol/rng.hpp"
#include "patrol/world.hpp"

namespace patrol {

struct SimParams {
    Windows windows;
    std::int64_t recompute_every = 100;
    PeerModel peer_model = PeerModel::Stationary;
    /// Off means contacts are never detected, from step 0 on.
    bool communication = true;
    LearnerParams learner;

    void validate() const;
    nlohmann::json to_json() const;
    static SimParams from_json(const nlohmann::json& j);
};

struct LogRow {
    Step step = 0;
    double epsilon = 0.0;
    double mean_insufficiency = 0.0;
    int comm_count = 0;
    std::vector<double> insufficiency;  // I_i per node, in RunLog::nodes order
    std::vector<double> difference;     // D_i = f_i - F_i
};

/// Per-agent ground-truth visitation frequency over the frequency window.
struct Snapshot {
    Step step = 0;
    std::vector<AgentId> agents;
    std::vector<NodeId> nodes;
    std::vector<std::vector<double>> frequency;  // [agent][node]
    std::vector<double> required;
};

struct ContactRecord {
    Step step = 0;
    std::vector<int> sizes;
};

struct TransientRow {
    Step offset = 0;  // steps since the mutation
    std::vector<double> difference;
};

struct RunLog {
    std::vector<NodeId> nodes;
    std::vector<LogRow> rows;
    std::vector<Snapshot> snapshots;
    std::vector<ContactRecord> contacts;
    std::vector<NodeId> transient_nodes;
    std::vector<TransientRow> transient;

    std::string run_csv() const;
    std::string snapshots_csv() const;
    std::string contacts_csv() const;
    std::string transient_csv() const;
    /// First logged step whose mean insufficiency is below `threshold`.
    std::optional<Step> convergence_step(double threshold = 1.0) const;
    nlohmann::json summary(double threshold = 1.0) const;
};

/// Test hook: when it returns an action, that action replaces the learner's choice.
using ActionOverride = std::function<std::optional<Action>(AgentId, NodeId, Step)>;

/// Synchronous multi-agent simulation. Each step runs, in order: select
/// actions from the cached observations, move, record visits and advance peer
/// beliefs, detect contacts and exchange, score and update Q, re-estimate
/// transition matrices on cadence.
class Simulation {
  public:
    Simulation(std::shared_ptr<const PatrolWorld> world, SimParams params, std::uint64_t seed,
               std::optional<std::vector<NodeId>> start = std::nullopt);

    void step();
    void advance(Step steps);

    Step now() const { return now_; }
    const PatrolWorld& world() const { return *world_; }
    std::shared_ptr<const PatrolWorld> world_ptr() const { return world_; }
    const SimParams& params() const { return params_; }
    std::uint64_t seed() const { return seed_; }

    /// Agent positions in world().agents() order.
    const std::vector<NodeId>& positions() const { return positions_; }
    const std::vector<AgentView>& views() const { return views_; }
    const ContactLog& contact_log() const { return contact_log_; }
    const std::vector<ContactEvent>& last_contacts() const { return last_contacts_; }
    const std::vector<Action>& last_actions() const { return last_actions_; }
    const std::vector<ObservedState>& observations() const { return observations_; }

    /// Ground truth, percent of one agent's capacity, all agents summed.
    double true_frequency(NodeId node) const;
    double insufficiency(NodeId node) const;
    double mean_insufficiency() const;
    /// Ground-truth contribution of the agent at `agent_index`.
    double agent_frequency(std::size_t agent_index, NodeId node) const;

    double epsilon() const;

    void set_communication(bool enabled) { communication_ = enabled; }
    bool communication() const { return communication_; }
    void set_learning(bool enabled) { learning_ = enabled; }
    bool learning() const { return learning_; }
    void set_fixed_epsilon(std::optional<double> eps) { fixed_epsilon_ = eps; }
    void set_action_override(ActionOverride fn) { override_ = std::move(fn); }

    /// Replaces the world; agent views adopt it and observations are rebuilt.
    void apply_mutation(const WorldMutation& mutation);

    LogRow log_row() const;
    Snapshot snapshot() const;

    nlohmann::json to_json() const;
    static Simulation from_json(const nlohmann::json& j);

  private:
    Simulation() = default;

    void record_positions();
    void communicate();
    void observe_all();
    std::size_t node_slots() const { return static_cast<std::size_t>(world_->max_node_id()) + 1; }

    std::shared_ptr<const PatrolWorld> world_;
    SimParams params_;
    std::uint64_t seed_ = 0;
    Step now_ = 0;
    std::vector<NodeId> positions_;
    std::vector<AgentView> views_;
    std::vector<Rng> agent_rngs_;
    Rng engine_rng_;

    // ground truth over the frequency window: positions per step, oldest first
    std::deque<std::vector<NodeId>> recent_positions_;
    std::vector<int> true_counts_;
    std::vector<std::vector<int>> agent_counts_;

    ContactLog contact_log_;
    std::vector<ContactEvent> last_contacts_;
    std::vector<Action> last_actions_;
    std::vector<ObservedState> observations_;

    bool communication_ = true;
    bool learning_ = true;
    std::optional<double> fixed_epsilon_;
    ActionOverride override_;
};

struct RunSpec {
    std::shared_ptr<const PatrolWorld> world;
    SimParams params;
    Step total_steps = 0;
    Step log_every = 1000;
    std::vector<Step> snapshot_steps{5000, 50000, 500000};
};

struct RunResult {
    RunLog log;
    nlohmann::json checkpoint;
};

/// Fresh run from step 0.
RunResult run(const RunSpec& spec, std::uint64_t seed);

/// Continues a checkpointed simulation for `steps` more steps.
RunResult resume(const nlohmann::json& checkpoint, Step steps, Step log_every,
                 const std::vector<Step>& snapshot_steps);

struct ReplaySpec {
    Step steps = 1000;
    bool freeze_learning = false;
    Step log_every = 1000;
    Step transient_steps = 1000;
    /// Offsets after the mutation at which heat maps are captured.
    std::vector<Step> snapshot_offsets{0, 100, 1000, 10000, 100000};
};

/// Applies the mutations to a checkpointed simulation and continues with
/// epsilon fixed at its floor. Throws IncompatibleMutation.
RunResult replay_mutated(const nlohmann::json& checkpoint, const std::vector<WorldMutation>& mutations,
                         const ReplaySpec& spec);

inline constexpr int kCheckpointVersion = 1;

nlohmann::json make_checkpoint(const Simulation& sim);
Simulation restore_checkpoint(const nlohmann::json& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& checkpoint);
nlohmann::json load_checkpoint(const std::filesystem::path& path);

}  // namespace patrol
