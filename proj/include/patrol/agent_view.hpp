#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "patrol/history.hpp"
#include "patrol/learner.hpp"
#include "patrol/policy.hpp"
#include "patrol/world.hpp"

namespace patrol {

struct ExchangePayload;

struct Windows {
    std::int64_t transition = 1000;  // w
    std::int64_t frequency = 100;    // w_f
};

/// Everything one agent knows: its own history, what it believes about each
/// peer, and its Q-table. Holds no reference to any other agent's state; the
/// only way peer information enters is receive().
class AgentView {
  public:
    struct PeerState {
        AgentId peer;
        CircleId circle;
        PeerBelief belief;
        BeliefWindow window;
        std::shared_ptr<const ExchangePayload> received;  // last payload from this peer
        std::vector<double> stationary;  // of belief.matrix, empty before contact
    };

    AgentView(AgentId self, std::shared_ptr<const PatrolWorld> world, Windows windows,
              PeerModel model = PeerModel::Stationary);

    AgentId id() const { return id_; }
    CircleId circle() const { return circle_; }
    const PatrolWorld& world() const { return *world_; }
    const Windows& windows() const { return windows_; }
    PeerModel peer_model() const { return model_; }
    const VisitationHistory& history() const { return history_; }
    std::optional<Step> last_step() const;

    /// Appends this agent's own position for `step`.
    void record_own(Step step, NodeId node);

    /// Moves every peer belief forward one step and appends it to the peer's
    /// window for `step`. Call once per step, after record_own.
    void advance_peers(Step step);

    /// Percent of the agent's own visits to `node` over the frequency window.
    double own_frequency(NodeId node, Step now) const;
    /// Own frequency plus every peer's expected contribution (percent).
    double estimated_frequency(NodeId node, Step now) const;

    const std::vector<PeerState>& peers() const { return peers_; }
    const PeerState& peer(AgentId peer) const;

    /// Overwrites the sender's belief with its communicated position and
    /// splices its recent positions into the window.
    void receive(const ExchangePayload& payload, Step now);
    ExchangePayload payload() const;

    const TransitionMatrix& own_matrix() const { return own_matrix_; }
    const std::optional<StationaryPolicy>& own_policy() const { return own_policy_; }
    /// Re-estimates the own transition matrix from the last w steps.
    void refresh_matrix();

    QTable& q() { return q_; }
    const QTable& q() const { return q_; }

    /// Adopts a mutated world: node-indexed arrays grow and matrices over
    /// changed circles are carried over.
    void rebind_world(std::shared_ptr<const PatrolWorld> world);

    nlohmann::json to_json() const;
    static AgentView from_json(const nlohmann::json& j, std::shared_ptr<const PatrolWorld> world);

  private:
    std::size_t node_slots() const { return static_cast<std::size_t>(world_->max_node_id()) + 1; }
    PeerState& peer_mut(AgentId peer);

    AgentId id_;
    CircleId circle_;
    std::shared_ptr<const PatrolWorld> world_;
    Windows windows_;
    PeerModel model_;
    VisitationHistory history_;
    std::vector<int> own_counts_;  // visits per node id inside the frequency window
    std::vector<PeerState> peers_;
    TransitionMatrix own_matrix_;
    std::optional<StationaryPolicy> own_policy_;
    QTable q_;
};

/// Own windowed frequency plus belief-propagated peer mass, computed by
/// scanning the stored windows rather than the running sums.
double estimated_frequency(const AgentView& view, NodeId node, Step now);

}  // namespace patrol
