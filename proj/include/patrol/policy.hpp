#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "patrol/history.hpp"
#include "patrol/ids.hpp"
#include "patrol/world.hpp"

namespace patrol {

/// Row-stochastic first-order move model over one circle's nodes, indexed in
/// the circle's ring order.
class TransitionMatrix {
  public:
    TransitionMatrix() = default;
    TransitionMatrix(CircleId circle, std::vector<NodeId> nodes, std::vector<double> entries);

    /// Half the mass on each ring neighbour of every node.
    static TransitionMatrix neighbor_uniform(const Circle& circle);

    CircleId circle() const { return circle_; }
    const std::vector<NodeId>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::optional<std::size_t> index_of(NodeId node) const;

    double at(std::size_t from, std::size_t to) const { return entries_[from * nodes_.size() + to]; }
    double& at(std::size_t from, std::size_t to) { return entries_[from * nodes_.size() + to]; }
    /// Zero when either node is off the circle.
    double probability(NodeId from, NodeId to) const;
    const std::vector<double>& entries() const { return entries_; }

    /// Largest deviation of any row sum from 1.
    double max_row_error() const;

    /// Carries the matrix over to a circle that gained nodes. Mass that moved
    /// to a former neighbour now moves to whichever node replaced it; new
    /// nodes get neighbour-uniform rows.
    TransitionMatrix remapped(const Circle& circle) const;

    bool operator==(const TransitionMatrix&) const = default;

    nlohmann::json to_json() const;
    static TransitionMatrix from_json(const nlohmann::json& j);

  private:
    CircleId circle_;
    std::vector<NodeId> nodes_;
    std::vector<double> entries_;
};

/// Counts moves in the last `window` entries of the history. Rows of nodes
/// never left inside the window fall back to neighbour-uniform. Histories
/// shorter than 2 steps yield the fallback matrix.
TransitionMatrix estimate_transitions(const VisitationHistory& h, const Circle& circle, std::size_t window = 1000);

struct StationaryPolicy {
    std::vector<NodeId> nodes;
    std::vector<double> probability;
};

/// Fixed point of P' = (1 - damping) P + damping U by power iteration on a
/// row vector started from uniform. Throws NoConvergence.
StationaryPolicy stationary_policy(const TransitionMatrix& p, double damping = 0.01, double tol = 1e-9,
                                   int max_iter = 100000);

/// b P' for the damped matrix, used by the fixed-point checks.
std::vector<double> damped_step(const TransitionMatrix& p, const std::vector<double>& b, double damping);

/// What one agent believes about a peer's position.
struct PeerBelief {
    AgentId peer;
    std::vector<double> distribution;  // in the matrix's node order
    Step last_sync = -1;               // -1 before any contact
    TransitionMatrix matrix;

    static PeerBelief uniform(AgentId peer, const Circle& circle);
    static PeerBelief point_mass(AgentId peer, const TransitionMatrix& matrix, NodeId at, Step step);

    double mass_at(NodeId node) const;

    nlohmann::json to_json() const;
    static PeerBelief from_json(const nlohmann::json& j);
};

/// How a peer's position is extrapolated between contacts. Stationary holds
/// the belief at the peer's stationary policy; Transition pushes the last known
/// position through the peer's matrix every step.
enum class PeerModel { Stationary, Transition };

std::string peer_model_name(PeerModel model);
PeerModel peer_model_from_name(const std::string& name);

/// One step forward: distribution <- distribution x P. Throws DimensionMismatch.
PeerBelief propagate_belief(const PeerBelief& belief, const TransitionMatrix& p);

/// Per-step belief mass over node ids for the last `capacity` steps, with a
/// running per-node sum. Exactly known positions are stored as point masses.
class BeliefWindow {
  public:
    BeliefWindow() = default;
    BeliefWindow(std::size_t capacity, std::size_t node_slots);

    /// Appends the mass vector for `step` (must follow the last step),
    /// evicting the oldest slot when full.
    void push(Step step, const std::vector<double>& mass);

    /// Replaces the slot for `step` with a point mass at `node`. Returns false
    /// when `step` is outside the window. Call resum() afterwards.
    bool overwrite(Step step, NodeId node);

    /// Recomputes the running sum from the slots.
    void resum();

    /// Summed mass at `node` over the held steps.
    double mass(NodeId node) const { return node.index() < sum_.size() ? sum_[node.index()] : 0.0; }

    std::size_t size() const { return count_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t node_slots() const { return node_slots_; }
    std::optional<Step> last_step() const;

    /// Slots in step order, oldest first.
    std::vector<std::pair<Step, const std::vector<double>*>> slots() const;

    /// Grows every slot to hold `node_slots` node ids.
    void resize_nodes(std::size_t node_slots);

    nlohmann::json to_json() const;
    static BeliefWindow from_json(const nlohmann::json& j);

  private:
    std::size_t slot_of(std::size_t age) const;  // age 0 = oldest

    std::size_t capacity_ = 0;
    std::size_t node_slots_ = 0;
    std::size_t head_ = 0;  // index of the oldest slot
    std::size_t count_ = 0;
    std::vector<Step> steps_;
    std::vector<std::vector<double>> slots_;
    std::vector<double> sum_;
};

/// Sum over steps in (now - window, now] of the belief mass at `node`.
double expected_visit_mass(const BeliefWindow& beliefs, NodeId node, Step now, std::int64_t window = 100);

/// Scatters a distribution in matrix order onto node-id slots.
std::vector<double> to_node_slots(const TransitionMatrix& m, const std::vector<double>& distribution,
                                  std::size_t node_slots);

}  // namespace patrol
