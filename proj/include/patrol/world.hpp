#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "patrol/error.hpp"
#include "patrol/ids.hpp"

namespace patrol {

enum class Direction : std::uint8_t { Left = 0, Right = 1 };

/// Undirected ring. Ring order defines the moves: Left is the cyclic
/// predecessor, Right the cyclic successor.
struct Circle {
    CircleId id;
    std::vector<NodeId> nodes;

    std::size_t size() const { return nodes.size(); }
    std::optional<std::size_t> position_of(NodeId node) const;
    bool contains(NodeId node) const { return position_of(node).has_value(); }

    /// Throws NodeNotOnCircle.
    NodeId step(NodeId at, Direction dir) const;
};

/// Percent scale: `component` is the node's share of one agent's capacity,
/// `required` = agent count x component.
struct FrequencyRequirement {
    double component = 0.0;
    double required = 0.0;
};

struct AgentAssignment {
    AgentId agent;
    CircleId circle;
};

/// File form of a world.
struct WorldConfig {
    std::string name;
    std::vector<std::vector<int>> circles;
    std::map<int, double> component_percent;
    std::vector<AgentAssignment> agents;

    static WorldConfig from_json(const nlohmann::json& j);
    static WorldConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

class PatrolWorld {
  public:
    /// Validates and builds. Throws DuplicateNodeInCircle, EmptyCircle,
    /// UnassignedCircle, CapacityExceeded.
    static PatrolWorld build(const WorldConfig& config);

    const std::string& name() const { return name_; }
    const std::vector<Circle>& circles() const { return circles_; }
    const Circle& circle(CircleId id) const;

    /// Distinct node ids in ascending order.
    const std::vector<NodeId>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }
    /// Largest node id; per-node arrays are sized max_node_id() + 1.
    int max_node_id() const { return nodes_.empty() ? 0 : nodes_.back().value; }
    bool has_node(NodeId node) const;

    const FrequencyRequirement& requirement(NodeId node) const;
    double required(NodeId node) const { return requirement(node).required; }

    const std::vector<AgentAssignment>& agents() const { return agents_; }
    int agent_count() const { return static_cast<int>(agents_.size()); }
    CircleId circle_of(AgentId agent) const;

    NodeId circle_step(CircleId circle, NodeId at, Direction dir) const;

    /// Nodes adjacent to `at` through any circle's edges. Throws UnknownNode.
    std::vector<NodeId> union_neighbors(NodeId at) const;
    /// True when two nodes are equal or joined by an edge of any circle.
    bool within_contact_range(NodeId a, NodeId b) const;

    double capacity_sum() const;

    WorldConfig to_config() const;
    /// FNV-1a over the canonical JSON form.
    std::uint64_t config_hash() const;

  private:
    friend struct WorldEditor;
    friend std::vector<Error> find_violations(const WorldConfig& config);

    static PatrolWorld build(const WorldConfig& config, std::vector<Error>* violations);

    void index();

    std::string name_;
    std::vector<Circle> circles_;
    std::vector<NodeId> nodes_;
    std::vector<std::optional<FrequencyRequirement>> requirements_;  // by node id
    std::vector<AgentAssignment> agents_;
    std::vector<std::vector<NodeId>> neighbors_;  // by node id
};

/// Every problem build() would reject, in checking order; empty when valid.
std::vector<Error> find_violations(const WorldConfig& config);

/// Returns the component sum on success. Throws CapacityExceededError.
double validate_capacity(const PatrolWorld& world);

struct SwapRequirements {
    NodeId a;
    NodeId b;
};

struct SetRequirement {
    NodeId node;
    double required_percent = 0.0;
};

struct InsertNode {
    CircleId circle;
    NodeId after;
    NodeId before;
    NodeId node;
    double required_percent = 0.0;
};

struct RemoveRequirement {
    NodeId node;
};

using WorldMutation = std::variant<SwapRequirements, SetRequirement, InsertNode, RemoveRequirement>;

/// Throws UnknownNode, InvalidInsertion, CapacityExceeded.
PatrolWorld apply_mutation(const PatrolWorld& world, const WorldMutation& mutation);

WorldMutation mutation_from_json(const nlohmann::json& j);
nlohmann::json mutation_to_json(const WorldMutation& m);
/// Accepts {"mutations": [...]} or a bare array.
std::vector<WorldMutation> load_mutations(const std::filesystem::path& path);

}  // namespace patrol
