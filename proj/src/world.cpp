#include "patrol/world.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "patrol/error.hpp"
#include "patrol/io.hpp"

namespace patrol {

namespace {

// Percents are read with two decimals, so sums carry representation error.
constexpr double kCapacityTolerance = 1e-9;

}  // namespace

std::optional<std::size_t> Circle::position_of(NodeId node) const {
    auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nodes.begin());
}

NodeId Circle::step(NodeId at, Direction dir) const {
    const auto pos = position_of(at);
    if (!pos) {
        throw Error(ErrorCode::NodeNotOnCircle,
                    "node " + to_string(at) + " is not on circle " + to_string(id));
    }
    const std::size_t n = nodes.size();
    const std::size_t next = dir == Direction::Right ? (*pos + 1) % n : (*pos + n - 1) % n;
    return nodes[next];
}

WorldConfig WorldConfig::from_json(const nlohmann::json& j) {
    WorldConfig cfg;
    try {
        cfg.name = j.value("name", std::string{});
        for (const auto& ring : j.at("circles")) {
            cfg.circles.push_back(ring.get<std::vector<int>>());
        }
        for (const auto& [key, value] : j.at("component_percent").items()) {
            cfg.component_percent[std::stoi(key)] = value.get<double>();
        }
        for (const auto& a : j.at("agents")) {
            cfg.agents.push_back({AgentId{a.at("id").get<int>()}, CircleId{a.at("circle").get<int>()}});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("world config: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::InvalidConfig, "world config: component_percent keys must be node ids");
    }
    return cfg;
}

WorldConfig WorldConfig::load(const std::filesystem::path& path) {
    auto cfg = from_json(read_json(path));
    if (cfg.name.empty()) {
        cfg.name = path.stem().string();
    }
    return cfg;
}

nlohmann::json WorldConfig::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["circles"] = circles;
    nlohmann::json comp = nlohmann::json::object();
    for (const auto& [node, value] : component_percent) {
        comp[std::to_string(node)] = value;
    }
    j["component_percent"] = comp;
    nlohmann::json agents_json = nlohmann::json::array();
    for (const auto& a : agents) {
        agents_json.push_back({{"id", a.agent.value}, {"circle", a.circle.value}});
    }
    j["agents"] = agents_json;
    return j;
}

PatrolWorld PatrolWorld::build(const WorldConfig& config) { return build(config, nullptr); }

std::vector<Error> find_violations(const WorldConfig& config) {
    std::vector<Error> found;
    PatrolWorld::build(config, &found);
    return found;
}

PatrolWorld PatrolWorld::build(const WorldConfig& config, std::vector<Error>* violations) {
    // with a sink every violation is recorded and checking carries on where it can
    auto fail = [&](Error e) {
        if (!violations) {
            throw e;
        }
        violations->push_back(std::move(e));
    };

    PatrolWorld world;
    world.name_ = config.name;

    if (config.circles.empty()) {
        fail(Error(ErrorCode::EmptyCircle, "world has no circles"));
        return world;
    }
    int circle_index = 0;
    for (const auto& ring : config.circles) {
        ++circle_index;
        Circle circle{CircleId{circle_index}, {}};
        if (ring.size() < 3) {
            fail(Error(ErrorCode::EmptyCircle, "circle " + std::to_string(circle_index) + " has " +
                                                   std::to_string(ring.size()) + " nodes, at least 3 required"));
        }
        std::set<int> seen;
        for (int id : ring) {
            if (id < 1) {
                fail(Error(ErrorCode::UnknownNode, "node ids start at 1, got " + std::to_string(id)));
                continue;
            }
            if (!seen.insert(id).second) {
                fail(Error(ErrorCode::DuplicateNodeInCircle,
                           "node " + std::to_string(id) + " repeated in circle " + std::to_string(circle_index)));
                continue;
            }
            circle.nodes.push_back(NodeId{id});
        }
        world.circles_.push_back(std::move(circle));
    }

    world.agents_ = config.agents;
    std::sort(world.agents_.begin(), world.agents_.end(),
              [](const AgentAssignment& a, const AgentAssignment& b) { return a.agent < b.agent; });
    for (std::size_t i = 0; i < world.agents_.size(); ++i) {
        const auto& a = world.agents_[i];
        if (i > 0 && world.agents_[i - 1].agent == a.agent) {
            fail(Error(ErrorCode::InvalidConfig, "agent " + to_string(a.agent) + " assigned twice"));
        }
        if (a.circle.value < 1 || a.circle.value > static_cast<int>(world.circles_.size())) {
            fail(Error(ErrorCode::UnknownCircle,
                       "agent " + to_string(a.agent) + " assigned to missing circle " + to_string(a.circle)));
        }
    }
    for (const auto& circle : world.circles_) {
        const bool assigned = std::any_of(world.agents_.begin(), world.agents_.end(),
                                          [&](const AgentAssignment& a) { return a.circle == circle.id; });
        if (!assigned) {
            fail(Error(ErrorCode::UnassignedCircle, "circle " + to_string(circle.id) + " has no agent"));
        }
    }

    world.index();

    const double r = static_cast<double>(world.agents_.size());
    for (NodeId node : world.nodes_) {
        auto it = config.component_percent.find(node.value);
        const double component = it == config.component_percent.end() ? 0.0 : it->second;
        if (!(component >= 0.0) || component > 100.0) {
            fail(Error(ErrorCode::InvalidConfig,
                       "component frequency of node " + to_string(node) + " must lie in [0, 100]"));
        }
        world.requirements_[node.index()] = FrequencyRequirement{component, r * component};
    }
    for (const auto& [id, value] : config.component_percent) {
        if (!world.has_node(NodeId{id})) {
            fail(Error(ErrorCode::UnknownNode, "component frequency given for node " + std::to_string(id) +
                                                   " which lies on no circle"));
        }
    }

    if (!violations) {
        validate_capacity(world);
    } else {
        try {
            validate_capacity(world);
        } catch (const Error& e) {
            fail(e);
        }
    }
    return world;
}

void PatrolWorld::index() {
    std::set<NodeId> all;
    for (const auto& c : circles_) {
        all.insert(c.nodes.begin(), c.nodes.end());
    }
    nodes_.assign(all.begin(), all.end());
    const std::size_t slots = static_cast<std::size_t>(max_node_id()) + 1;
    requirements_.resize(slots);
    neighbors_.assign(slots, {});
    for (const auto& c : circles_) {
        for (NodeId node : c.nodes) {
            auto& list = neighbors_[node.index()];
            for (Direction d : {Direction::Left, Direction::Right}) {
                NodeId nb = c.step(node, d);
                if (std::find(list.begin(), list.end(), nb) == list.end()) {
                    list.push_back(nb);
                }
            }
        }
    }
    for (auto& list : neighbors_) {
        std::sort(list.begin(), list.end());
    }
}

const Circle& PatrolWorld::circle(CircleId id) const {
    if (id.value < 1 || id.value > static_cast<int>(circles_.size())) {
        throw Error(ErrorCode::UnknownCircle, "no circle " + to_string(id));
    }
    return circles_[static_cast<std::size_t>(id.value - 1)];
}

bool PatrolWorld::has_node(NodeId node) const {
    return node.value >= 1 && node.index() < requirements_.size() && requirements_[node.index()].has_value();
}

const FrequencyRequirement& PatrolWorld::requirement(NodeId node) const {
    if (!has_node(node)) {
        throw Error(ErrorCode::UnknownNode, "no node " + to_string(node));
    }
    return *requirements_[node.index()];
}

CircleId PatrolWorld::circle_of(AgentId agent) const {
    for (const auto& a : agents_) {
        if (a.agent == agent) {
            return a.circle;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "no agent " + to_string(agent));
}

NodeId PatrolWorld::circle_step(CircleId circle_id, NodeId at, Direction dir) const {
    return circle(circle_id).step(at, dir);
}

std::vector<NodeId> PatrolWorld::union_neighbors(NodeId at) const {
    if (!has_node(at)) {
        throw Error(ErrorCode::UnknownNode, "no node " + to_string(at));
    }
    return neighbors_[at.index()];
}

bool PatrolWorld::within_contact_range(NodeId a, NodeId b) const {
    if (a == b) {
        return true;
    }
    const auto& list = neighbors_.at(a.index());
    return std::binary_search(list.begin(), list.end(), b);
}

double PatrolWorld::capacity_sum() const {
    double sum = 0.0;
    for (NodeId node : nodes_) {
        sum += requirements_[node.index()]->component;
    }
    return sum;
}

WorldConfig PatrolWorld::to_config() const {
    WorldConfig cfg;
    cfg.name = name_;
    for (const auto& c : circles_) {
        std::vector<int> ring;
        for (NodeId n : c.nodes) {
            ring.push_back(n.value);
        }
        cfg.circles.push_back(std::move(ring));
    }
    for (NodeId n : nodes_) {
        cfg.component_percent[n.value] = requirements_[n.index()]->component;
    }
    cfg.agents = agents_;
    return cfg;
}

std::uint64_t PatrolWorld::config_hash() const {
    return fnv1a(to_config().to_json().dump());
}

double validate_capacity(const PatrolWorld& world) {
    const double sum = world.capacity_sum();
    if (sum > 100.0 + kCapacityTolerance) {
        throw CapacityExceededError(sum);
    }
    return sum;
}

struct WorldEditor {
    static PatrolWorld swap(const PatrolWorld& world, NodeId a, NodeId b) {
        PatrolWorld out = world;
        std::swap(*out.requirements_[a.index()], *out.requirements_[b.index()]);
        return out;
    }

    static PatrolWorld set_required(const PatrolWorld& world, NodeId node, double required) {
        PatrolWorld out = world;
        const double r = static_cast<double>(world.agents_.size());
        const double component = required / r;
        *out.requirements_[node.index()] = FrequencyRequirement{component, r * component};
        return out;
    }

    static PatrolWorld insert(const PatrolWorld& world, const InsertNode& m) {
        PatrolWorld out = world;
        auto& ring = out.circles_[static_cast<std::size_t>(m.circle.value - 1)].nodes;
        const std::size_t n = ring.size();
        const std::size_t pa = static_cast<std::size_t>(std::find(ring.begin(), ring.end(), m.after) - ring.begin());
        const std::size_t pb = static_cast<std::size_t>(std::find(ring.begin(), ring.end(), m.before) - ring.begin());
        if ((pa + 1) % n == pb) {
            ring.insert(ring.begin() + static_cast<std::ptrdiff_t>(pa + 1), m.node);
        } else {
            // `before` precedes `after` in ring order
            ring.insert(ring.begin() + static_cast<std::ptrdiff_t>(pb + 1), m.node);
        }
        out.index();
        const double r = static_cast<double>(world.agents_.size());
        const double component = m.required_percent / r;
        out.requirements_[m.node.index()] = FrequencyRequirement{component, r * component};
        return out;
    }
};

namespace {

void require_node(const PatrolWorld& world, NodeId node) {
    if (!world.has_node(node)) {
        throw Error(ErrorCode::UnknownNode, "mutation references missing node " + to_string(node));
    }
}

void require_percent(double value) {
    if (!(value >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "required percent must be non-negative");
    }
}

}  // namespace

PatrolWorld apply_mutation(const PatrolWorld& world, const WorldMutation& mutation) {
    PatrolWorld out = std::visit(
        [&](const auto& m) -> PatrolWorld {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SwapRequirements>) {
                require_node(world, m.a);
                require_node(world, m.b);
                return WorldEditor::swap(world, m.a, m.b);
            } else if constexpr (std::is_same_v<T, SetRequirement>) {
                require_node(world, m.node);
                require_percent(m.required_percent);
                return WorldEditor::set_required(world, m.node, m.required_percent);
            } else if constexpr (std::is_same_v<T, RemoveRequirement>) {
                require_node(world, m.node);
                return WorldEditor::set_required(world, m.node, 0.0);
            } else {
                const Circle& circle = world.circle(m.circle);
                if (m.node.value < 1 || world.has_node(m.node)) {
                    throw Error(ErrorCode::InvalidInsertion, "node " + to_string(m.node) + " already exists");
                }
                require_node(world, m.after);
                require_node(world, m.before);
                if (!circle.contains(m.after) || !circle.contains(m.before) ||
                    (circle.step(m.after, Direction::Right) != m.before &&
                     circle.step(m.after, Direction::Left) != m.before)) {
                    throw Error(ErrorCode::InvalidInsertion, "nodes " + to_string(m.after) + " and " +
                                                                 to_string(m.before) + " are not adjacent on circle " +
                                                                 to_string(m.circle));
                }
                require_percent(m.required_percent);
                return WorldEditor::insert(world, m);
            }
        },
        mutation);
    validate_capacity(out);
    return out;
}

WorldMutation mutation_from_json(const nlohmann::json& j) {
    try {
        const std::string type = j.at("type").get<std::string>();
        if (type == "swap_requirements") {
            return SwapRequirements{NodeId{j.at("a").get<int>()}, NodeId{j.at("b").get<int>()}};
        }
        if (type == "set_requirement") {
            return SetRequirement{NodeId{j.at("node").get<int>()}, j.at("required_percent").get<double>()};
        }
        if (type == "insert_node") {
            return InsertNode{CircleId{j.at("circle").get<int>()}, NodeId{j.at("after").get<int>()},
                              NodeId{j.at("before").get<int>()}, NodeId{j.at("node").get<int>()},
                              j.at("required_percent").get<double>()};
        }
        if (type == "remove_requirement") {
            return RemoveRequirement{NodeId{j.at("node").get<int>()}};
        }
        throw Error(ErrorCode::InvalidConfig, "unknown mutation type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("mutation: ") + e.what());
    }
}

nlohmann::json mutation_to_json(const WorldMutation& mutation) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, SwapRequirements>) {
                return {{"type", "swap_requirements"}, {"a", m.a.value}, {"b", m.b.value}};
            } else if constexpr (std::is_same_v<T, SetRequirement>) {
                return {{"type", "set_requirement"}, {"node", m.node.value}, {"required_percent", m.required_percent}};
            } else if constexpr (std::is_same_v<T, RemoveRequirement>) {
                return {{"type", "remove_requirement"}, {"node", m.node.value}};
            } else {
                return {{"type", "insert_node"}, {"circle", m.circle.value}, {"after", m.after.value},
                        {"before", m.before.value}, {"node", m.node.value}, {"required_percent", m.required_percent}};
            }
        },
        mutation);
}

std::vector<WorldMutation> load_mutations(const std::filesystem::path& path) {
    const nlohmann::json j = read_json(path);
    const nlohmann::json& list = j.is_array() ? j : j.at("mutations");
    std::vector<WorldMutation> out;
    for (const auto& item : list) {
        out.push_back(mutation_from_json(item));
    }
    return out;
}

}  // namespace patrol
