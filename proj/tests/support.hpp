#pragma once

#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "patrol/world.hpp"

namespace testing {

inline std::string config_path(const std::string& name) { return std::string(PATROL_CONFIG_DIR) + "/" + name; }

/// One ring of nodes 1..n, `agents` agents on it, every node at `component` percent.
inline patrol::WorldConfig ring_config(int n, int agents, double component) {
    patrol::WorldConfig cfg;
    cfg.name = "ring";
    std::vector<int> ring(static_cast<std::size_t>(n));
    std::iota(ring.begin(), ring.end(), 1);
    cfg.circles.push_back(ring);
    for (int i = 1; i <= n; ++i) {
        cfg.component_percent[i] = component;
    }
    for (int a = 1; a <= agents; ++a) {
        cfg.agents.push_back({patrol::AgentId{a}, patrol::CircleId{1}});
    }
    return cfg;
}

inline std::shared_ptr<const patrol::PatrolWorld> ring_world(int n, int agents, double component) {
    return std::make_shared<const patrol::PatrolWorld>(patrol::PatrolWorld::build(ring_config(n, agents, component)));
}

inline std::shared_ptr<const patrol::PatrolWorld> load_world(const std::string& name) {
    return std::make_shared<const patrol::PatrolWorld>(
        patrol::PatrolWorld::build(patrol::WorldConfig::load(config_path(name))));
}

}  // namespace testing
