#include "patrol/comms.hpp"

#include <algorithm>
#include <numeric>

#include "patrol/error.hpp"

namespace patrol {

nlohmann::json ExchangePayload::to_json() const {
    std::vector<Step> steps;
    std::vector<int> nodes;
    for (const auto& v : recent) {
        steps.push_back(v.step);
        nodes.push_back(v.node.value);
    }
    return {{"sender", sender.value},
            {"position", position.value},
            {"steps", steps},
            {"nodes", nodes},
            {"matrix", matrix.to_json()},
            {"policy", policy}};
}

ExchangePayload ExchangePayload::from_json(const nlohmann::json& j) {
    ExchangePayload p;
    p.sender = AgentId{j.at("sender").get<int>()};
    p.position = NodeId{j.at("position").get<int>()};
    const auto steps = j.at("steps").get<std::vector<Step>>();
    const auto nodes = j.at("nodes").get<std::vector<int>>();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        p.recent.push_back({steps[k], NodeId{nodes.at(k)}});
    }
    p.matrix = TransitionMatrix::from_json(j.at("matrix"));
    p.policy = j.at("policy").get<std::vector<double>>();
    if (p.policy.size() != p.matrix.size()) {
        throw Error(ErrorCode::DimensionMismatch, "payload policy does not match its matrix");
    }
    return p;
}

std::vector<ContactEvent> detect_contacts(const PatrolWorld& world, const std::map<AgentId, NodeId>& positions,
                                          Step step) {
    std::vector<AgentId> agents;
    std::vector<NodeId> at;
    for (const auto& [agent, node] : positions) {
        agents.push_back(agent);
        at.push_back(node);
    }
    const std::size_t n = agents.size();

    // union-find over the proximity graph
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (world.within_contact_range(at[i], at[j])) {
                parent[find(i)] = find(j);
            }
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> components;
    for (std::size_t i = 0; i < n; ++i) {
        components[find(i)].push_back(i);
    }

    std::vector<ContactEvent> events;
    for (const auto& [root, members] : components) {
        if (members.size() < 2) {
            continue;
        }
        ContactEvent e;
        e.step = step;
        const bool same = std::all_of(members.begin(), members.end(), [&](std::size_t m) { return at[m] == at[members[0]]; });
        e.kind = same ? ContactKind::SameNode : ContactKind::AdjacentNodes;
        for (std::size_t m : members) {
            e.participants.push_back(agents[m]);
        }
        std::sort(e.participants.begin(), e.participants.end());
        events.push_back(std::move(e));
    }
    std::sort(events.begin(), events.end(),
              [](const ContactEvent& a, const ContactEvent& b) { return a.participants.front() < b.participants.front(); });
    return events;
}

void exchange(const ContactEvent& event, std::vector<AgentView>& views) {
    auto view_of = [&](AgentId id) -> AgentView& {
        for (auto& v : views) {
            if (v.id() == id) {
                return v;
            }
        }
        throw Error(ErrorCode::InvalidConfig, "contact names unknown agent " + to_string(id));
    };

    // payloads are taken before anyone receives, so the outcome does not depend on order
    std::vector<ExchangePayload> payloads;
    for (AgentId id : event.participants) {
        payloads.push_back(view_of(id).payload());
    }
    for (AgentId receiver : event.participants) {
        AgentView& view = view_of(receiver);
        for (const auto& p : payloads) {
            if (p.sender != receiver) {
                view.receive(p, event.step);
            }
        }
    }
}

void ContactLog::record(Step step, const std::vector<ContactEvent>& events) {
    if (events.empty()) {
        return;
    }
    if (steps_.empty() || steps_.back() != step) {
        steps_.push_back(step);
    }
}

int ContactLog::count(Step now, std::int64_t window) const {
    int n = 0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
        if (*it > now) {
            continue;
        }
        if (*it <= now - window) {
            break;
        }
        ++n;
    }
    return n;
}

void ContactLog::trim(Step now, std::int64_t keep) {
    while (!steps_.empty() && steps_.front() <= now - keep) {
        steps_.pop_front();
    }
}

nlohmann::json ContactLog::to_json() const { return std::vector<Step>(steps_.begin(), steps_.end()); }

ContactLog ContactLog::from_json(const nlohmann::json& j) {
    ContactLog log;
    for (Step s : j.get<std::vector<Step>>()) {
        log.steps_.push_back(s);
    }
    return log;
}

int communication_count(const ContactLog& log, Step now, std::int64_t window) { return log.count(now, window); }

}  // namespace patrol
