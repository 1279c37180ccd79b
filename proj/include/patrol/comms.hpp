#pragma once

#include <deque>
#include <map>
#include <vector>

#include <json.hpp>

#include "patrol/agent_view.hpp"
#include "patrol/history.hpp"
#include "patrol/policy.hpp"
#include "patrol/world.hpp"

namespace patrol {

enum class ContactKind { SameNode, AdjacentNodes };

/// One connected component (two or more agents) of a step's proximity graph.
struct ContactEvent {
    Step step = 0;
    std::vector<AgentId> participants;  // ascending
    ContactKind kind = ContactKind::SameNode;

    bool operator==(const ContactEvent&) const = default;
};

struct ExchangePayload {
    AgentId sender;
    NodeId position;
    std::vector<Visit> recent;  // last w_f positions, current one included
    TransitionMatrix matrix;
    std::vector<double> policy;  // stationary policy, in matrix node order

    bool operator==(const ExchangePayload&) const = default;

    nlohmann::json to_json() const;
    static ExchangePayload from_json(const nlohmann::json& j);
};

/// Agents are joined when they share a node or stand on adjacent nodes of any
/// circle; returns one event per component with at least two agents.
std::vector<ContactEvent> detect_contacts(const PatrolWorld& world, const std::map<AgentId, NodeId>& positions,
                                          Step step = 0);

/// All-to-all exchange inside the event. `views` is indexed by agent order
/// (agent id k at index k - 1).
void exchange(const ContactEvent& event, std::vector<AgentView>& views);

/// Steps at which at least one contact happened.
class ContactLog {
  public:
    void record(Step step, const std::vector<ContactEvent>& events);

    /// Steps in (now - window, now] with a contact.
    int count(Step now, std::int64_t window = 1000) const;

    /// Drops entries that can no longer fall inside a window of `keep` steps.
    void trim(Step now, std::int64_t keep);

    const std::deque<Step>& steps() const { return steps_; }

    nlohmann::json to_json() const;
    static ContactLog from_json(const nlohmann::json& j);

  private:
    std::deque<Step> steps_;
};

int communication_count(const ContactLog& log, Step now, std::int64_t window = 1000);

}  // namespace patrol
