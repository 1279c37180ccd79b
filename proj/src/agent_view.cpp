#include "patrol/agent_view.hpp"

#include <algorithm>

#include "patrol/comms.hpp"
#include "patrol/error.hpp"

namespace patrol {

AgentView::AgentView(AgentId self, std::shared_ptr<const PatrolWorld> world, Windows windows, PeerModel model)
    : id_(self),
      circle_(world->circle_of(self)),
      world_(std::move(world)),
      windows_(windows),
      model_(model),
      history_(static_cast<std::size_t>(std::max(windows.transition, windows.frequency))),
      own_counts_(node_slots(), 0),
      own_matrix_(TransitionMatrix::neighbor_uniform(world_->circle(circle_))) {
    if (windows_.frequency < 1 || windows_.transition < windows_.frequency) {
        throw Error(ErrorCode::InvalidConfig, "windows must satisfy w >= w_f >= 1");
    }
    for (const auto& a : world_->agents()) {
        if (a.agent == id_) {
            continue;
        }
        const Circle& c = world_->circle(a.circle);
        peers_.push_back({a.agent, a.circle, PeerBelief::uniform(a.agent, c),
                          BeliefWindow(static_cast<std::size_t>(windows_.frequency), node_slots()), nullptr, {}});
    }
}

std::optional<Step> AgentView::last_step() const {
    if (history_.empty()) {
        return std::nullopt;
    }
    return history_.last_step();
}

void AgentView::record_own(Step step, NodeId node) {
    if (!world_->circle(circle_).contains(node)) {
        throw Error(ErrorCode::NodeNotOnCircle, "agent " + to_string(id_) + " recorded off-circle node " +
                                                    to_string(node));
    }
    history_.record_visit(step, node);
    ++own_counts_[node.index()];
    if (const Visit* old = history_.at_step(step - windows_.frequency)) {
        --own_counts_[old->node.index()];
    }
}

void AgentView::advance_peers(Step step) {
    for (auto& p : peers_) {
        // the first entry is the prior itself
        if (p.window.size() > 0) {
            if (model_ == PeerModel::Stationary && !p.stationary.empty()) {
                p.belief.distribution = p.stationary;
            } else {
                p.belief = propagate_belief(p.belief, p.belief.matrix);
            }
        }
        p.window.push(step, to_node_slots(p.belief.matrix, p.belief.distribution, node_slots()));
        // bound floating drift of the running sum
        if (step % windows_.frequency == 0) {
            p.window.resum();
        }
    }
}

double AgentView::own_frequency(NodeId node, Step now) const {
    if (history_.empty() || node.index() >= own_counts_.size()) {
        return 0.0;
    }
    if (now != history_.last_step()) {
        return windowed_frequency(history_, node, now, windows_.frequency);
    }
    return 100.0 * static_cast<double>(own_counts_[node.index()]) /
           static_cast<double>(window_denominator(now, windows_.frequency));
}

double AgentView::estimated_frequency(NodeId node, Step now) const {
    if (history_.empty() || now != history_.last_step()) {
        return patrol::estimated_frequency(*this, node, now);
    }
    double visits = node.index() < own_counts_.size() ? static_cast<double>(own_counts_[node.index()]) : 0.0;
    for (const auto& p : peers_) {
        visits += p.window.mass(node);
    }
    return 100.0 * visits / static_cast<double>(window_denominator(now, windows_.frequency));
}

double estimated_frequency(const AgentView& view, NodeId node, Step now) {
    const std::int64_t w = view.windows().frequency;
    double visits = 0.0;
    for (const auto& v : view.history().entries()) {
        if (v.step > now - w && v.step <= now && v.node == node) {
            visits += 1.0;
        }
    }
    for (const auto& p : view.peers()) {
        visits += expected_visit_mass(p.window, node, now, w);
    }
    return 100.0 * visits / static_cast<double>(window_denominator(now, w));
}

const AgentView::PeerState& AgentView::peer(AgentId peer) const {
    for (const auto& p : peers_) {
        if (p.peer == peer) {
            return p;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "agent " + to_string(id_) + " has no peer " + to_string(peer));
}

AgentView::PeerState& AgentView::peer_mut(AgentId peer) {
    return const_cast<PeerState&>(static_cast<const AgentView&>(*this).peer(peer));
}

void AgentView::receive(const ExchangePayload& payload, Step now) {
    PeerState& p = peer_mut(payload.sender);
    for (const Visit& v : payload.recent) {
        p.window.overwrite(v.step, v.node);
    }
    p.window.resum();
    p.belief = PeerBelief::point_mass(payload.sender, payload.matrix, payload.position, now);
    p.received = std::make_shared<const ExchangePayload>(payload);
    p.stationary = payload.policy;
}

ExchangePayload AgentView::payload() const {
    if (history_.empty()) {
        throw Error(ErrorCode::InvalidConfig, "agent " + to_string(id_) + " has no position yet");
    }
    // before the first estimate the matrix is neighbour-uniform, whose stationary policy is uniform
    std::vector<double> policy = own_policy_ ? own_policy_->probability
                                             : std::vector<double>(own_matrix_.size(), 1.0 / static_cast<double>(own_matrix_.size()));
    return {id_, history_.back().node, history_.recent(static_cast<std::size_t>(windows_.frequency)), own_matrix_,
            std::move(policy)};
}

void AgentView::refresh_matrix() {
    own_matrix_ = estimate_transitions(history_, world_->circle(circle_), static_cast<std::size_t>(windows_.transition));
    own_policy_ = stationary_policy(own_matrix_);
}

void AgentView::rebind_world(std::shared_ptr<const PatrolWorld> world) {
    world_ = std::move(world);
    const std::size_t slots = node_slots();
    if (own_counts_.size() < slots) {
        own_counts_.resize(slots, 0);
    }
    const Circle& own = world_->circle(circle_);
    if (own_matrix_.nodes() != own.nodes) {
        own_matrix_ = own_matrix_.remapped(own);
        own_policy_ = stationary_policy(own_matrix_);
    }
    for (auto& p : peers_) {
        p.window.resize_nodes(std::max(slots, p.window.node_slots()));
        const Circle& c = world_->circle(p.circle);
        if (p.belief.matrix.nodes() != c.nodes) {
            TransitionMatrix remapped = p.belief.matrix.remapped(c);
            std::vector<double> dist(c.size(), 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                dist[i] = p.belief.mass_at(c.nodes[i]);
            }
            p.belief.matrix = std::move(remapped);
            p.belief.distribution = std::move(dist);
            if (!p.stationary.empty()) {
                p.stationary = stationary_policy(p.belief.matrix).probability;
            }
        }
    }
}

nlohmann::json AgentView::to_json() const {
    nlohmann::json peers = nlohmann::json::array();
    for (const auto& p : peers_) {
        peers.push_back({{"peer", p.peer.value},
                         {"circle", p.circle.value},
                         {"belief", p.belief.to_json()},
                         {"window", p.window.to_json()},
                         {"received", p.received ? p.received->to_json() : nlohmann::json()},
                         {"stationary", p.stationary}});
    }
    nlohmann::json j = {{"id", id_.value},
                        {"circle", circle_.value},
                        {"windows", {{"transition", windows_.transition}, {"frequency", windows_.frequency}}},
                        {"peer_model", peer_model_name(model_)},
                        {"history", history_.to_json()},
                        {"own_counts", own_counts_},
                        {"peers", peers},
                        {"own_matrix", own_matrix_.to_json()},
                        {"q", q_.to_json()}};
    if (own_policy_) {
        std::vector<int> ids;
        for (NodeId n : own_policy_->nodes) {
            ids.push_back(n.value);
        }
        j["own_policy"] = {{"nodes", ids}, {"probability", own_policy_->probability}};
    }
    return j;
}

AgentView AgentView::from_json(const nlohmann::json& j, std::shared_ptr<const PatrolWorld> world) {
    Windows windows{j.at("windows").at("transition").get<std::int64_t>(),
                    j.at("windows").at("frequency").get<std::int64_t>()};
    AgentView view(AgentId{j.at("id").get<int>()}, std::move(world), windows,
                   peer_model_from_name(j.at("peer_model").get<std::string>()));
    view.history_ = VisitationHistory::from_json(j.at("history"));
    view.own_counts_ = j.at("own_counts").get<std::vector<int>>();
    view.peers_.clear();
    for (const auto& p : j.at("peers")) {
        PeerState state{AgentId{p.at("peer").get<int>()}, CircleId{p.at("circle").get<int>()},
                        PeerBelief::from_json(p.at("belief")), BeliefWindow::from_json(p.at("window")), nullptr,
                        p.at("stationary").get<std::vector<double>>()};
        if (!p.at("received").is_null()) {
            state.received = std::make_shared<const ExchangePayload>(ExchangePayload::from_json(p.at("received")));
        }
        view.peers_.push_back(std::move(state));
    }
    view.own_matrix_ = TransitionMatrix::from_json(j.at("own_matrix"));
    view.q_ = QTable::from_json(j.at("q"));
    if (j.contains("own_policy")) {
        StationaryPolicy pol;
        for (int id : j.at("own_policy").at("nodes").get<std::vector<int>>()) {
            pol.nodes.push_back(NodeId{id});
        }
        pol.probability = j.at("own_policy").at("probability").get<std::vector<double>>();
        view.own_policy_ = std::move(pol);
    }
    return view;
}

}  // namespace patrol
