#include "patrol/policy.hpp"

#include <algorithm>
#include <cmath>

#include "patrol/error.hpp"

namespace patrol {

TransitionMatrix::TransitionMatrix(CircleId circle, std::vector<NodeId> nodes, std::vector<double> entries)
    : circle_(circle), nodes_(std::move(nodes)), entries_(std::move(entries)) {
    if (entries_.size() != nodes_.size() * nodes_.size()) {
        throw Error(ErrorCode::DimensionMismatch, "transition matrix entries do not match node count");
    }
}

TransitionMatrix TransitionMatrix::neighbor_uniform(const Circle& circle) {
    const std::size_t m = circle.size();
    TransitionMatrix p(circle.id, circle.nodes, std::vector<double>(m * m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        p.at(i, (i + 1) % m) += 0.5;
        p.at(i, (i + m - 1) % m) += 0.5;
    }
    return p;
}

std::optional<std::size_t> TransitionMatrix::index_of(NodeId node) const {
    auto it = std::find(nodes_.begin(), nodes_.end(), node);
    if (it == nodes_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - nodes_.begin());
}

double TransitionMatrix::probability(NodeId from, NodeId to) const {
    const auto i = index_of(from);
    const auto j = index_of(to);
    return i && j ? at(*i, *j) : 0.0;
}

double TransitionMatrix::max_row_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < size(); ++j) {
            s += at(i, j);
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

TransitionMatrix TransitionMatrix::remapped(const Circle& circle) const {
    TransitionMatrix out = neighbor_uniform(circle);
    const std::size_t m = circle.size();
    for (std::size_t i = 0; i < m; ++i) {
        const NodeId node = circle.nodes[i];
        const auto old_i = index_of(node);
        if (!old_i) {
            continue;
        }
        std::fill(out.entries_.begin() + static_cast<std::ptrdiff_t>(i * m),
                  out.entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * m), 0.0);
        const std::size_t n_old = size();
        for (Direction d : {Direction::Left, Direction::Right}) {
            const std::size_t old_nb = d == Direction::Right ? (*old_i + 1) % n_old : (*old_i + n_old - 1) % n_old;
            const std::size_t new_nb = d == Direction::Right ? (i + 1) % m : (i + m - 1) % m;
            const auto carried = out.index_of(nodes_[old_nb]);
            // a neighbour that is still adjacent keeps its mass
            if (carried && (*carried == (i + 1) % m || *carried == (i + m - 1) % m)) {
                out.at(i, *carried) = at(*old_i, old_nb);
            } else {
                out.at(i, new_nb) += at(*old_i, old_nb);
            }
        }
        out.at(i, i) += at(*old_i, *old_i);
    }
    return out;
}

nlohmann::json TransitionMatrix::to_json() const {
    std::vector<int> ids;
    for (NodeId n : nodes_) {
        ids.push_back(n.value);
    }
    return {{"circle", circle_.value}, {"nodes", ids}, {"entries", entries_}};
}

TransitionMatrix TransitionMatrix::from_json(const nlohmann::json& j) {
    std::vector<NodeId> nodes;
    for (int id : j.at("nodes").get<std::vector<int>>()) {
        nodes.push_back(NodeId{id});
    }
    return TransitionMatrix(CircleId{j.at("circle").get<int>()}, std::move(nodes),
                            j.at("entries").get<std::vector<double>>());
}

TransitionMatrix estimate_transitions(const VisitationHistory& h, const Circle& circle, std::size_t window) {
    TransitionMatrix fallback = TransitionMatrix::neighbor_uniform(circle);
    if (h.size() < 2 || window < 2) {
        return fallback;
    }
    const std::size_t m = circle.size();
    std::vector<double> counts(m * m, 0.0);
    std::vector<double> leaving(m, 0.0);

    const auto visits = h.recent(window);
    for (std::size_t k = 0; k + 1 < visits.size(); ++k) {
        const auto from = circle.position_of(visits[k].node);
        const auto to = circle.position_of(visits[k + 1].node);
        if (!from || !to) {
            continue;
        }
        counts[*from * m + *to] += 1.0;
        leaving[*from] += 1.0;
    }

    TransitionMatrix p = fallback;
    for (std::size_t i = 0; i < m; ++i) {
        if (leaving[i] == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            p.at(i, j) = counts[i * m + j] / leaving[i];
        }
    }
    return p;
}

std::vector<double> damped_step(const TransitionMatrix& p, const std::vector<double>& b, double damping) {
    const std::size_t m = p.size();
    if (b.size() != m) {
        throw Error(ErrorCode::DimensionMismatch, "distribution size does not match matrix");
    }
    double total = 0.0;
    for (double x : b) {
        total += x;
    }
    std::vector<double> next(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (b[i] == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            next[j] += b[i] * p.at(i, j);
        }
    }
    const double teleport = damping * total / static_cast<double>(m);
    for (double& x : next) {
        x = (1.0 - damping) * x + teleport;
    }
    return next;
}

StationaryPolicy stationary_policy(const TransitionMatrix& p, double damping, double tol, int max_iter) {
    const std::size_t m = p.size();
    if (m == 0) {
        throw Error(ErrorCode::DimensionMismatch, "empty transition matrix");
    }
    std::vector<double> b(m, 1.0 / static_cast<double>(m));
    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<double> next = damped_step(p, b, damping);
        double diff = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            diff = std::max(diff, std::abs(next[i] - b[i]));
        }
        if (diff < tol) {
            // one more step so the returned vector itself satisfies the residual bound
            std::vector<double> last = damped_step(p, next, damping);
            double total = 0.0;
            for (double x : last) {
                total += x;
            }
            for (double& x : last) {
                x /= total;
            }
            return {p.nodes(), std::move(last)};
        }
        b = std::move(next);
    }
    throw Error(ErrorCode::NoConvergence, "power iteration did not converge in " + std::to_string(max_iter) +
                                              " iterations");
}

PeerBelief PeerBelief::uniform(AgentId peer, const Circle& circle) {
    PeerBelief b;
    b.peer = peer;
    b.matrix = TransitionMatrix::neighbor_uniform(circle);
    b.distribution.assign(circle.size(), 1.0 / static_cast<double>(circle.size()));
    return b;
}

PeerBelief PeerBelief::point_mass(AgentId peer, const TransitionMatrix& matrix, NodeId at, Step step) {
    PeerBelief b;
    b.peer = peer;
    b.matrix = matrix;
    b.last_sync = step;
    b.distribution.assign(matrix.size(), 0.0);
    const auto i = matrix.index_of(at);
    if (!i) {
        throw Error(ErrorCode::NodeNotOnCircle, "peer position " + to_string(at) + " is off its circle");
    }
    b.distribution[*i] = 1.0;
    return b;
}

double PeerBelief::mass_at(NodeId node) const {
    const auto i = matrix.index_of(node);
    return i ? distribution[*i] : 0.0;
}

nlohmann::json PeerBelief::to_json() const {
    return {{"peer", peer.value}, {"distribution", distribution}, {"last_sync", last_sync}, {"matrix", matrix.to_json()}};
}

PeerBelief PeerBelief::from_json(const nlohmann::json& j) {
    PeerBelief b;
    b.peer = AgentId{j.at("peer").get<int>()};
    b.distribution = j.at("distribution").get<std::vector<double>>();
    b.last_sync = j.at("last_sync").get<Step>();
    b.matrix = TransitionMatrix::from_json(j.at("matrix"));
    return b;
}

std::string peer_model_name(PeerModel model) {
    return model == PeerModel::Stationary ? "stationary" : "transition";
}

PeerModel peer_model_from_name(const std::string& name) {
    if (name == "stationary") {
        return PeerModel::Stationary;
    }
    if (name == "transition") {
        return PeerModel::Transition;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown peer model '" + name + "' (stationary, transition)");
}

PeerBelief propagate_belief(const PeerBelief& belief, const TransitionMatrix& p) {
    const std::size_t m = p.size();
    if (belief.distribution.size() != m) {
        throw Error(ErrorCode::DimensionMismatch, "belief over " + std::to_string(belief.distribution.size()) +
                                                      " nodes, matrix over " + std::to_string(m));
    }
    PeerBelief out = belief;
    std::fill(out.distribution.begin(), out.distribution.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double b = belief.distribution[i];
        if (b == 0.0) {
            continue;
        }
        for (std::size_t j = 0; j < m; ++j) {
            out.distribution[j] += b * p.at(i, j);
        }
    }
    return out;
}

BeliefWindow::BeliefWindow(std::size_t capacity, std::size_t node_slots)
    : capacity_(capacity),
      node_slots_(node_slots),
      steps_(capacity, 0),
      slots_(capacity, std::vector<double>(node_slots, 0.0)),
      sum_(node_slots, 0.0) {
    if (capacity_ == 0) {
        throw Error(ErrorCode::InvalidConfig, "belief window capacity must be positive");
    }
}

std::size_t BeliefWindow::slot_of(std::size_t age) const { return (head_ + age) % capacity_; }

std::optional<Step> BeliefWindow::last_step() const {
    if (count_ == 0) {
        return std::nullopt;
    }
    return steps_[slot_of(count_ - 1)];
}

void BeliefWindow::push(Step step, const std::vector<double>& mass) {
    if (mass.size() != node_slots_) {
        throw Error(ErrorCode::DimensionMismatch, "belief mass vector has wrong size");
    }
    if (count_ > 0 && step != steps_[slot_of(count_ - 1)] + 1) {
        throw Error(ErrorCode::NonMonotonicStep, "belief for step " + std::to_string(step) + " out of order");
    }
    std::size_t slot;
    if (count_ == capacity_) {
        slot = head_;
        const auto& old = slots_[slot];
        for (std::size_t k = 0; k < node_slots_; ++k) {
            sum_[k] -= old[k];
        }
        head_ = (head_ + 1) % capacity_;
    } else {
        slot = slot_of(count_);
        ++count_;
    }
    steps_[slot] = step;
    slots_[slot] = mass;
    for (std::size_t k = 0; k < node_slots_; ++k) {
        sum_[k] += mass[k];
    }
}

bool BeliefWindow::overwrite(Step step, NodeId node) {
    if (count_ == 0) {
        return false;
    }
    const Step first = steps_[head_];
    if (step < first || step > first + static_cast<Step>(count_) - 1) {
        return false;
    }
    auto& slot = slots_[slot_of(static_cast<std::size_t>(step - first))];
    std::fill(slot.begin(), slot.end(), 0.0);
    slot.at(node.index()) = 1.0;
    return true;
}

void BeliefWindow::resum() {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    for (std::size_t age = 0; age < count_; ++age) {
        const auto& slot = slots_[slot_of(age)];
        for (std::size_t k = 0; k < node_slots_; ++k) {
            sum_[k] += slot[k];
        }
    }
}

std::vector<std::pair<Step, const std::vector<double>*>> BeliefWindow::slots() const {
    std::vector<std::pair<Step, const std::vector<double>*>> out;
    for (std::size_t age = 0; age < count_; ++age) {
        out.emplace_back(steps_[slot_of(age)], &slots_[slot_of(age)]);
    }
    return out;
}

void BeliefWindow::resize_nodes(std::size_t node_slots) {
    if (node_slots < node_slots_) {
        throw Error(ErrorCode::DimensionMismatch, "belief window cannot shrink");
    }
    node_slots_ = node_slots;
    for (auto& s : slots_) {
        s.resize(node_slots, 0.0);
    }
    sum_.resize(node_slots, 0.0);
}

nlohmann::json BeliefWindow::to_json() const {
    nlohmann::json slots = nlohmann::json::array();
    std::vector<Step> steps;
    for (std::size_t age = 0; age < count_; ++age) {
        slots.push_back(slots_[slot_of(age)]);
        steps.push_back(steps_[slot_of(age)]);
    }
    return {{"capacity", capacity_}, {"node_slots", node_slots_}, {"steps", steps}, {"slots", slots}, {"sum", sum_}};
}

BeliefWindow BeliefWindow::from_json(const nlohmann::json& j) {
    BeliefWindow w(j.at("capacity").get<std::size_t>(), j.at("node_slots").get<std::size_t>());
    const auto steps = j.at("steps").get<std::vector<Step>>();
    const auto& slots = j.at("slots");
    for (std::size_t k = 0; k < steps.size(); ++k) {
        w.steps_[k] = steps[k];
        w.slots_[k] = slots.at(k).get<std::vector<double>>();
    }
    w.count_ = steps.size();
    w.head_ = 0;
    w.sum_ = j.at("sum").get<std::vector<double>>();
    return w;
}

double expected_visit_mass(const BeliefWindow& beliefs, NodeId node, Step now, std::int64_t window) {
    double total = 0.0;
    for (const auto& [step, mass] : beliefs.slots()) {
        if (step > now - window && step <= now && node.index() < mass->size()) {
            total += (*mass)[node.index()];
        }
    }
    return total;
}

std::vector<double> to_node_slots(const TransitionMatrix& m, const std::vector<double>& distribution,
                                  std::size_t node_slots) {
    std::vector<double> out(node_slots, 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        out.at(m.nodes()[i].index()) = distribution[i];
    }
    return out;
}

}  // namespace patrol
