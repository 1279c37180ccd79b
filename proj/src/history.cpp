#include "patrol/history.hpp"

#include "patrol/error.hpp"

namespace patrol {

VisitationHistory::VisitationHistory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) {
        throw Error(ErrorCode::InvalidConfig, "history capacity must be positive");
    }
}

void VisitationHistory::record_visit(Step step, NodeId node) {
    if (!entries_.empty() && step != entries_.back().step + 1) {
        throw Error(ErrorCode::NonMonotonicStep, "step " + std::to_string(step) + " recorded after step " +
                                                     std::to_string(entries_.back().step));
    }
    entries_.push_back({step, node});
    if (entries_.size() > capacity_) {
        entries_.pop_front();
    }
}

std::vector<Visit> VisitationHistory::recent(std::size_t count) const {
    const std::size_t n = count < entries_.size() ? count : entries_.size();
    return {entries_.end() - static_cast<std::ptrdiff_t>(n), entries_.end()};
}

const Visit* VisitationHistory::at_step(Step step) const {
    if (entries_.empty()) {
        return nullptr;
    }
    const Step first = entries_.front().step;
    if (step < first || step > entries_.back().step) {
        return nullptr;
    }
    return &entries_[static_cast<std::size_t>(step - first)];
}

nlohmann::json VisitationHistory::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& v : entries_) {
        nodes.push_back(v.node.value);
    }
    return {{"capacity", capacity_}, {"first_step", entries_.empty() ? 0 : entries_.front().step}, {"nodes", nodes}};
}

VisitationHistory VisitationHistory::from_json(const nlohmann::json& j) {
    VisitationHistory h(j.at("capacity").get<std::size_t>());
    Step step = j.at("first_step").get<Step>();
    for (const auto& n : j.at("nodes")) {
        h.entries_.push_back({step++, NodeId{n.get<int>()}});
    }
    return h;
}

double windowed_frequency(const VisitationHistory& h, NodeId node, Step now, std::int64_t window) {
    if (window < 1) {
        throw Error(ErrorCode::InvalidConfig, "frequency window must be at least 1");
    }
    if (h.empty()) {
        return 0.0;
    }
    std::int64_t count = 0;
    for (auto it = h.entries().rbegin(); it != h.entries().rend(); ++it) {
        if (it->step > now) {
            continue;
        }
        if (it->step <= now - window) {
            break;
        }
        if (it->node == node) {
            ++count;
        }
    }
    return 100.0 * static_cast<double>(count) / static_cast<double>(window_denominator(now, window));
}

}  // namespace patrol
