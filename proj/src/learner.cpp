#include "patrol/learner.hpp"

#include <algorithm>
#include <cmath>

#include "patrol/agent_view.hpp"
#include "patrol/error.hpp"

namespace patrol {

DeficitBin BinEdges::classify(double deficit) const {
    if (deficit <= -outer) {
        return DeficitBin::B1;
    }
    if (deficit <= -inner) {
        return DeficitBin::B2;
    }
    if (deficit < inner) {
        return DeficitBin::B3;
    }
    if (deficit < outer) {
        return DeficitBin::B4;
    }
    return DeficitBin::B5;
}

std::string reward_mode_name(RewardMode mode) {
    switch (mode) {
        case RewardMode::Signed: return "signed";
        case RewardMode::AbsolutePenalty: return "absolute";
        case RewardMode::Deficit: return "deficit";
    }
    return "deficit";
}

RewardMode reward_mode_from_name(const std::string& name) {
    if (name == "signed") {
        return RewardMode::Signed;
    }
    if (name == "absolute") {
        return RewardMode::AbsolutePenalty;
    }
    if (name == "deficit") {
        return RewardMode::Deficit;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown reward mode '" + name + "' (signed, absolute, deficit)");
}

void LearnerParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1]");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "gamma must lie in [0, 1)");
    }
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon0 && epsilon0 <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "epsilon bounds must satisfy 0 <= epsilon_min <= epsilon0 <= 1");
    }
    if (!(epsilon_tau > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "epsilon_tau must be positive");
    }
    if (!(bins.inner > 0.0 && bins.outer > bins.inner)) {
        throw Error(ErrorCode::InvalidConfig, "bin edges must satisfy 0 < inner < outer");
    }
}

nlohmann::json LearnerParams::to_json() const {
    return {{"alpha", alpha},
            {"gamma", gamma},
            {"epsilon0", epsilon0},
            {"epsilon_min", epsilon_min},
            {"epsilon_tau", epsilon_tau},
            {"reward", reward_mode_name(reward)},
            {"bin_inner", bins.inner},
            {"bin_outer", bins.outer}};
}

LearnerParams LearnerParams::from_json(const nlohmann::json& j) {
    LearnerParams p;
    p.alpha = j.value("alpha", p.alpha);
    p.gamma = j.value("gamma", p.gamma);
    p.epsilon0 = j.value("epsilon0", p.epsilon0);
    p.epsilon_min = j.value("epsilon_min", p.epsilon_min);
    p.epsilon_tau = j.value("epsilon_tau", p.epsilon_tau);
    p.reward = reward_mode_from_name(j.value("reward", reward_mode_name(p.reward)));
    p.bins.inner = j.value("bin_inner", p.bins.inner);
    p.bins.outer = j.value("bin_outer", p.bins.outer);
    p.validate();
    return p;
}

ObservedState ObservedState::from_deficits(const std::array<double, 4>& deficits, const BinEdges& edges) {
    ObservedState s;
    for (std::size_t k = 0; k < 4; ++k) {
        s.bins_[k] = edges.classify(deficits[k]);
    }
    return s;
}

ObservedState ObservedState::from_index(std::size_t index) {
    if (index >= kCount) {
        throw Error(ErrorCode::DimensionMismatch, "state index " + std::to_string(index) + " out of range");
    }
    ObservedState s;
    for (std::size_t k = 4; k-- > 0;) {
        s.bins_[k] = static_cast<DeficitBin>(index % 5);
        index /= 5;
    }
    return s;
}

std::size_t ObservedState::index() const {
    std::size_t idx = 0;
    for (DeficitBin b : bins_) {
        idx = idx * 5 + static_cast<std::size_t>(b);
    }
    return idx;
}

double QTable::max_value(const ObservedState& s) const {
    return std::max(value(s, Action::Left), value(s, Action::Right));
}

nlohmann::json QTable::to_json() const { return std::vector<double>(q_.begin(), q_.end()); }

QTable QTable::from_json(const nlohmann::json& j) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != kEntries) {
        throw Error(ErrorCode::DimensionMismatch, "Q-table has " + std::to_string(values.size()) + " entries");
    }
    QTable q;
    std::copy(values.begin(), values.end(), q.q_.begin());
    return q;
}

ObservedState discretize_state(const AgentView& view, NodeId position, Step now, const BinEdges& edges) {
    const Circle& circle = view.world().circle(view.circle());
    const NodeId left = circle.step(position, Direction::Left);  // throws when off circle
    const NodeId left2 = circle.step(left, Direction::Left);
    const NodeId right = circle.step(position, Direction::Right);
    std::array<double, 4> deficits{};
    const std::array<NodeId, 4> nodes{left2, left, position, right};
    for (std::size_t k = 0; k < 4; ++k) {
        deficits[k] = view.world().required(nodes[k]) - view.estimated_frequency(nodes[k], now);
    }
    return ObservedState::from_deficits(deficits, edges);
}

Action select_action(const QTable& q, const ObservedState& s, double epsilon, Rng& rng) {
    if (rng.uniform() < epsilon) {
        return rng.coin() ? Action::Right : Action::Left;
    }
    const double left = q.value(s, Action::Left);
    const double right = q.value(s, Action::Right);
    if (left == right) {
        return rng.coin() ? Action::Right : Action::Left;
    }
    return left > right ? Action::Left : Action::Right;
}

double reward_value(double estimated, double required, RewardMode mode) {
    switch (mode) {
        case RewardMode::Signed: return estimated - required;
        case RewardMode::AbsolutePenalty: return -std::abs(estimated - required);
        case RewardMode::Deficit: return required - estimated;
    }
    return 0.0;
}

double compute_reward(const AgentView& view, NodeId node, Step now, RewardMode mode) {
    return reward_value(view.estimated_frequency(node, now), view.world().required(node), mode);
}

void q_update(QTable& q, const ObservedState& s, Action a, double reward, const ObservedState& s_next,
              const LearnerParams& params) {
    const double current = q.value(s, a);
    const double target = reward + params.gamma * q.max_value(s_next);
    q.set(s, a, current + params.alpha * (target - current));
}

double epsilon_at(Step step, const LearnerParams& params) {
    return std::max(params.epsilon_min, params.epsilon0 * std::exp(-static_cast<double>(step) / params.epsilon_tau));
}

}  // namespace patrol
