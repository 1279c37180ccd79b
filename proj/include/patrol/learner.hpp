#pragma once

#include <array>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "patrol/history.hpp"
#include "patrol/ids.hpp"
#include "patrol/rng.hpp"
#include "patrol/world.hpp"

namespace patrol {

class AgentView;

using Action = Direction;

enum class DeficitBin : std::uint8_t { B1 = 0, B2, B3, B4, B5 };

/// Thresholds on the deficit F - f_e (percent). B1 <= -outer < B2 <= -inner
/// < B3 < inner <= B4 < outer <= B5.
struct BinEdges {
    double inner = 1.0;
    double outer = 5.0;

    DeficitBin classify(double deficit) const;
};

/// How a visit is scored from the estimated frequency f_e and requirement F.
enum class RewardMode {
    Signed,           // f_e - F
    AbsolutePenalty,  // -|f_e - F|
    Deficit,          // F - f_e
};

std::string reward_mode_name(RewardMode mode);
RewardMode reward_mode_from_name(const std::string& name);

struct LearnerParams {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon0 = 1.0;
    double epsilon_min = 0.01;
    double epsilon_tau = 1e5;
    RewardMode reward = RewardMode::Deficit;
    BinEdges bins;

    /// Throws InvalidConfig.
    void validate() const;

    nlohmann::json to_json() const;
    static LearnerParams from_json(const nlohmann::json& j);
};

/// Binned deficits of the nodes at ring offsets -2, -1, 0, +1 from the agent.
class ObservedState {
  public:
    static constexpr std::size_t kCount = 625;

    ObservedState() = default;

    static ObservedState from_deficits(const std::array<double, 4>& deficits, const BinEdges& edges);
    /// Inverse of index(). Throws DimensionMismatch.
    static ObservedState from_index(std::size_t index);

    const std::array<DeficitBin, 4>& bins() const { return bins_; }
    std::size_t index() const;

    bool operator==(const ObservedState&) const = default;

  private:
    std::array<DeficitBin, 4> bins_{DeficitBin::B3, DeficitBin::B3, DeficitBin::B3, DeficitBin::B3};
};

/// Dense table over 625 states x 2 actions, zero-initialised.
class QTable {
  public:
    static constexpr std::size_t kEntries = ObservedState::kCount * 2;

    double value(const ObservedState& s, Action a) const { return q_[slot(s, a)]; }
    void set(const ObservedState& s, Action a, double v) { q_[slot(s, a)] = v; }
    double max_value(const ObservedState& s) const;

    const std::array<double, kEntries>& raw() const { return q_; }
    std::array<double, kEntries>& raw() { return q_; }

    bool operator==(const QTable&) const = default;

    nlohmann::json to_json() const;
    static QTable from_json(const nlohmann::json& j);

  private:
    static std::size_t slot(const ObservedState& s, Action a) {
        return s.index() * 2 + static_cast<std::size_t>(a);
    }

    std::array<double, kEntries> q_{};
};

/// Observed state at `position` built from the agent's frequency estimates at
/// `now`. Throws NodeNotOnCircle.
ObservedState discretize_state(const AgentView& view, NodeId position, Step now, const BinEdges& edges = {});

/// Epsilon-greedy with uniform tie breaking.
Action select_action(const QTable& q, const ObservedState& s, double epsilon, Rng& rng);

double compute_reward(const AgentView& view, NodeId node, Step now, RewardMode mode = RewardMode::Deficit);

/// Reward from an estimate and a requirement (percent).
double reward_value(double estimated, double required, RewardMode mode);

void q_update(QTable& q, const ObservedState& s, Action a, double reward, const ObservedState& s_next,
              const LearnerParams& params);

double epsilon_at(Step step, const LearnerParams& params);

}  // namespace patrol
