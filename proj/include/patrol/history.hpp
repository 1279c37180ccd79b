#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include <json.hpp>

#include "patrol/ids.hpp"

namespace patrol {

using Step = std::int64_t;

struct Visit {
    Step step = 0;
    NodeId node;

    bool operator==(const Visit&) const = default;
};

/// Bounded record of one agent's own positions, one entry per step.
class VisitationHistory {
  public:
    explicit VisitationHistory(std::size_t capacity = 1000);

    /// Throws NonMonotonicStep unless `step` directly follows the last entry.
    void record_visit(Step step, NodeId node);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return entries_.empty(); }
    Step last_step() const { return entries_.back().step; }
    const Visit& back() const { return entries_.back(); }
    const std::deque<Visit>& entries() const { return entries_; }

    /// Most recent `count` entries, oldest first.
    std::vector<Visit> recent(std::size_t count) const;

    /// Node occupied at `step`, if still held.
    const Visit* at_step(Step step) const;

    nlohmann::json to_json() const;
    static VisitationHistory from_json(const nlohmann::json& j);

  private:
    std::size_t capacity_;
    std::deque<Visit> entries_;
};

/// Number of steps in the frequency window ending at `now`: `window`, or the
/// steps elapsed since step 0 while fewer than `window` have passed.
inline std::int64_t window_denominator(Step now, std::int64_t window) {
    return now + 1 < window ? now + 1 : window;
}

/// 100 x (visits to `node` in steps (now - window, now]) / window, with the
/// warm-up denominator. Empty history gives 0.
double windowed_frequency(const VisitationHistory& h, NodeId node, Step now, std::int64_t window = 100);

}  // namespace patrol
