#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>

namespace patrol {

/// Integer identifier tagged by what it names, so node, agent and circle ids
/// cannot be mixed up at call sites.
template <typename Tag>
struct StrongId {
    int value = 0;

    constexpr StrongId() = default;
    constexpr explicit StrongId(int v) : value(v) {}

    constexpr auto operator<=>(const StrongId&) const = default;

    constexpr std::size_t index() const { return static_cast<std::size_t>(value); }
};

using NodeId = StrongId<struct NodeTag>;
using AgentId = StrongId<struct AgentTag>;
using CircleId = StrongId<struct CircleTag>;

template <typename Tag>
std::string to_string(StrongId<Tag> id) {
    return std::to_string(id.value);
}

}  // namespace patrol

template <typename Tag>
struct std::hash<patrol::StrongId<Tag>> {
    std::size_t operator()(patrol::StrongId<Tag> id) const noexcept { return std::hash<int>{}(id.value); }
};
