#include <doctest.h>

#include <algorithm>
#include <set>

#include "patrol/error.hpp"
#include "patrol/world.hpp"
#include "support.hpp"

using namespace patrol;

namespace {

ErrorCode code_of(const WorldConfig& cfg) {
    try {
        PatrolWorld::build(cfg);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

// neighbours straight from the ring lists, without the world's index
std::set<int> neighbours_from_config(const WorldConfig& cfg, int node) {
    std::set<int> out;
    for (const auto& ring : cfg.circles) {
        const std::size_t n = ring.size();
        for (std::size_t k = 0; k < n; ++k) {
            const int a = ring[k];
            const int b = ring[(k + 1) % n];
            if (a == node) {
                out.insert(b);
            }
            if (b == node) {
                out.insert(a);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("benchmark world has 9% everywhere") {
    auto w = testing::load_world("benchmark.json");
    CHECK(w->node_count() == 20);
    CHECK(w->circles().size() == 1);
    CHECK(w->agent_count() == 2);
    for (NodeId n : w->nodes()) {
        CHECK(w->required(n) == doctest::Approx(9.0).epsilon(1e-12));
    }
}

TEST_CASE("general world requirements follow the component list") {
    auto w = testing::load_world("general.json");
    CHECK(w->node_count() == 20);
    REQUIRE(w->circles().size() == 3);
    CHECK(w->circles()[0].size() == 11);
    CHECK(w->circles()[1].size() == 8);
    CHECK(w->circles()[2].size() == 8);
    CHECK(w->required(NodeId{2}) == doctest::Approx(13.0).epsilon(0.01));
    CHECK(w->required(NodeId{4}) == doctest::Approx(8.0).epsilon(0.01));
    CHECK(w->required(NodeId{14}) == doctest::Approx(19.0).epsilon(0.01));
    CHECK(w->capacity_sum() == doctest::Approx(90.01).epsilon(1e-9));
    for (NodeId n : w->nodes()) {
        const auto& req = w->requirement(n);
        if (req.component > 0) {
            CHECK(req.required == 3.0 * req.component);
        }
    }
}

TEST_CASE("zero requirement world is valid") {
    auto w = testing::ring_world(3, 1, 0.0);
    for (NodeId n : w->nodes()) {
        CHECK(w->required(n) == 0.0);
    }
}

TEST_CASE("capacity gate") {
    SUBCASE("exactly 100 is accepted") {
        CHECK(validate_capacity(PatrolWorld::build(testing::ring_config(20, 1, 5.0))) == doctest::Approx(100.0));
    }
    SUBCASE("102 is rejected with the sum") {
        try {
            PatrolWorld::build(testing::ring_config(20, 1, 5.1));
            FAIL("accepted an over-capacity world");
        } catch (const CapacityExceededError& e) {
            CHECK(e.code() == ErrorCode::CapacityExceeded);
            CHECK(e.sum_percent() == doctest::Approx(102.0));
        }
    }
    SUBCASE("violations are listed together") {
        auto cfg = testing::ring_config(20, 1, 5.1);
        cfg.circles.push_back({30, 31, 31});
        const auto found = find_violations(cfg);
        REQUIRE(found.size() >= 3);
        std::set<ErrorCode> codes;
        for (const auto& e : found) {
            codes.insert(e.code());
        }
        CHECK(codes.count(ErrorCode::DuplicateNodeInCircle));
        CHECK(codes.count(ErrorCode::UnassignedCircle));
        CHECK(codes.count(ErrorCode::CapacityExceeded));
        CHECK(find_violations(testing::ring_config(5, 1, 1.0)).empty());
    }
}

TEST_CASE("structural errors") {
    auto cfg = testing::ring_config(5, 1, 1.0);
    SUBCASE("duplicate node") {
        cfg.circles[0][2] = 1;
        CHECK(code_of(cfg) == ErrorCode::DuplicateNodeInCircle);
    }
    SUBCASE("short circle") {
        cfg.circles.push_back({7, 8});
        cfg.agents.push_back({AgentId{2}, CircleId{2}});
        CHECK(code_of(cfg) == ErrorCode::EmptyCircle);
    }
    SUBCASE("circle without agent") {
        cfg.circles.push_back({7, 8, 9});
        CHECK(code_of(cfg) == ErrorCode::UnassignedCircle);
    }
    SUBCASE("agent on missing circle") {
        cfg.agents.push_back({AgentId{2}, CircleId{4}});
        CHECK(code_of(cfg) == ErrorCode::UnknownCircle);
    }
    SUBCASE("component for a node on no circle") {
        cfg.component_percent[40] = 1.0;
        CHECK(code_of(cfg) == ErrorCode::UnknownNode);
    }
}

TEST_CASE("circle steps wrap and invert") {
    auto w = testing::ring_world(20, 1, 1.0);
    const CircleId c{1};
    CHECK(w->circle_step(c, NodeId{1}, Direction::Left) == NodeId{20});
    CHECK(w->circle_step(c, NodeId{20}, Direction::Right) == NodeId{1});
    CHECK(w->circle_step(c, w->circle_step(c, NodeId{7}, Direction::Right), Direction::Left) == NodeId{7});

    auto g = testing::load_world("general.json");
    for (const auto& circle : g->circles()) {
        for (NodeId n : circle.nodes) {
            CHECK(circle.step(circle.step(n, Direction::Left), Direction::Right) == n);
            CHECK(circle.step(circle.step(n, Direction::Right), Direction::Left) == n);
        }
    }
    CHECK_THROWS_AS(g->circle_step(CircleId{2}, NodeId{1}, Direction::Left), Error);
}

TEST_CASE("union neighbours match the ring edges") {
    const auto cfg = WorldConfig::load(testing::config_path("general.json"));
    const auto w = PatrolWorld::build(cfg);
    for (NodeId n : w.nodes()) {
        const auto got = w.union_neighbors(n);
        std::set<int> ids;
        for (NodeId m : got) {
            ids.insert(m.value);
        }
        CHECK(ids == neighbours_from_config(cfg, n.value));
        CHECK(std::is_sorted(got.begin(), got.end()));
        int containing = 0;
        for (const auto& c : w.circles()) {
            containing += c.contains(n) ? 1 : 0;
        }
        CHECK(got.size() <= static_cast<std::size_t>(2 * containing));
    }
    CHECK(w.union_neighbors(NodeId{11}).size() == 4);

    auto single = testing::ring_world(20, 1, 1.0);
    CHECK(single->union_neighbors(NodeId{5}) == std::vector<NodeId>{NodeId{4}, NodeId{6}});
    auto tiny = testing::ring_world(3, 1, 1.0);
    CHECK(tiny->union_neighbors(NodeId{2}) == std::vector<NodeId>{NodeId{1}, NodeId{3}});
}

TEST_CASE("mutations from the dynamic experiments") {
    auto g = testing::load_world("general.json");
    const double f4 = g->required(NodeId{4});
    const double f14 = g->required(NodeId{14});

    SUBCASE("swap") {
        const auto m = apply_mutation(*g, SwapRequirements{NodeId{4}, NodeId{14}});
        CHECK(m.required(NodeId{4}) == f14);
        CHECK(m.required(NodeId{14}) == f4);
        CHECK(m.required(NodeId{4}) == doctest::Approx(19.0).epsilon(0.01));
        CHECK(m.capacity_sum() == doctest::Approx(g->capacity_sum()).epsilon(1e-12));
    }
    SUBCASE("identity swap") {
        const auto m = apply_mutation(*g, SwapRequirements{NodeId{4}, NodeId{4}});
        CHECK(m.config_hash() == g->config_hash());
    }
    SUBCASE("remove node 2 and add node 21") {
        for (const auto& mut : load_mutations(testing::config_path("dynamic_addremove.json"))) {
            g = std::make_shared<const PatrolWorld>(apply_mutation(*g, mut));
        }
        CHECK(g->node_count() == 21);
        CHECK(g->required(NodeId{2}) == 0.0);
        CHECK(g->required(NodeId{21}) == doctest::Approx(14.0));
        const Circle& c3 = g->circle(CircleId{3});
        CHECK(c3.step(NodeId{19}, Direction::Right) == NodeId{21});
        CHECK(c3.step(NodeId{21}, Direction::Right) == NodeId{20});
        CHECK(g->circle(CircleId{1}).contains(NodeId{2}));
        // a fresh build of the mutated config agrees with the mutated world
        const auto rebuilt = PatrolWorld::build(g->to_config());
        CHECK(rebuilt.config_hash() == g->config_hash());
        CHECK(validate_capacity(rebuilt) == doctest::Approx(validate_capacity(*g)).epsilon(1e-12));
    }
    SUBCASE("bad insertions") {
        CHECK_THROWS_AS(apply_mutation(*g, InsertNode{CircleId{3}, NodeId{19}, NodeId{17}, NodeId{21}, 1.0}), Error);
        CHECK_THROWS_AS(apply_mutation(*g, InsertNode{CircleId{3}, NodeId{19}, NodeId{20}, NodeId{5}, 1.0}), Error);
        CHECK_THROWS_AS(apply_mutation(*g, SwapRequirements{NodeId{4}, NodeId{99}}), Error);
    }
    SUBCASE("over-capacity set is refused") {
        try {
            apply_mutation(*g, SetRequirement{NodeId{3}, 60.0});
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CapacityExceeded);
        }
    }
}

TEST_CASE("world config round trip") {
    const auto cfg = WorldConfig::load(testing::config_path("general.json"));
    const auto again = WorldConfig::from_json(cfg.to_json());
    CHECK(PatrolWorld::build(again).config_hash() == PatrolWorld::build(cfg).config_hash());
    CHECK(cfg.name == "general");
}
