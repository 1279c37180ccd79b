#include <doctest.h>

#include "patrol/agent_view.hpp"
#include "patrol/comms.hpp"
#include "patrol/error.hpp"
#include "patrol/history.hpp"
#include "patrol/rng.hpp"
#include "support.hpp"

using namespace patrol;

TEST_CASE("record_visit keeps a bounded ordered buffer") {
    VisitationHistory h(1000);
    h.record_visit(1, NodeId{5});
    CHECK(h.size() == 1);
    for (Step s = 2; s <= 1001; ++s) {
        h.record_visit(s, NodeId{1});
    }
    CHECK(h.size() == 1000);
    CHECK(h.entries().front().step == 2);

    VisitationHistory g;
    g.record_visit(7, NodeId{1});
    CHECK_THROWS_AS(g.record_visit(5, NodeId{2}), Error);
    CHECK_THROWS_AS(g.record_visit(9, NodeId{2}), Error);
}

TEST_CASE("windowed frequency") {
    VisitationHistory h;
    for (Step s = 0; s < 200; ++s) {
        // node 3 on 9 of the last 100 steps
        const bool hit = s >= 100 && (s - 100) % 11 == 0 && s < 199;
        h.record_visit(s, hit ? NodeId{3} : NodeId{1});
    }
    CHECK(windowed_frequency(h, NodeId{3}, 199) == doctest::Approx(9.0));
    CHECK(windowed_frequency(h, NodeId{4}, 199) == 0.0);

    VisitationHistory parked;
    for (Step s = 0; s < 150; ++s) {
        parked.record_visit(s, NodeId{2});
    }
    CHECK(windowed_frequency(parked, NodeId{2}, 149) == 100.0);
    CHECK(windowed_frequency(VisitationHistory{}, NodeId{2}, 10) == 0.0);
}

TEST_CASE("warm-up divides by elapsed steps") {
    VisitationHistory h;
    h.record_visit(0, NodeId{1});
    h.record_visit(1, NodeId{2});
    h.record_visit(2, NodeId{1});
    CHECK(window_denominator(2, 100) == 3);
    CHECK(window_denominator(500, 100) == 100);
    CHECK(windowed_frequency(h, NodeId{1}, 2) == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("own frequencies sum to 100 and ignore old events") {
    Rng rng(3, 0);
    VisitationHistory h(1000);
    for (Step s = 0; s < 600; ++s) {
        h.record_visit(s, NodeId{1 + static_cast<int>(rng.below(10))});
    }
    double sum = 0.0;
    for (int n = 1; n <= 10; ++n) {
        sum += windowed_frequency(h, NodeId{n}, 599);
    }
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-12));

    // a different distant past, same recent window
    VisitationHistory other(1000);
    for (Step s = 0; s < 600; ++s) {
        other.record_visit(s, s < 500 ? NodeId{1} : h.at_step(s)->node);
    }
    for (int n = 1; n <= 10; ++n) {
        CHECK(windowed_frequency(other, NodeId{n}, 599) == windowed_frequency(h, NodeId{n}, 599));
    }
}

TEST_CASE("history json round trip") {
    VisitationHistory h(5);
    for (Step s = 10; s < 20; ++s) {
        h.record_visit(s, NodeId{static_cast<int>(s % 4) + 1});
    }
    const auto back = VisitationHistory::from_json(h.to_json());
    CHECK(back.entries() == h.entries());
    CHECK(back.capacity() == 5);
}

TEST_CASE("estimated frequency of a solo agent is its own frequency") {
    auto w = testing::ring_world(10, 1, 5.0);
    AgentView v(AgentId{1}, w, {});
    Rng rng(1, 1);
    NodeId at{1};
    for (Step s = 0; s < 300; ++s) {
        v.record_own(s, at);
        v.advance_peers(s);
        at = w->circle_step(CircleId{1}, at, rng.coin() ? Direction::Left : Direction::Right);
        for (int n = 1; n <= 10; ++n) {
            CHECK(v.estimated_frequency(NodeId{n}, s) == v.own_frequency(NodeId{n}, s));
        }
    }
}

TEST_CASE("uniform peer belief contributes 5% on a 20-node ring") {
    auto w = testing::ring_world(20, 2, 2.0);
    AgentView v(AgentId{1}, w, {});
    for (Step s = 0; s < 100; ++s) {
        v.record_own(s, NodeId{1});
        v.advance_peers(s);
    }
    for (int n = 2; n <= 20; ++n) {
        CHECK(v.estimated_frequency(NodeId{n}, 99) == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(estimated_frequency(v, NodeId{n}, 99) == doctest::Approx(5.0).epsilon(1e-12));
    }
    CHECK(v.estimated_frequency(NodeId{1}, 99) == doctest::Approx(105.0).epsilon(1e-12));
}

TEST_CASE("estimates stay within team capacity") {
    auto w = testing::load_world("general.json");
    std::vector<AgentView> views;
    for (const auto& a : w->agents()) {
        views.emplace_back(a.agent, w, Windows{});
    }
    std::vector<Rng> rngs{Rng(5, 1), Rng(5, 2), Rng(5, 3)};
    std::vector<NodeId> at{NodeId{1}, NodeId{12}, NodeId{19}};
    for (Step s = 0; s < 1500; ++s) {
        std::map<AgentId, NodeId> positions;
        for (std::size_t k = 0; k < views.size(); ++k) {
            views[k].record_own(s, at[k]);
            views[k].advance_peers(s);
            positions[views[k].id()] = at[k];
        }
        for (const auto& e : detect_contacts(*w, positions, s)) {
            exchange(e, views);
        }
        if (s >= 1000 && s % 100 == 0) {
            for (auto& v : views) {
                v.refresh_matrix();
            }
        }
        if (s % 50 == 0) {
            for (const auto& v : views) {
                double total = 0.0;
                for (NodeId n : w->nodes()) {
                    const double fast = v.estimated_frequency(n, s);
                    CHECK(fast == doctest::Approx(estimated_frequency(v, n, s)).epsilon(1e-9));
                    total += fast;
                }
                CHECK(total <= 300.0 + 1e-6);
            }
        }
        for (std::size_t k = 0; k < views.size(); ++k) {
            const CircleId c = views[k].circle();
            at[k] = w->circle_step(c, at[k], rngs[k].coin() ? Direction::Left : Direction::Right);
        }
    }
}
