#include <doctest.h>

#include <filesystem>

#include "patrol/engine.hpp"
#include "patrol/error.hpp"
#include "patrol/io.hpp"
#include "support.hpp"

using namespace patrol;

namespace {

ActionOverride always(Action a) {
    return [a](AgentId, NodeId, Step) { return std::optional<Action>(a); };
}

// every position of every agent, step by step, kept outside the engine
struct Recorder {
    std::vector<std::vector<NodeId>> positions;

    void take(const Simulation& sim) { positions.push_back(sim.positions()); }

    double frequency(NodeId node, Step now, std::int64_t window = 100) const {
        int visits = 0;
        for (Step s = std::max<Step>(0, now - window + 1); s <= now; ++s) {
            for (NodeId n : positions[static_cast<std::size_t>(s)]) {
                visits += n == node;
            }
        }
        return 100.0 * visits / static_cast<double>(std::min<Step>(now + 1, window));
    }
};

}  // namespace

TEST_CASE("forced right loop on three nodes") {
    auto w = testing::ring_world(3, 1, 10.0);
    Simulation sim(w, {}, 1, std::vector<NodeId>{NodeId{2}});
    sim.set_action_override(always(Action::Right));
    sim.advance(3);
    CHECK(sim.positions()[0] == NodeId{2});
    CHECK(sim.now() == 3);
}

TEST_CASE("co-located start is a contact at step 0") {
    auto w = testing::ring_world(10, 2, 1.0);
    Simulation sim(w, {}, 1, std::vector<NodeId>{NodeId{4}, NodeId{4}});
    REQUIRE(sim.last_contacts().size() == 1);
    CHECK(sim.last_contacts()[0].step == 0);
    CHECK(sim.views()[0].peer(AgentId{2}).belief.mass_at(NodeId{4}) == 1.0);
}

TEST_CASE("ground truth frequencies") {
    auto w = testing::ring_world(6, 2, 5.0);
    Simulation sim(w, {}, 3, std::vector<NodeId>{NodeId{1}, NodeId{1}});
    sim.set_action_override(always(Action::Right));
    Recorder rec;
    rec.take(sim);
    for (int k = 0; k < 250; ++k) {
        sim.step();
        rec.take(sim);
        double total = 0.0;
        for (NodeId n : w->nodes()) {
            CHECK(sim.true_frequency(n) == rec.frequency(n, sim.now()));
            // both agents on the same node every step: each visit counts twice
            CHECK(sim.true_frequency(n) == 2.0 * sim.agent_frequency(0, n));
            CHECK(sim.insufficiency(n) == std::max(0.0, w->required(n) - sim.true_frequency(n)));
            total += sim.true_frequency(n);
        }
        CHECK(total == doctest::Approx(200.0).epsilon(1e-12));
    }
    auto z = testing::ring_world(3, 1, 0.0);
    Simulation zero(z, {}, 1);
    zero.advance(50);
    for (NodeId n : z->nodes()) {
        CHECK(zero.insufficiency(n) == 0.0);
    }
}

TEST_CASE("never visited node has zero frequency") {
    auto g = testing::load_world("general.json");
    Simulation sim(g, {}, 1);
    for (NodeId n : g->nodes()) {
        const bool occupied = std::find(sim.positions().begin(), sim.positions().end(), n) != sim.positions().end();
        if (!occupied) {
            CHECK(sim.true_frequency(n) == 0.0);
        }
    }
}

TEST_CASE("engine frequency equals a recount on random probes") {
    auto g = testing::load_world("general.json");
    Simulation sim(g, {}, 11);
    Recorder rec;
    rec.take(sim);
    Rng probe(11, 99);
    int probes = 0;
    for (int k = 0; k < 5000; ++k) {
        sim.step();
        rec.take(sim);
        if (probe.uniform() < 0.1) {
            const NodeId n = g->nodes()[probe.below(g->node_count())];
            CHECK(sim.true_frequency(n) == rec.frequency(n, sim.now()));
            ++probes;
        }
    }
    CHECK(probes > 300);
}

TEST_CASE("perfect information makes the estimate exact") {
    for (auto model : {PeerModel::Stationary, PeerModel::Transition}) {
        auto w = testing::load_world("benchmark.json");
        SimParams params;
        params.peer_model = model;
        Simulation sim(w, params, 2, std::vector<NodeId>{NodeId{1}, NodeId{2}});
        // marching side by side keeps the pair in contact every step
        sim.set_action_override(always(Action::Right));
        for (int k = 0; k < 1300; ++k) {
            sim.step();
            REQUIRE(sim.last_contacts().size() == 1);
            for (const auto& v : sim.views()) {
                for (NodeId n : w->nodes()) {
                    CHECK(v.estimated_frequency(n, sim.now()) == sim.true_frequency(n));
                }
            }
        }
    }
}

TEST_CASE("without contact the peer estimate stays the uniform prior") {
    auto w = testing::load_world("general.json");
    SimParams params;
    params.communication = false;
    Simulation sim(w, params, 5);
    sim.advance(3000);
    for (const auto& v : sim.views()) {
        for (const auto& p : v.peers()) {
            CHECK(p.belief.last_sync == -1);
            CHECK(p.received == nullptr);
            const Circle& c = w->circle(p.circle);
            for (NodeId n : c.nodes) {
                CHECK(p.window.mass(n) == doctest::Approx(100.0 / static_cast<double>(c.size())).epsilon(1e-9));
            }
        }
    }
    CHECK(sim.contact_log().steps().empty());
}

TEST_CASE("determinism and checkpoints") {
    auto g = testing::load_world("general.json");
    RunSpec spec;
    spec.world = g;
    spec.total_steps = 3000;
    spec.log_every = 100;
    spec.snapshot_steps = {0, 1500};

    SUBCASE("same seed, same bytes") {
        const auto a = run(spec, 7);
        const auto b = run(spec, 7);
        CHECK(a.log.run_csv() == b.log.run_csv());
        CHECK(a.log.snapshots_csv() == b.log.snapshots_csv());
        CHECK(a.checkpoint == b.checkpoint);
        CHECK(run(spec, 8).log.run_csv() != a.log.run_csv());
    }
    SUBCASE("restore and continue matches an uninterrupted run") {
        spec.total_steps = 1700;
        const auto first = run(spec, 4);
        const auto path = std::filesystem::temp_directory_path() / "patrol_cp_test.bin";
        save_checkpoint(path, first.checkpoint);
        const auto loaded = load_checkpoint(path);
        std::filesystem::remove(path);
        CHECK(loaded == first.checkpoint);
        const auto resumed = resume(loaded, 1300, 100, {});

        spec.total_steps = 3000;
        const auto whole = run(spec, 4);
        CHECK(resumed.checkpoint == whole.checkpoint);
        RunLog tail;
        tail.nodes = whole.log.nodes;
        for (const auto& row : whole.log.rows) {
            if (row.step > 1700) {
                tail.rows.push_back(row);
            }
        }
        CHECK(tail.run_csv() == resumed.log.run_csv());
    }
    SUBCASE("zero steps") {
        spec.total_steps = 0;
        const auto r = run(spec, 3);
        CHECK(r.log.rows.empty());
        const Simulation fresh(g, {}, 3);
        CHECK(r.checkpoint == make_checkpoint(fresh));
    }
    SUBCASE("hash guard") {
        auto cp = run(spec, 2).checkpoint;
        cp["world_hash"] = cp["world_hash"].get<std::uint64_t>() + 1;
        CHECK_THROWS_AS(restore_checkpoint(cp), Error);
    }
}

TEST_CASE("dynamic replay") {
    auto g = testing::load_world("general.json");
    RunSpec spec;
    spec.world = g;
    spec.total_steps = 2000;
    const auto base = run(spec, 1);

    SUBCASE("transient rows at step resolution") {
        ReplaySpec r;
        r.steps = 1200;
        r.snapshot_offsets = {0, 100, 1000};
        const auto out = replay_mutated(base.checkpoint, load_mutations(testing::config_path("dynamic_addremove.json")), r);
        REQUIRE(out.log.transient.size() == 1001);
        CHECK(out.log.transient.front().offset == 0);
        CHECK(out.log.transient.back().offset == 1000);
        CHECK(out.log.transient_nodes.size() == 21);
        CHECK(out.log.snapshots.size() == 3);
        const Simulation after = restore_checkpoint(out.checkpoint);
        CHECK(after.epsilon() == 0.01);
        CHECK(after.world().node_count() == 21);
        CHECK(after.now() == 3200);
    }
    SUBCASE("frozen replay leaves Q untouched") {
        ReplaySpec r;
        r.steps = 500;
        r.freeze_learning = true;
        const auto out = replay_mutated(base.checkpoint, {SwapRequirements{NodeId{4}, NodeId{14}}}, r);
        const auto before = restore_checkpoint(base.checkpoint);
        const auto after = restore_checkpoint(out.checkpoint);
        for (std::size_t k = 0; k < before.views().size(); ++k) {
            CHECK(before.views()[k].q() == after.views()[k].q());
        }
    }
    SUBCASE("identity mutation changes nothing but epsilon") {
        ReplaySpec r;
        r.steps = 10;
        const auto out = replay_mutated(base.checkpoint, {SwapRequirements{NodeId{4}, NodeId{4}}}, r);
        const auto fresh = restore_checkpoint(base.checkpoint);
        CHECK(out.log.transient.front().difference == fresh.log_row().difference);
    }
    SUBCASE("incompatible mutation") {
        try {
            replay_mutated(base.checkpoint, {InsertNode{CircleId{3}, NodeId{1}, NodeId{2}, NodeId{30}, 1.0}}, {});
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::IncompatibleMutation);
        }
    }
}

TEST_CASE("log rows are consistent") {
    auto g = testing::load_world("general.json");
    RunSpec spec;
    spec.world = g;
    spec.total_steps = 2000;
    spec.log_every = 250;
    const auto r = run(spec, 9);
    REQUIRE(r.log.rows.size() == 8);
    for (const auto& row : r.log.rows) {
        double sum = 0.0;
        for (std::size_t k = 0; k < row.insufficiency.size(); ++k) {
            CHECK(row.insufficiency[k] >= 0.0);
            CHECK(row.insufficiency[k] == std::max(0.0, -row.difference[k]));
            sum += row.insufficiency[k];
        }
        CHECK(row.mean_insufficiency == doctest::Approx(sum / 20.0).epsilon(1e-12));
        CHECK(row.step % 250 == 0);
    }
    const auto summary = r.log.summary();
    CHECK(summary["logged_rows"] == 8);
}

TEST_CASE("doubling the team on halved components never hurts" * doctest::description("statistical, 3 seeds")) {
    auto pair = testing::ring_world(20, 2, 4.5);
    auto quad = testing::ring_world(20, 4, 2.25);
    double two = 0.0;
    double four = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        RunSpec spec;
        spec.total_steps = 200000;
        spec.log_every = 1000;
        spec.world = pair;
        for (const auto& row : run(spec, seed).log.rows) {
            two += row.step > 150000 ? row.mean_insufficiency : 0.0;
        }
        spec.world = quad;
        for (const auto& row : run(spec, seed).log.rows) {
            four += row.step > 150000 ? row.mean_insufficiency : 0.0;
        }
    }
    MESSAGE("r=2: " << two / 150.0 << "  r=4: " << four / 150.0);
    CHECK(four <= two);
}
