#include <doctest.h>

#include <set>

#include "swarmlab/comm.hpp"
#include "swarmlab/errors.hpp"
#include "swarmlab/rng.hpp"

using namespace swarmlab;
using geom::Vec2;

namespace {

world::WorldConfig cfg_for(int K) {
    world::WorldConfig cfg;
    cfg.K = K;
    return cfg;
}

world::TaskInstance instance_at(std::vector<Vec2> positions) {
    world::TaskInstance inst;
    inst.agents.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) inst.agents[i].pos = positions[i];
    return inst;
}

}  // namespace

TEST_CASE("assign_groups") {
    auto cfg = cfg_for(4);
    auto inst = instance_at({{0, 0}, {1.2, 0}, {1.4, 0.1}, {50, 50}});
    auto g = world::connectivity(inst, cfg);
    auto groups = comm::assign_groups(g, inst, 0, cfg.disc);

    CHECK(groups.group_of(0) == 0);  // self in the central group
    CHECK(groups.group_of(1) == 1);
    CHECK(groups.group_of(2) == 1);  // same sector, same group
    CHECK(!groups.group_of(3).has_value());

    SUBCASE("lone agent has only itself") {
        auto lone = instance_at({{0, 0}});
        auto gl = world::connectivity(lone, cfg_for(1));
        auto only = comm::assign_groups(gl, lone, 0, cfg.disc);
        CHECK(only.members[0] == std::vector<int>{0});
        for (std::size_t p = 1; p < only.members.size(); ++p) CHECK(only.members[p].empty());
    }

    SUBCASE("every neighbour lands in exactly one group") {
        Rng rng(4);
        auto cfg10 = cfg_for(10);
        for (int iter = 0; iter < 20; ++iter) {
            auto w = world::spawn_rendezvous(cfg10, iter);
            auto graph = world::connectivity(w, cfg10);
            for (int i = 0; i < 10; ++i) {
                auto asg = comm::assign_groups(graph, w, i, cfg10.disc);
                std::set<int> seen;
                for (const auto& members : asg.members)
                    for (int id : members) CHECK(seen.insert(id).second);
                CHECK(seen.count(i) == 1);
                for (int j : graph.neighbours(i)) CHECK(seen.count(j) == 1);
            }
        }
    }
}

TEST_CASE("aggregate_inflow") {
    comm::GroupAssignment groups;
    groups.members = {{0}, {1, 2}, {}, {}};  // P = 4

    SUBCASE("empty inbox gives a zero bundle") {
        auto res = comm::aggregate_inflow({}, groups, comm::InflowMode::concat, 2);
        for (const auto& g : res.bundle.groups)
            for (double v : g) CHECK(v == 0.0);
        CHECK(res.bundle.flatten().size() == 8);
        CHECK(res.contributions.empty());
    }

    SUBCASE("group mean and routing weights") {
        std::vector<comm::Message> inbox = {{1, 3, {1.0, 0.0}}, {2, 3, {3.0, 0.0}}};
        auto res = comm::aggregate_inflow(inbox, groups, comm::InflowMode::concat, 2);
        CHECK(res.bundle.groups[1][0] == doctest::Approx(2.0));
        CHECK(res.bundle.groups[1][1] == 0.0);
        REQUIRE(res.contributions.size() == 2);
        for (const auto& c : res.contributions) {
            CHECK(c.recv_group == 1);
            CHECK(c.weight == doctest::Approx(0.5));
            CHECK(c.sender_block == 3);
        }
    }

    SUBCASE("sum mode adds the group means") {
        std::vector<comm::Message> inbox = {{0, 0, {1.0, 0.0}}, {1, 0, {0.0, 2.0}}};
        auto res = comm::aggregate_inflow(inbox, groups, comm::InflowMode::sum, 2);
        auto flat = res.bundle.flatten();
        REQUIRE(flat.size() == 2);
        CHECK(flat[0] == doctest::Approx(1.0));
        CHECK(flat[1] == doctest::Approx(2.0));
    }

    SUBCASE("messages from departed senders are dropped") {
        std::vector<comm::Message> inbox = {{7, 0, {5.0, 5.0}}};
        auto res = comm::aggregate_inflow(inbox, groups, comm::InflowMode::concat, 2);
        CHECK(res.contributions.empty());
        for (const auto& g : res.bundle.groups)
            for (double v : g) CHECK(v == 0.0);
    }

    SUBCASE("payload length is validated") {
        std::vector<comm::Message> inbox = {{1, 0, {1.0}}};
        CHECK_THROWS_AS(comm::aggregate_inflow(inbox, groups, comm::InflowMode::concat, 2),
                        LengthMismatch);
    }

    SUBCASE("linearity in message values") {
        Rng rng(12);
        for (int iter = 0; iter < 50; ++iter) {
            std::vector<comm::Message> a = {{0, 0, {rng.uniform(), rng.uniform()}},
                                            {1, 1, {rng.uniform(), rng.uniform()}},
                                            {2, 2, {rng.uniform(), rng.uniform()}}};
            std::vector<comm::Message> b = a;
            for (auto& m : b)
                for (auto& v : m.payload) v = rng.uniform();
            double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
            std::vector<comm::Message> mix = a;
            for (std::size_t m = 0; m < mix.size(); ++m)
                for (std::size_t k = 0; k < 2; ++k)
                    mix[m].payload[k] = alpha * a[m].payload[k] + beta * b[m].payload[k];
            auto fa = comm::aggregate_inflow(a, groups, comm::InflowMode::sum, 2).bundle.flatten();
            auto fb = comm::aggregate_inflow(b, groups, comm::InflowMode::sum, 2).bundle.flatten();
            auto fm =
                comm::aggregate_inflow(mix, groups, comm::InflowMode::sum, 2).bundle.flatten();
            for (std::size_t k = 0; k < 2; ++k)
                CHECK(fm[k] == doctest::Approx(alpha * fa[k] + beta * fb[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("fanout_outflow") {
    comm::GroupAssignment groups;
    groups.members = {{0}, {1, 2}, {}, {}};
    comm::CommBundle bundle;
    bundle.mode = comm::InflowMode::concat;
    bundle.groups = {{1.0, 1.5}, {2.0, 2.5}, {3.0, 3.5}, {4.0, 4.5}};

    auto outs = comm::fanout_outflow(bundle, groups);
    REQUIRE(outs.size() == 3);  // self + two members of group 1; empty groups send nothing.
    CHECK(outs[0].receiver == 0);
    CHECK(outs[0].payload == comm::CommVector{1.0, 1.5});
    CHECK(outs[1].payload == outs[2].payload);  // same group, identical copies
    CHECK(outs[1].receiver == 1);
    CHECK(outs[2].receiver == 2);

    SUBCASE("fanout then singleton aggregation reproduces the outflow") {
        comm::GroupAssignment singles;
        singles.members = {{0}, {1}, {2}, {3}};
        comm::CommBundle b2;
        b2.mode = comm::InflowMode::concat;
        b2.groups = {{1.0, -1.0}, {2.0, -2.0}, {3.0, -3.0}, {4.0, -4.0}};
        auto sent = comm::fanout_outflow(b2, singles);
        // Each receiver got one message; a mean over one element is exact.
        for (const auto& o : sent) {
            std::vector<comm::Message> inbox = {{o.receiver, o.group, o.payload}};
            comm::GroupAssignment recv;
            recv.members = {{}, {}, {}, {}};
            recv.members[o.group].push_back(o.receiver);
            auto res = comm::aggregate_inflow(inbox, recv, comm::InflowMode::concat, 2);
            CHECK(res.bundle.groups[o.group] == b2.groups[o.group]);
        }
    }

    SUBCASE("multiset of (sender, receiver) pairs covers N_i plus self") {
        auto cfg = cfg_for(8);
        auto inst = world::spawn_rendezvous(cfg, 3);
        auto graph = world::connectivity(inst, cfg);
        for (int i = 0; i < 8; ++i) {
            auto asg = comm::assign_groups(graph, inst, i, cfg.disc);
            comm::CommBundle b;
            b.mode = comm::InflowMode::concat;
            b.groups.assign(cfg.disc.P, comm::CommVector(1, 1.0));
            auto sent = comm::fanout_outflow(b, asg);
            std::multiset<int> receivers;
            for (const auto& o : sent) receivers.insert(o.receiver);
            std::multiset<int> want = {i};
            for (int j : graph.neighbours(i)) want.insert(j);
            CHECK(receivers == want);
        }
    }
}

TEST_CASE("comm state: one-step delay, delivered exactly once") {
    comm::CommState state(2);
    CHECK(state.inbox(0).empty());  // nothing readable at t = 1
    CHECK(state.inbox(1).empty());

    state.post(0, 1, 0, {1.0});
    CHECK(state.inbox(1).empty());  // not visible within the sending step

    state.advance();
    REQUIRE(state.inbox(1).size() == 1);
    CHECK(state.inbox(1)[0].sender == 0);
    CHECK(state.inbox(1)[0].payload == comm::CommVector{1.0});

    state.advance();
    CHECK(state.inbox(1).empty());  // consumed, not redelivered

    state.post(1, 0, 0, {2.0});
    state.reset();
    state.advance();
    CHECK(state.inbox(0).empty());
}
