#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "iba/unrolled.hpp"

using namespace iba;
using namespace fixtures;

TEST_CASE("unroll node counts match the construction rules") {
    auto m = make_chain(3);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 3);
    // A^0..A^3, B^0..B^3, a^0..a^2, o^1..o^3
    CHECK(net.num_nodes() == 4 + 4 + 3 + 3);

    UnrolledNet net0(m, none, 0, 0);
    CHECK(net0.num_nodes() == 2);  // only the initial BN

    auto fx = make_two_agent(2);
    UnrolledNet net2(fx.model, fx.policies, 0, 2);
    // 2 factors x 3 stages + 2 agents x 2 action stages + 2 agents x 2 obs stages
    CHECK(net2.num_nodes() == 6 + 4 + 4);
}

TEST_CASE("enumeration weights sum to one under a fixed plan") {
    auto fx = make_two_agent(2);
    UnrolledNet net(fx.model, fx.policies, 0, 2);
    EnumerateOptions opt;
    opt.mode = ProtagonistMode::Plan;
    opt.plan = {0, 1};
    double total = 0;
    std::int64_t count = 0;
    enumerate(net, opt, [&](const std::vector<int>&, double w) {
        total += w;
        ++count;
    });
    CHECK(count > 0);
    CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("deterministic model yields a single unit-weight trajectory") {
    FactoredPosg m;
    m.num_agents = 1;
    m.num_actions = {1};
    m.num_observations = {2};
    m.horizon = 2;
    m.dbn.factors = {{0, "F", 2}};
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(0)}, 2, {0.0, 1.0, 1.0, 0.0}));
    m.dbn.observation_cpts.push_back(make_cpt({next_factor(0)}, 2, {1.0, 0.0, 0.0, 1.0}));
    m.rewards.push_back(make_reward({}, {0.0}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {1.0, 0.0}));
    m.finalize();

    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 2);
    EnumerateOptions opt;
    opt.mode = ProtagonistMode::Plan;
    opt.plan = {0, 0};
    int count = 0;
    enumerate(net, opt, [&](const std::vector<int>& a, double w) {
        ++count;
        CHECK(w == 1.0);
        CHECK(a[net.factor_node(0, 0)] == 0);
        CHECK(a[net.factor_node(0, 1)] == 1);
        CHECK(a[net.factor_node(0, 2)] == 0);
    });
    CHECK(count == 1);
}

TEST_CASE("query with no evidence reads the initial BN marginal") {
    auto m = make_chain(1);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 1);
    auto d = query(net, {net.factor_node(0, 0)}, {});
    CHECK(std::abs(d.at({0}) - 0.6) < 1e-12);
    CHECK(std::abs(d.at({1}) - 0.4) < 1e-12);
}

TEST_CASE("query equals enumeration ratios") {
    auto m = make_chain(2);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 2);
    EnumerateOptions opt;
    opt.mode = ProtagonistMode::Plan;
    opt.plan = {0, 0};

    int a2 = net.factor_node(0, 2);
    int b0 = net.factor_node(1, 0), b1 = net.factor_node(1, 1), b2 = net.factor_node(1, 2);
    auto cond = query(net, {a2}, {{b0, 1}, {b1, 0}, {b2, 1}}, opt);

    double num = 0, den = 0;
    enumerate(net, opt, [&](const std::vector<int>& a, double w) {
        if (a[b0] == 1 && a[b1] == 0 && a[b2] == 1) {
            den += w;
            if (a[a2] == 1) num += w;
        }
    });
    CHECK(std::abs(cond.at({1}) - num / den) < 1e-12);

    double total = 0;
    for (const auto& [k, v] : cond) total += v;
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("contradictory evidence raises ZeroEvidence") {
    auto m = make_chain(1);
    // Make B' deterministic-sticky so B^1 != B^0 is impossible.
    m.dbn.factor_cpts[1] =
        make_cpt({prev_factor(0), prev_factor(1)}, 2, {1, 0, 0, 1, 1, 0, 0, 1});
    m.finalize();
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 1);
    CHECK_THROWS_AS(query(net, {net.factor_node(0, 1)},
                          {{net.factor_node(1, 0), 0}, {net.factor_node(1, 1), 1}}),
                    ZeroEvidence);
}

TEST_CASE("enumeration cap raises CapExceeded") {
    auto fx = make_two_agent(2);
    UnrolledNet net(fx.model, fx.policies, 0, 2);
    EnumerateOptions opt;
    opt.cap = 3;
    CHECK_THROWS_AS(count_trajectories(net, opt), CapExceeded);
}

TEST_CASE("B-history d-separates the hidden chain driver") {
    auto m = make_chain(2);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 2);
    std::vector<int> sources = {net.factor_node(0, 2)};
    std::vector<int> shield = {net.factor_node(1, 0), net.factor_node(1, 1),
                               net.factor_node(1, 2)};
    std::vector<int> rest = {net.obs_node(0, 1), net.obs_node(0, 2)};
    CHECK(check_dsep_graph(net, sources, shield, rest));
    auto num = check_dsep_numeric(net, sources, shield, rest);
    CHECK(num.separated);
    CHECK(num.max_violation < 1e-12);
}

TEST_CASE("dropping part of the shield breaks separation") {
    auto m = make_chain(2);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 2);
    std::vector<int> sources = {net.factor_node(0, 2)};
    std::vector<int> shield = {net.factor_node(1, 2)};  // last value only
    std::vector<int> rest = {net.obs_node(0, 1), net.obs_node(0, 2)};
    CHECK(!check_dsep_graph(net, sources, shield, rest));
    auto num = check_dsep_numeric(net, sources, shield, rest);
    CHECK(!num.separated);
    CHECK(num.max_violation > 1e-6);
}

TEST_CASE("a collider outside the shield blocks the path") {
    // X -> Z <- Y with Z observed at the next stage; X and Y independent
    // unless Z (the collider) is conditioned on.
    FactoredPosg m;
    m.num_agents = 1;
    m.num_actions = {1};
    m.num_observations = {2};
    m.horizon = 1;
    m.dbn.factors = {{0, "X", 2}, {1, "Y", 2}, {2, "Z", 2}};
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(0)}, 2, {0.9, 0.1, 0.1, 0.9}));
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(1)}, 2, {0.9, 0.1, 0.1, 0.9}));
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(0), prev_factor(1)}, 2, {0.95, 0.05, 0.4, 0.6, 0.3, 0.7, 0.05, 0.95}));
    m.dbn.observation_cpts.push_back(make_cpt({next_factor(2)}, 2, {0.8, 0.2, 0.2, 0.8}));
    m.rewards.push_back(make_reward({}, {0.0}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.35, 0.65}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.finalize();
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 1);

    std::vector<int> x0 = {net.factor_node(0, 0)};
    std::vector<int> y0 = {net.factor_node(1, 0)};
    CHECK(check_dsep_graph(net, x0, {}, y0));
    CHECK(check_dsep_numeric(net, x0, {}, y0).separated);
    // Conditioning on the collider's child couples X and Y.
    CHECK(!check_dsep_graph(net, x0, {net.factor_node(2, 1)}, y0));
    CHECK(!check_dsep_numeric(net, x0, {net.factor_node(2, 1)}, y0).separated);
}

TEST_CASE("parameter-specific independence: graph blocked only numerically") {
    auto m = make_chain(1);
    // B' formally depends on A but the rows ignore it.
    m.dbn.factor_cpts[1] =
        make_cpt({prev_factor(0), prev_factor(1)}, 2, {0.9, 0.1, 0.3, 0.7, 0.9, 0.1, 0.3, 0.7});
    // Decouple the initial belief too.
    m.initial_bn.cpts[1] = make_cpt({}, 2, {0.55, 0.45});
    m.finalize();
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 1);
    std::vector<int> sources = {net.factor_node(0, 0)};
    std::vector<int> rest = {net.factor_node(1, 1)};
    CHECK(!check_dsep_graph(net, sources, {}, rest));
    CHECK(check_dsep_numeric(net, sources, {}, rest).separated);
}

TEST_CASE("forward-filtered event probability matches enumeration") {
    // P(B^2 = 1) two ways on the chain.
    auto m = make_chain(2);
    std::vector<Policy> none = {Policy{}};
    UnrolledNet net(m, none, 0, 2);
    EnumerateOptions opt;
    opt.mode = ProtagonistMode::Plan;
    opt.plan = {0, 0};
    double direct = 0;
    enumerate(net, opt, [&](const std::vector<int>& a, double w) {
        if (a[net.factor_node(1, 2)] == 1) direct += w;
    });
    auto d = query(net, {net.factor_node(1, 2)}, {}, opt);
    CHECK(std::abs(d.at({1}) - direct) < 1e-12);

    // Hand filtering over the joint (A,B) chain.
    double joint[2][2];
    for (int a0 = 0; a0 < 2; ++a0)
        for (int b0 = 0; b0 < 2; ++b0)
            joint[a0][b0] = m.initial_bn.cpts[0].table[a0] *
                            m.initial_bn.cpts[1].table[a0 * 2 + b0];
    for (int t = 0; t < 2; ++t) {
        double next[2][2] = {{0, 0}, {0, 0}};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int a2 = 0; a2 < 2; ++a2)
                    for (int b2 = 0; b2 < 2; ++b2)
                        next[a2][b2] += joint[a][b] * m.dbn.factor_cpts[0].table[a * 2 + a2] *
                                        m.dbn.factor_cpts[1].table[(a * 2 + b) * 2 + b2];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) joint[a][b] = next[a][b];
    }
    CHECK(std::abs(d.at({1}) - (joint[0][1] + joint[1][1])) < 1e-12);
}
