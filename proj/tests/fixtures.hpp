#pragma once

#include <vector>

#include "iba/model.hpp"

namespace fixtures {

using namespace iba;

inline Cpt make_cpt(std::vector<NodeRef> parents, int child_domain, std::vector<double> table) {
    Cpt c;
    c.parents = std::move(parents);
    c.child_domain = child_domain;
    c.table = std::move(table);
    return c;
}

inline RewardTable make_reward(std::vector<NodeRef> parents, std::vector<double> values) {
    RewardTable r;
    r.parents = std::move(parents);
    r.values = std::move(values);
    return r;
}

// Single-agent chain: A (unmodeled) drives B; the agent observes B noisily
// and is rewarded when B is 1. Factor ids: A=0, B=1.
inline FactoredPosg make_chain(int horizon = 3, double obs_acc = 0.85) {
    FactoredPosg m;
    m.num_agents = 1;
    m.num_actions = {1};
    m.num_observations = {2};
    m.horizon = horizon;
    m.dbn.factors = {{0, "A", 2}, {1, "B", 2}};
    // A' <- A: sticky with flip probability 0.2
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(0)}, 2, {0.8, 0.2, 0.2, 0.8}));
    // B' <- (A, B): rows over (A,B)
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(0), prev_factor(1)}, 2, {0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.1, 0.9}));
    m.dbn.observation_cpts.push_back(
        make_cpt({next_factor(1)}, 2, {obs_acc, 1 - obs_acc, 1 - obs_acc, obs_acc}));
    m.rewards.push_back(make_reward({next_factor(1)}, {0.0, 1.0}));
    // Initial BN: A ~ Bernoulli(0.4), B | A correlated
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.6, 0.4}));
    m.initial_bn.cpts.push_back(make_cpt({prev_factor(0)}, 2, {0.7, 0.3, 0.2, 0.8}));
    m.finalize();
    return m;
}

// Two agents; X0 modeled by agent 0, X1 driven by agent 1. Factor ids:
// X0=0, X1=1. Agent 0's next state depends on X1 at the previous slice.
struct TwoAgentFixture {
    FactoredPosg model;
    std::vector<Policy> policies;  // per agent; entry 0 unused
    LocalStateFunction lsf;
};

inline TwoAgentFixture make_two_agent(int horizon = 2) {
    TwoAgentFixture fx;
    FactoredPosg& m = fx.model;
    m.num_agents = 2;
    m.num_actions = {2, 2};
    m.num_observations = {2, 2};
    m.horizon = horizon;
    m.dbn.factors = {{0, "X0", 2}, {1, "X1", 2}};
    // X0' <- (X0, X1, a0)
    m.dbn.factor_cpts.push_back(make_cpt(
        {prev_factor(0), prev_factor(1), action_node(0)}, 2,
        {0.9, 0.1, 0.7, 0.3, 0.5, 0.5, 0.4, 0.6, 0.2, 0.8, 0.35, 0.65, 0.25, 0.75, 0.15, 0.85}));
    // X1' <- (X1, a1)
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(1), action_node(1)}, 2, {0.8, 0.2, 0.3, 0.7, 0.6, 0.4, 0.1, 0.9}));
    m.dbn.observation_cpts.push_back(
        make_cpt({next_factor(0)}, 2, {0.85, 0.15, 0.15, 0.85}));
    m.dbn.observation_cpts.push_back(
        make_cpt({next_factor(1)}, 2, {0.75, 0.25, 0.25, 0.75}));
    m.rewards.push_back(make_reward({prev_factor(0), action_node(0), next_factor(0)},
                                    {0.0, 1.0, -0.5, 0.5, 0.25, 2.0, -1.0, 0.75}));
    m.rewards.push_back(make_reward({next_factor(1)}, {0.0, 1.0}));
    // Correlated initial belief: X1 ~ Bernoulli(0.5), X0 | X1
    m.initial_bn.cpts.push_back(make_cpt({prev_factor(1)}, 2, {0.8, 0.2, 0.3, 0.7}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.finalize();

    Policy p1;
    p1.kind = Policy::Kind::Reactive;
    p1.reactive[-1] = {0.7, 0.3};
    p1.reactive[0] = {0.6, 0.4};
    p1.reactive[1] = {0.2, 0.8};
    fx.policies = {Policy{}, p1};

    fx.lsf.modeled = {{0}, {1}};
    return fx;
}

// Variant of make_two_agent where X0' also depends on agent 1's action, so
// the influence sources are <X1^t, a1^t>.
inline TwoAgentFixture make_two_agent_act(int horizon = 2) {
    TwoAgentFixture fx = make_two_agent(horizon);
    FactoredPosg& m = fx.model;
    m.dbn.factor_cpts[0] = make_cpt(
        {prev_factor(0), prev_factor(1), action_node(0), action_node(1)}, 2,
        {0.9,  0.1,  0.8, 0.2,  0.7,  0.3,  0.6, 0.4, 0.5, 0.5,  0.45, 0.55, 0.4, 0.6,  0.3, 0.7,
         0.2,  0.8,  0.3, 0.7,  0.35, 0.65, 0.4, 0.6, 0.25, 0.75, 0.2,  0.8,  0.15, 0.85, 0.25, 0.75});
    m.finalize();
    return fx;
}

// Intra-stage variant: X0' reads X1 at the *next* slice, so the unmodeled
// factor is an intra-stage source (u contains X1^{t+1}) with indirect
// sources X1^t and a1^t.
inline TwoAgentFixture make_isd(int horizon = 2) {
    TwoAgentFixture fx;
    FactoredPosg& m = fx.model;
    m.num_agents = 2;
    m.num_actions = {2, 2};
    m.num_observations = {2, 2};
    m.horizon = horizon;
    m.dbn.factors = {{0, "X0", 2}, {1, "X1", 2}};
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(0), action_node(0), next_factor(1)}, 2,
                                         {0.9, 0.1, 0.6, 0.4, 0.7, 0.3, 0.4, 0.6, 0.5, 0.5, 0.3,
                                          0.7, 0.8, 0.2, 0.2, 0.8}));
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(1), action_node(1)}, 2, {0.8, 0.2, 0.3, 0.7, 0.6, 0.4, 0.1, 0.9}));
    m.dbn.observation_cpts.push_back(make_cpt({next_factor(0)}, 2, {0.85, 0.15, 0.15, 0.85}));
    m.dbn.observation_cpts.push_back(make_cpt({next_factor(1)}, 2, {0.75, 0.25, 0.25, 0.75}));
    m.rewards.push_back(make_reward({next_factor(0)}, {0.0, 1.0}));
    m.rewards.push_back(make_reward({next_factor(1)}, {0.0, 1.0}));
    m.initial_bn.cpts.push_back(make_cpt({prev_factor(1)}, 2, {0.8, 0.2, 0.3, 0.7}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.finalize();

    Policy p1;
    p1.kind = Policy::Kind::Reactive;
    p1.reactive[-1] = {0.7, 0.3};
    p1.reactive[0] = {0.6, 0.4};
    p1.reactive[1] = {0.2, 0.8};
    fx.policies = {Policy{}, p1};
    fx.lsf.modeled = {{0}, {1}};
    return fx;
}

// Intra-stage variant whose source X1' additionally depends on the modeled
// factor and both actions, exercising the plug-in conditioning tuple
// <x_v^t, a_i^t> of the experienced influence.
inline TwoAgentFixture make_isd_cond(int horizon = 2) {
    TwoAgentFixture fx = make_isd(horizon);
    FactoredPosg& m = fx.model;
    m.dbn.factor_cpts[1] = make_cpt(
        {prev_factor(0), prev_factor(1), action_node(0), action_node(1)}, 2,
        {0.8, 0.2,  0.3, 0.7,  0.6, 0.4,  0.1, 0.9, 0.75, 0.25, 0.35, 0.65, 0.55, 0.45, 0.2, 0.8,
         0.7, 0.3,  0.4, 0.6,  0.5, 0.5,  0.25, 0.75, 0.65, 0.35, 0.45, 0.55, 0.3, 0.7, 0.15, 0.85});
    m.finalize();
    return fx;
}

// Single agent modeling {X0, X2}; the unmodeled X1 drives both, so the two
// NLAFs share one influence source and the joint influence does not
// factorize.
struct SharedSourceFixture {
    FactoredPosg model;
    std::vector<Policy> policies;
    LocalStateFunction lsf;
};

inline SharedSourceFixture make_shared_source(int horizon = 2) {
    SharedSourceFixture fx;
    FactoredPosg& m = fx.model;
    m.num_agents = 1;
    m.num_actions = {1};
    m.num_observations = {2};
    m.horizon = horizon;
    m.dbn.factors = {{0, "X0", 2}, {1, "X1", 2}, {2, "X2", 2}};
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(0), prev_factor(1)}, 2, {0.9, 0.1, 0.2, 0.8, 0.6, 0.4, 0.3, 0.7}));
    m.dbn.factor_cpts.push_back(make_cpt({prev_factor(1)}, 2, {0.7, 0.3, 0.4, 0.6}));
    m.dbn.factor_cpts.push_back(
        make_cpt({prev_factor(2), prev_factor(1)}, 2, {0.85, 0.15, 0.25, 0.75, 0.5, 0.5, 0.1, 0.9}));
    m.dbn.observation_cpts.push_back(make_cpt({next_factor(0)}, 2, {0.8, 0.2, 0.2, 0.8}));
    m.rewards.push_back(make_reward({next_factor(0)}, {0.0, 1.0}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.initial_bn.cpts.push_back(make_cpt({}, 2, {0.5, 0.5}));
    m.finalize();
    fx.policies = {Policy{}};
    fx.lsf.modeled = {{0, 2}};
    return fx;
}

}  // namespace fixtures
