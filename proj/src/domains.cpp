#include "iba/domains.hpp"

#include <algorithm>
#include <random>

#include "iba/influence.hpp"

namespace iba {

namespace {

Cpt cpt(std::vector<NodeRef> parents, int child_domain, std::vector<double> table) {
    Cpt c;
    c.parents = std::move(parents);
    c.child_domain = child_domain;
    c.table = std::move(table);
    return c;
}

RewardTable reward_table(std::vector<NodeRef> parents, std::vector<double> values) {
    RewardTable r;
    r.parents = std::move(parents);
    r.values = std::move(values);
    return r;
}

std::vector<double> one_hot(int domain, int value) {
    std::vector<double> row(domain, 0.0);
    row[value] = 1.0;
    return row;
}

void append(std::vector<double>& table, const std::vector<double>& row) {
    table.insert(table.end(), row.begin(), row.end());
}

}  // namespace

Domain gen_housesearch(const HousesearchParams& p, bool isd) {
    const int R = p.num_rooms;
    Domain d;
    d.name = isd ? "housesearch-isd" : "housesearch";
    d.agent = 1;
    FactoredPosg& m = d.model;
    m.num_agents = 2;
    m.num_actions = {3, 3};  // left, stay, right
    m.num_observations = {2 * R, 2 * R};
    m.horizon = p.horizon;
    m.gamma = p.gamma;
    m.dbn.factors = {{0, "l1", R}, {1, "l2", R}, {2, "ltgt", R}, {3, "f", 2}};

    // Movement on the line: the intended room with failure probability, walls
    // clamp, stay never fails.
    auto move_cpt = [&](int factor, int agent) {
        std::vector<double> table;
        for (int l = 0; l < R; ++l)
            for (int a = 0; a < 3; ++a) {
                int dest = std::clamp(l + a - 1, 0, R - 1);
                std::vector<double> row(R, 0.0);
                if (dest == l) {
                    row[l] = 1.0;
                } else {
                    row[dest] = 1.0 - p.move_fail;
                    row[l] = p.move_fail;
                }
                append(table, row);
            }
        return cpt({prev_factor(factor), action_node(agent)}, R, std::move(table));
    };
    m.dbn.factor_cpts.push_back(move_cpt(0, 0));
    m.dbn.factor_cpts.push_back(move_cpt(1, 1));

    {
        std::vector<double> table;
        for (int l = 0; l < R; ++l) {
            std::vector<double> row(R, 0.0);
            if (p.target_static) {
                row[l] = 1.0;
            } else {
                std::vector<int> nbrs;
                if (l > 0) nbrs.push_back(l - 1);
                if (l < R - 1) nbrs.push_back(l + 1);
                row[l] = 0.5;
                for (int n : nbrs) row[n] += 0.5 / nbrs.size();
            }
            append(table, row);
        }
        m.dbn.factor_cpts.push_back(cpt({prev_factor(2)}, R, std::move(table)));
    }

    // Found flag: sticky once on; otherwise either robot detects when within
    // the nearness radius of the target. The ISD variant reads the fresh
    // locations, the across-stage variant the previous ones (one-step delay).
    {
        auto loc = [&](int f) { return isd ? next_factor(f) : prev_factor(f); };
        std::vector<double> table;
        for (int f = 0; f < 2; ++f)
            for (int l1 = 0; l1 < R; ++l1)
                for (int l2 = 0; l2 < R; ++l2)
                    for (int lt = 0; lt < R; ++lt) {
                        double q;
                        if (f == 1) {
                            q = 1.0;
                        } else {
                            double p1 = std::abs(l1 - lt) <= p.nearness_radius ? p.detect : 0.0;
                            double p2 = std::abs(l2 - lt) <= p.nearness_radius ? p.detect : 0.0;
                            q = 1.0 - (1.0 - p1) * (1.0 - p2);
                        }
                        append(table, {1.0 - q, q});
                    }
        m.dbn.factor_cpts.push_back(cpt({prev_factor(3), loc(0), loc(1), loc(2)}, 2, std::move(table)));
    }

    // Each robot observes its own fresh location and the found flag exactly.
    auto obs_cpt = [&](int loc_factor) {
        std::vector<double> table;
        for (int l = 0; l < R; ++l)
            for (int f = 0; f < 2; ++f) append(table, one_hot(2 * R, l * 2 + f));
        return cpt({next_factor(loc_factor), next_factor(3)}, 2 * R, std::move(table));
    };
    m.dbn.observation_cpts.push_back(obs_cpt(0));
    m.dbn.observation_cpts.push_back(obs_cpt(1));

    // Movement cost plus the time penalty while hidden plus the detection
    // bonus on the switching step.
    auto reward = [&](int agent) {
        std::vector<double> values;
        for (int a = 0; a < 3; ++a)
            for (int f = 0; f < 2; ++f)
                for (int fn = 0; fn < 2; ++fn) {
                    double v = (a == 1 ? 0.0 : p.c_move);
                    if (f == 0) v += p.c_time;
                    if (f == 0 && fn == 1) v += p.r_detect;
                    values.push_back(v);
                }
        return reward_table({action_node(agent), prev_factor(3), next_factor(3)},
                            std::move(values));
    };
    m.rewards.push_back(reward(0));
    m.rewards.push_back(reward(1));

    // Robots start at opposite ends; the target is uniform; nothing found.
    m.initial_bn.cpts.push_back(cpt({}, R, one_hot(R, 0)));
    m.initial_bn.cpts.push_back(cpt({}, R, one_hot(R, R - 1)));
    m.initial_bn.cpts.push_back(cpt({}, R, std::vector<double>(R, 1.0 / R)));
    m.initial_bn.cpts.push_back(cpt({}, 2, one_hot(2, 0)));
    m.finalize();

    d.lsf.modeled = {{0}, {1, 2, 3}};
    d.dset.tracked = {{false, 1, Retention::FullHistory},
                      {false, 2, Retention::FullHistory},
                      {false, 3, Retention::FullHistory}};

    // The searcher sweeps: right until the far wall, then left. Its
    // observation encodes its own location, so a reactive rule suffices.
    Policy sweep;
    sweep.kind = Policy::Kind::Reactive;
    sweep.reactive[-1] = one_hot(3, 2);
    for (int o = 0; o < 2 * R; ++o) sweep.reactive[o] = one_hot(3, o / 2 < R - 1 ? 2 : 0);
    d.policies = {sweep, Policy{}};
    return d;
}

Domain gen_planetary(const PlanetaryParams& p) {
    const int L = p.grid_length;
    Domain d;
    d.name = "planetary";
    d.agent = 1;  // the rover
    FactoredPosg& m = d.model;
    m.num_agents = 2;
    m.num_actions = {2, 2};  // satellite: NOOP/PLAN; rover: stay/forward
    m.num_observations = {2, 2 * L};
    m.horizon = p.horizon;
    m.gamma = p.gamma;
    m.dbn.factors = {{0, "pl", 2}, {1, "pos", L}};

    // Plan availability: latched once computed or transmitted.
    m.dbn.factor_cpts.push_back(
        cpt({prev_factor(0), action_node(0)}, 2, {1, 0, 0, 1, 0, 1, 0, 1}));

    // Rover motion: forward succeeds more often with a plan; the goal cell
    // is absorbing.
    {
        std::vector<double> table;
        for (int pos = 0; pos < L; ++pos)
            for (int a = 0; a < 2; ++a)
                for (int pl = 0; pl < 2; ++pl) {
                    std::vector<double> row(L, 0.0);
                    if (a == 0 || pos == L - 1) {
                        row[pos] = 1.0;
                    } else {
                        double s = pl ? p.plan_success : p.base_success;
                        row[pos + 1] = s;
                        row[pos] = 1.0 - s;
                    }
                    append(table, row);
                }
        m.dbn.factor_cpts.push_back(
            cpt({prev_factor(1), action_node(1), prev_factor(0)}, L, std::move(table)));
    }

    m.dbn.observation_cpts.push_back(cpt({next_factor(0)}, 2, {1, 0, 0, 1}));
    {
        std::vector<double> table;
        for (int pos = 0; pos < L; ++pos)
            for (int pl = 0; pl < 2; ++pl) append(table, one_hot(2 * L, pos * 2 + pl));
        m.dbn.observation_cpts.push_back(
            cpt({next_factor(1), next_factor(0)}, 2 * L, std::move(table)));
    }

    m.rewards.push_back(reward_table({action_node(0)}, {0.0, p.plan_cost}));
    {
        std::vector<double> values;
        for (int a = 0; a < 2; ++a)
            for (int pos = 0; pos < L; ++pos)
                values.push_back((a == 1 ? p.step_cost : 0.0) + (pos == L - 1 ? p.goal_reward : 0.0));
        m.rewards.push_back(reward_table({action_node(1), next_factor(1)}, std::move(values)));
    }

    m.initial_bn.cpts.push_back(cpt({}, 2, one_hot(2, 0)));
    m.initial_bn.cpts.push_back(cpt({}, L, one_hot(L, 0)));
    m.finalize();

    d.lsf.modeled = {{0}, {0, 1}};
    d.dset.tracked = {{false, 0, Retention::FullHistory}};

    Policy sat;
    sat.kind = Policy::Kind::Reactive;
    std::vector<double> dist = {1.0 - p.plan_prob, p.plan_prob};
    sat.reactive[-1] = dist;
    sat.reactive[0] = dist;
    sat.reactive[1] = dist;
    d.policies = {sat, Policy{}};
    return d;
}

Domain gen_chain(ChainVariant variant) {
    Domain d;
    FactoredPosg& m = d.model;
    m.num_agents = 1;
    m.num_actions = {1};
    m.horizon = 3;
    m.gamma = 1.0;
    d.agent = 0;
    d.policies = {Policy{}};

    if (variant == ChainVariant::Fig10) {
        d.name = "chain-fig10";
        m.num_observations = {2};
        m.dbn.factors = {{0, "A", 2}, {1, "B", 2}};
        m.dbn.factor_cpts.push_back(cpt({prev_factor(0)}, 2, {0.8, 0.2, 0.2, 0.8}));
        m.dbn.factor_cpts.push_back(
            cpt({prev_factor(0), prev_factor(1)}, 2, {0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.1, 0.9}));
        m.dbn.observation_cpts.push_back(cpt({next_factor(1)}, 2, {0.85, 0.15, 0.15, 0.85}));
        m.rewards.push_back(reward_table({next_factor(1)}, {0.0, 1.0}));
        m.initial_bn.cpts.push_back(cpt({}, 2, {0.6, 0.4}));
        m.initial_bn.cpts.push_back(cpt({prev_factor(0)}, 2, {0.7, 0.3, 0.2, 0.8}));
        d.lsf.modeled = {{1}};
        d.dset.tracked = {{false, 1, Retention::FullHistory}};
    } else {
        // Fig11: C is disconnected from A and B in the dynamics but a
        // stage-0 ancestor of A, and the observation leaks C at every stage.
        // The history of B alone then fails to separate; adding just C^0
        // restores separation.
        d.name = "chain-fig11";
        m.num_observations = {4};
        m.dbn.factors = {{0, "A", 2}, {1, "B", 2}, {2, "C", 2}};
        m.dbn.factor_cpts.push_back(cpt({prev_factor(0)}, 2, {0.8, 0.2, 0.2, 0.8}));
        m.dbn.factor_cpts.push_back(
            cpt({prev_factor(0), prev_factor(1)}, 2, {0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.1, 0.9}));
        m.dbn.factor_cpts.push_back(cpt({prev_factor(2)}, 2, {0.9, 0.1, 0.1, 0.9}));
        {
            std::vector<double> table;
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) append(table, one_hot(4, b * 2 + c));
            m.dbn.observation_cpts.push_back(
                cpt({next_factor(1), next_factor(2)}, 4, std::move(table)));
        }
        m.rewards.push_back(reward_table({next_factor(1)}, {0.0, 1.0}));
        m.initial_bn.cpts.push_back(cpt({prev_factor(2)}, 2, {0.8, 0.2, 0.3, 0.7}));
        m.initial_bn.cpts.push_back(cpt({prev_factor(0)}, 2, {0.7, 0.3, 0.2, 0.8}));
        m.initial_bn.cpts.push_back(cpt({}, 2, {0.5, 0.5}));
        d.lsf.modeled = {{1, 2}};
        d.dset.tracked = {{false, 1, Retention::FullHistory},
                          {false, 2, Retention::Stage0Only}};
    }
    m.finalize();
    return d;
}

namespace {

// Upper bound on full-horizon trajectories accepted from the random
// generator; keeps every property-test instance cheap for exact inference.
constexpr std::int64_t kRandomTrajBudget = 200'000;

Domain gen_random_once(const RandomParams& prm, std::mt19937& rng, unsigned seed) {
    auto rint = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto rreal = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto coin = [&](double p) { return rreal(0.0, 1.0) < p; };

    Domain d;
    d.name = "random-" + std::to_string(seed);
    d.agent = 0;
    FactoredPosg& m = d.model;
    m.num_agents = 2;
    m.num_actions = {2, 2};
    m.num_observations = {2, 2};
    m.horizon = rint(prm.min_horizon, prm.max_horizon);
    m.gamma = 1.0;

    const int nf = rint(prm.min_factors, prm.max_factors);
    for (int f = 0; f < nf; ++f) m.dbn.factors.push_back({f, "x" + std::to_string(f), 2});

    // Modeled set for the protagonist: nonempty, never everything, so at
    // least one unmodeled factor exists.
    std::vector<int> order(nf);
    for (int f = 0; f < nf; ++f) order[f] = f;
    std::shuffle(order.begin(), order.end(), rng);
    const int msize = rint(1, nf - 1);
    std::set<int> modeled(order.begin(), order.begin() + msize);
    std::set<int> unmodeled(order.begin() + msize, order.end());

    auto fill_cpt = [&](Cpt& c) {
        std::int64_t rows = 1;
        for (const NodeRef& pr : c.parents) rows *= m.node_domain(pr);
        for (std::int64_t r = 0; r < rows; ++r) {
            if (coin(prm.det_row_prob)) {
                append(c.table, one_hot(c.child_domain, rint(0, c.child_domain - 1)));
            } else {
                std::vector<double> row(c.child_domain);
                double sum = 0;
                for (double& x : row) sum += (x = rreal(0.1, 1.0));
                for (double& x : row) x /= sum;
                append(c.table, row);
            }
        }
    };

    for (int f = 0; f < nf; ++f) {
        Cpt c;
        c.child_domain = 2;
        c.parents = {prev_factor(f)};
        std::vector<NodeRef> candidates;
        for (int g = 0; g < nf; ++g)
            if (g != f) candidates.push_back(prev_factor(g));
        candidates.push_back(action_node(0));
        candidates.push_back(action_node(1));
        std::shuffle(candidates.begin(), candidates.end(), rng);
        int extra = 0;
        for (const NodeRef& cand : candidates) {
            if (extra >= 2) break;
            if (coin(prm.edge_density)) {
                c.parents.push_back(cand);
                ++extra;
            }
        }
        fill_cpt(c);
        m.dbn.factor_cpts.push_back(std::move(c));
    }

    // Guarantee at least one influence link into the modeled part.
    bool has_link = false;
    for (int f : modeled)
        for (const NodeRef& pr : m.dbn.factor_cpts[f].parents) {
            if (pr.kind == NodeRef::Kind::PrevFactor && unmodeled.count(pr.id)) has_link = true;
            if (pr.kind == NodeRef::Kind::Action && pr.id == 1) has_link = true;
        }
    if (!has_link) {
        int f = *std::next(modeled.begin(), rint(0, msize - 1));
        int u = *std::next(unmodeled.begin(), rint(0, static_cast<int>(unmodeled.size()) - 1));
        Cpt& c = m.dbn.factor_cpts[f];
        c.parents.push_back(prev_factor(u));
        c.table.clear();
        fill_cpt(c);
    }

    // Protagonist observation and reward reference modeled factors only, so
    // the local-form requirements hold by construction.
    std::vector<int> mlist(modeled.begin(), modeled.end());
    {
        Cpt o0;
        o0.child_domain = 2;
        o0.parents = {next_factor(mlist[rint(0, msize - 1)])};
        if (msize > 1 && coin(0.5)) {
            int g = mlist[rint(0, msize - 1)];
            if (next_factor(g) != o0.parents[0]) o0.parents.push_back(next_factor(g));
        }
        fill_cpt(o0);
        m.dbn.observation_cpts.push_back(std::move(o0));
        Cpt o1;
        o1.child_domain = 2;
        o1.parents = {next_factor(rint(0, nf - 1))};
        fill_cpt(o1);
        m.dbn.observation_cpts.push_back(std::move(o1));
    }
    {
        RewardTable r0;
        r0.parents = {action_node(0), next_factor(mlist[rint(0, msize - 1)])};
        if (coin(0.5)) r0.parents.push_back(prev_factor(mlist[rint(0, msize - 1)]));
        std::int64_t rows = 1;
        for (const NodeRef& pr : r0.parents) rows *= m.node_domain(pr);
        for (std::int64_t k = 0; k < rows; ++k) r0.values.push_back(rreal(-1.0, 1.0));
        m.rewards.push_back(std::move(r0));
        RewardTable r1;
        r1.parents = {action_node(1)};
        r1.values = {rreal(-1.0, 1.0), rreal(-1.0, 1.0)};
        m.rewards.push_back(std::move(r1));
    }

    for (int f = 0; f < nf; ++f) {
        Cpt c;
        c.child_domain = 2;
        if (f > 0 && coin(0.5)) c.parents = {prev_factor(rint(0, f - 1))};
        fill_cpt(c);
        m.initial_bn.cpts.push_back(std::move(c));
    }
    m.finalize();

    d.lsf.modeled = {modeled, unmodeled};

    Policy opp;
    opp.kind = Policy::Kind::Reactive;
    for (int key = -1; key < 2; ++key) {
        if (coin(0.5)) {
            opp.reactive[key] = one_hot(2, rint(0, 1));
        } else {
            double q = rreal(0.2, 0.8);
            opp.reactive[key] = {q, 1.0 - q};
        }
    }
    d.policies = {Policy{}, opp};

    // Start from the universal pattern, then greedily drop entries that are
    // not needed for separation.
    for (int f : mlist) d.dset.tracked.push_back({false, f, Retention::FullHistory});
    d.dset.tracked.push_back({true, -1, Retention::FullHistory});
    return d;
}

}  // namespace

Domain gen_random(const RandomParams& prm, unsigned seed) {
    std::mt19937 rng(seed);
    Domain d;
    // Reject draws whose exact-inference workload would be too large; the
    // retry consumes more of the same deterministic stream, so the result is
    // still a pure function of the seed.
    for (;;) {
        d = gen_random_once(prm, rng, seed);
        UnrolledNet net(d.model, d.policies, d.agent, d.model.horizon);
        EnumerateOptions opt;
        opt.cap = kRandomTrajBudget;
        try {
            count_trajectories(net, opt);
            break;
        } catch (const CapExceeded&) {
            // re-roll
        }
    }
    if (prm.shrink_dset) {
        for (std::size_t k = d.dset.tracked.size(); k-- > 0;) {
            DSetSpec candidate;
            for (std::size_t j = 0; j < d.dset.tracked.size(); ++j)
                if (j != k) candidate.tracked.push_back(d.dset.tracked[j]);
            try {
                compute_influence(d.model, d.lsf, d.agent, d.policies, candidate);
                d.dset = std::move(candidate);
            } catch (const DSetNotSeparating&) {
                // keep the entry
            }
        }
    }
    return d;
}

}  // namespace iba
