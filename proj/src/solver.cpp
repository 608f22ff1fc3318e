#include "iba/solver.hpp"

#include <algorithm>

namespace iba {

namespace {

// Pushforward of b through action a, plus the expected immediate reward.
struct Push {
    std::map<StateId, double> next;  // unconditional next-state distribution
    double reward = 0.0;
};

Push push_through(BestResponsePomdp& p, const SparseBelief& b, int a) {
    Push out;
    for (const auto& [s, pb] : b.probs) {
        for (const auto& [s2, pt] : p.transitions(s, a)) {
            double w = pb * pt;
            if (w <= 0.0) continue;
            out.next[s2] += w;
            out.reward += w * p.reward(s, a, s2);
        }
    }
    return out;
}

}  // namespace

SparseBelief belief_update(BestResponsePomdp& p, const SparseBelief& b, int a, int o) {
    auto push = push_through(p, b, a);
    double po = 0.0;
    std::map<StateId, double> numer;
    for (const auto& [s2, w] : push.next) {
        double q = w * p.observation(a, s2)[o];
        if (q > 0.0) {
            numer[s2] = q;
            po += q;
        }
    }
    if (po <= 0.0) throw ZeroProbObservation("observation has probability zero under (b, a)");
    SparseBelief out;
    out.probs.reserve(numer.size());
    for (const auto& [s2, q] : numer) out.probs.emplace_back(s2, q / po);
    return out;
}

namespace {

struct Solver {
    BestResponsePomdp& p;
    ValueTree& tree;
    std::int64_t cap;

    int expand(int aoh, int stage, SparseBelief belief) {
        if (static_cast<std::int64_t>(tree.nodes.size()) >= cap)
            throw CapExceeded("reachable AOH count exceeded cap of " + std::to_string(cap));
        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        ValueNode node;
        node.aoh = aoh;
        node.stage = stage;
        node.belief = std::move(belief);
        node.q.assign(p.num_actions(), 0.0);

        const bool last = stage == p.horizon() - 1;
        for (int a = 0; a < p.num_actions(); ++a) {
            auto push = push_through(p, node.belief, a);
            double q = push.reward;
            if (!last) {
                // Observation branch probabilities and posteriors.
                std::vector<double> po(p.num_observations(), 0.0);
                std::map<int, std::map<StateId, double>> numer;
                for (const auto& [s2, w] : push.next) {
                    const auto& od = p.observation(a, s2);
                    for (int o = 0; o < p.num_observations(); ++o) {
                        double x = w * od[o];
                        if (x > 0.0) {
                            po[o] += x;
                            numer[o][s2] += x;
                        }
                    }
                }
                for (int o = 0; o < p.num_observations(); ++o) {
                    if (po[o] <= 0.0) continue;
                    SparseBelief b2;
                    b2.probs.reserve(numer[o].size());
                    for (const auto& [s2, x] : numer[o]) b2.probs.emplace_back(s2, x / po[o]);
                    int child_aoh = tree.aohs.child(aoh, a, o);
                    int child = expand(child_aoh, stage + 1, std::move(b2));
                    node.children[{a, o}] = {child, po[o]};
                    q += p.gamma() * po[o] * tree.nodes[child].value;
                }
            }
            node.q[a] = q;
            if (a == 0 || q > node.value) {
                node.value = q;
                node.best_action = a;
            }
        }
        if (node.q.empty()) node.value = 0.0;
        tree.nodes[idx] = std::move(node);
        return idx;
    }
};

}  // namespace

ValueTree solve(BestResponsePomdp& p, std::int64_t cap_aohs) {
    if (p.horizon() < 1) throw ModelError("horizon must be at least 1");
    ValueTree tree;
    Solver s{p, tree, cap_aohs};
    s.expand(tree.aohs.empty_id(), 0, p.initial_belief());
    return tree;
}

Policy extract_policy(const ValueTree& tree) {
    Policy pi;
    pi.kind = Policy::Kind::ExplicitTree;
    for (const auto& node : tree.nodes) {
        std::vector<double> dist(node.q.size(), 0.0);
        dist[node.best_action] = 1.0;
        pi.tree[tree.aohs.sequence(node.aoh)] = std::move(dist);
    }
    return pi;
}

}  // namespace iba
