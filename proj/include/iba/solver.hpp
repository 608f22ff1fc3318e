#pragma once

#include "iba/model.hpp"
#include "iba/pomdp.hpp"

namespace iba {

struct ValueNode {
    int aoh = 0;
    int stage = 0;
    SparseBelief belief;
    std::vector<double> q;
    double value = 0.0;
    int best_action = 0;
    // Child node index per (action, observation) with positive probability,
    // alongside that observation's probability.
    std::map<std::pair<int, int>, std::pair<int, double>> children;
};

struct ValueTree {
    std::vector<ValueNode> nodes;  // index 0 is the root (empty history)
    AohInterner aohs;

    double root_value() const { return nodes[0].value; }
};

// Eq. (1): BU(b,a,o)(s') = O(o|a,s') sum_s T(s'|s,a) b(s) / P(o|b,a).
SparseBelief belief_update(BestResponsePomdp& p, const SparseBelief& b, int a, int o);

// Exact finite-horizon belief-tree solve. Memoization keys on the AOH (the
// belief is a deterministic function of it); ties in the argmax go to the
// lowest action index.
ValueTree solve(BestResponsePomdp& p, std::int64_t cap_aohs = kDefaultAohCap);

Policy extract_policy(const ValueTree& tree);

}  // namespace iba
