#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iba/common.hpp"

namespace iba {

struct Factor {
    int id = 0;
    std::string name;
    int domain_size = 1;
};

// A reference to a node of the two-slice network: a factor at the previous
// slice, a factor at the next slice (also used for same-slice parents of
// observation nodes), or an agent's action node.
struct NodeRef {
    enum class Kind { PrevFactor, NextFactor, Action };
    Kind kind = Kind::PrevFactor;
    int id = 0;  // factor id or agent id

    friend bool operator==(const NodeRef&, const NodeRef&) = default;
    friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

inline NodeRef prev_factor(int f) { return {NodeRef::Kind::PrevFactor, f}; }
inline NodeRef next_factor(int f) { return {NodeRef::Kind::NextFactor, f}; }
inline NodeRef action_node(int agent) { return {NodeRef::Kind::Action, agent}; }

// Conditional probability table, indexed row-major by the declared parent
// order (last parent varies fastest). Parent order is part of the identity.
struct Cpt {
    std::vector<NodeRef> parents;
    int child_domain = 1;
    std::vector<double> table;  // num_rows * child_domain entries
    MixedRadix radix;           // over parent domains; set by finalize()

    const double* row(const std::vector<int>& parent_values) const {
        return table.data() + radix.index(parent_values) * child_domain;
    }
    const double* row_at(std::int64_t row_index) const {
        return table.data() + row_index * child_domain;
    }
    std::int64_t num_rows() const { return radix.size(); }
};

// Deterministic real-valued table with the same indexing scheme as Cpt.
struct RewardTable {
    std::vector<NodeRef> parents;
    std::vector<double> values;
    MixedRadix radix;

    double value_at(std::int64_t row_index) const { return values[row_index]; }
};

struct TwoSliceDbn {
    std::vector<Factor> factors;
    std::vector<Cpt> factor_cpts;       // one per next-slice factor, by factor id
    std::vector<Cpt> observation_cpts;  // one per agent, by agent id
};

// Initial belief as a Bayesian network over stage-0 factors. Parents of
// each CPT are stage-0 factors referenced with PrevFactor.
struct InitialBn {
    std::vector<Cpt> cpts;  // one per factor, by factor id
};

struct Policy {
    enum class Kind { ExplicitTree, Reactive };
    Kind kind = Kind::ExplicitTree;
    // ExplicitTree: key is the alternating sequence (a^0, o^1, a^1, ..., o^t);
    // the empty key gives the stage-0 distribution.
    std::map<std::vector<int>, std::vector<double>> tree;
    // Reactive: key is the last observation, -1 for the empty history.
    std::map<int, std::vector<double>> reactive;

    const std::vector<double>& action_dist(const std::vector<int>& aoh) const {
        if (kind == Kind::Reactive) {
            int key = aoh.empty() ? -1 : aoh.back();
            auto it = reactive.find(key);
            if (it == reactive.end())
                throw UnreachableHistory("reactive policy has no row for observation " +
                                         std::to_string(key));
            return it->second;
        }
        auto it = tree.find(aoh);
        if (it == tree.end())
            throw UnreachableHistory("policy undefined on an action-observation history of length " +
                                     std::to_string(aoh.size()));
        return it->second;
    }
};

enum class Retention { FullHistory, Stage0Only, LastValue };

struct DSetEntry {
    bool own_action = false;  // if true, tracks the agent's own actions (full history)
    int factor = -1;
    Retention retention = Retention::FullHistory;

    friend bool operator==(const DSetEntry&, const DSetEntry&) = default;
};

struct DSetSpec {
    std::vector<DSetEntry> tracked;
};

struct FactoredPosg {
    int num_agents = 0;
    std::vector<int> num_actions;       // per agent
    std::vector<int> num_observations;  // per agent
    TwoSliceDbn dbn;
    std::vector<RewardTable> rewards;  // per agent
    InitialBn initial_bn;
    int horizon = 1;
    double gamma = 1.0;

    int num_factors() const { return static_cast<int>(dbn.factors.size()); }
    int factor_domain(int f) const { return dbn.factors[f].domain_size; }
    int node_domain(const NodeRef& r) const {
        return r.kind == NodeRef::Kind::Action ? num_actions[r.id] : factor_domain(r.id);
    }

    // Computes parent radixes and checks table sizes; must be called after
    // construction and before any evaluation.
    void finalize();
};

struct LocalStateFunction {
    std::vector<std::set<int>> modeled;  // S(i) per agent
};

using ValidationReport = std::vector<std::string>;

enum class FactorClass { Olaf, Nlaf, Nmf };

// A direct influence source: a prev-slice unmodeled factor, a foreign
// action, or (with intra-stage dependencies) a next-slice unmodeled factor.
struct SourceRef {
    enum class Kind { PrevFactor, Action, NextFactor };
    Kind kind = Kind::PrevFactor;
    int id = 0;

    friend bool operator==(const SourceRef&, const SourceRef&) = default;
    friend auto operator<=>(const SourceRef&, const SourceRef&) = default;
};

struct InfluenceLinks {
    // Direct sources u.
    std::vector<int> u_prev;     // prev-slice NMF factor ids (sorted)
    std::vector<int> u_actions;  // foreign agent ids whose action parents an NLAF (sorted)
    std::vector<int> u_next;     // next-slice NMF factor ids parenting an NLAF (sorted; ISD only)
    // Indirect sources v: ancestors of the intra-stage sources in the 2DBN,
    // bucketed by where they live, minus anything already in u.
    std::vector<int> v_prev_modeled;
    std::vector<int> v_prev_nmf;
    std::vector<int> v_actions;  // foreign agents
    bool v_own_action = false;
    std::vector<int> v_next_modeled;
    std::vector<int> v_next_nmf;

    std::map<int, std::vector<SourceRef>> sources_per_nlaf;

    bool has_isd() const { return !u_next.empty(); }
    bool empty() const { return u_prev.empty() && u_actions.empty() && u_next.empty(); }
};

struct Classification {
    std::vector<FactorClass> cls;  // per factor
    std::vector<int> olafs, nlafs, nmfs;
    InfluenceLinks links;
};

ValidationReport validate_model(const FactoredPosg& m);
Classification classify_factors(const FactoredPosg& m, const LocalStateFunction& lsf, int agent);
ValidationReport validate_lfm(const FactoredPosg& m, const LocalStateFunction& lsf, int agent);

// Rewrites a model whose protagonist observation or reward node is parented
// by a foreign action or an unmodeled factor: a deterministic proxy factor is
// inserted so the offending dependence becomes an ordinary NLAF link.
struct ProxyRewriteResult {
    FactoredPosg model;
    LocalStateFunction lsf;
    int num_proxies = 0;
};
ProxyRewriteResult proxy_rewrite(const FactoredPosg& m, const LocalStateFunction& lsf, int agent);

// Mixed-radix space over all state factors, used for packing assignments.
MixedRadix state_space(const FactoredPosg& m);

// Evaluation orders; throw ModelError on a cycle.
std::vector<int> next_slice_topo_order(const FactoredPosg& m);
std::vector<int> initial_bn_topo_order(const FactoredPosg& m);

// Validates every distribution row of a policy for one agent.
ValidationReport validate_policy(const FactoredPosg& m, int agent, const Policy& pi);

ValidationReport validate_dset(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                               const DSetSpec& dset);

}  // namespace iba
