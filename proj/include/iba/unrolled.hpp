#pragma once

#include <functional>
#include <map>
#include <utility>

#include "iba/model.hpp"

namespace iba {

// The two-slice network plus fixed opponent policies, unrolled over a finite
// horizon into one acyclic net. The protagonist's action nodes are decision
// inputs: they carry no CPT and no parents (intervention semantics).
class UnrolledNet {
public:
    struct Node {
        enum class Kind { Factor, Action, Obs };
        Kind kind;
        int id;     // factor id, or agent id for actions/observations
        int stage;  // factors: 0..h, actions: 0..h-1, observations: 1..h
        int domain;
        std::vector<int> parents;  // node indices, in CPT parent order (policy
                                   // nodes: the full AOH, actions then observations alternating)
    };

    UnrolledNet(const FactoredPosg& m, const std::vector<Policy>& policies, int agent, int horizon);

    const FactoredPosg& model() const { return *m_; }
    int agent() const { return agent_; }
    int horizon() const { return h_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    const Node& node(int idx) const { return nodes_[idx]; }

    int factor_node(int f, int t) const { return factor_idx_[t][f]; }
    int action_node(int j, int t) const { return action_idx_[t][j]; }
    int obs_node(int j, int t) const { return obs_idx_[t - 1][j]; }

    // Conditional distribution of a chance node given the values of its
    // parents in `assignment`. Must not be called on protagonist actions.
    void node_dist(int idx, const std::vector<int>& assignment, std::vector<double>& out) const;

    // Agent j's action-observation history (a^0, o^1, ..., a^{t-1}, o^t)
    // read out of a full assignment prefix.
    std::vector<int> aoh_of(const std::vector<int>& assignment, int j, int t) const;

private:
    const FactoredPosg* m_;
    std::vector<Policy> policies_;
    int agent_;
    int h_;
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> factor_idx_;  // [stage][factor]
    std::vector<std::vector<int>> action_idx_;  // [stage][agent]
    std::vector<std::vector<int>> obs_idx_;     // [stage-1][agent]
};

enum class ProtagonistMode { Plan, PolicyTree, Uniform };

struct EnumerateOptions {
    ProtagonistMode mode = ProtagonistMode::Uniform;
    std::vector<int> plan;            // used when mode == Plan
    const Policy* policy = nullptr;   // used when mode == PolicyTree
    std::vector<std::pair<int, int>> evidence;  // (node, value) constraints
    std::int64_t cap = kDefaultTrajCap;
};

// Depth-first enumeration of every positive-weight full assignment; calls
// visit(assignment, weight) once per trajectory. Zero-probability branches
// are pruned eagerly; evidence restricts node supports in place.
void enumerate(const UnrolledNet& net, const EnumerateOptions& opt,
               const std::function<void(const std::vector<int>&, double)>& visit);

std::int64_t count_trajectories(const UnrolledNet& net, const EnumerateOptions& opt);

// Exact conditional P(targets | evidence) by enumeration.
// Throws ZeroEvidence when the evidence has probability zero.
std::map<std::vector<int>, double> query(const UnrolledNet& net, const std::vector<int>& targets,
                                         const std::vector<std::pair<int, int>>& evidence,
                                         const EnumerateOptions& opt = {});

struct DsepNumericResult {
    bool separated = true;
    double max_violation = 0.0;
};

// Verifies P(sources | rest, shield) = P(sources | shield) on every
// positive-probability joint assignment, under a uniformly randomizing
// protagonist (so all intervention branches are exercised).
DsepNumericResult check_dsep_numeric(const UnrolledNet& net, const std::vector<int>& sources,
                                     const std::vector<int>& shield, const std::vector<int>& rest,
                                     double tol = kDerivedTol,
                                     std::int64_t cap = kDefaultTrajCap);

// Ancestral-moral-graph d-separation test; sound for the graph (true implies
// conditional independence for every parameterization).
bool check_dsep_graph(const UnrolledNet& net, const std::vector<int>& sources,
                      const std::vector<int>& shield, const std::vector<int>& rest);

}  // namespace iba
