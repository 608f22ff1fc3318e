#include "iba/unrolled.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace iba {

UnrolledNet::UnrolledNet(const FactoredPosg& m, const std::vector<Policy>& policies, int agent,
                         int horizon)
    : m_(&m), policies_(policies), agent_(agent), h_(horizon) {
    const int nf = m.num_factors();
    factor_idx_.assign(h_ + 1, std::vector<int>(nf, -1));
    action_idx_.assign(std::max(h_, 0), std::vector<int>(m.num_agents, -1));
    obs_idx_.assign(std::max(h_, 0), std::vector<int>(m.num_agents, -1));

    auto add = [&](Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    };

    // Stage 0 in initial-BN order, then per transition: actions, next-slice
    // factors in same-slice topological order, observations. This order is
    // topological for the whole net, including policy edges.
    for (int f : initial_bn_topo_order(m))
        factor_idx_[0][f] = add({Node::Kind::Factor, f, 0, m.factor_domain(f), {}});
    for (int f = 0; f < nf; ++f)
        for (const auto& p : m.initial_bn.cpts[f].parents)
            nodes_[factor_idx_[0][f]].parents.push_back(factor_idx_[0][p.id]);

    const auto trans_order = next_slice_topo_order(m);
    for (int t = 0; t < h_; ++t) {
        for (int j = 0; j < m.num_agents; ++j) {
            Node n{Node::Kind::Action, j, t, m.num_actions[j], {}};
            if (j != agent_) {
                for (int k = 0; k < t; ++k) {
                    n.parents.push_back(action_idx_[k][j]);
                    n.parents.push_back(obs_idx_[k][j]);
                }
            }
            action_idx_[t][j] = add(std::move(n));
        }
        for (int f : trans_order)
            factor_idx_[t + 1][f] = add({Node::Kind::Factor, f, t + 1, m.factor_domain(f), {}});
        for (int f = 0; f < nf; ++f) {
            auto& n = nodes_[factor_idx_[t + 1][f]];
            for (const auto& p : m.dbn.factor_cpts[f].parents) {
                if (p.kind == NodeRef::Kind::PrevFactor)
                    n.parents.push_back(factor_idx_[t][p.id]);
                else if (p.kind == NodeRef::Kind::NextFactor)
                    n.parents.push_back(factor_idx_[t + 1][p.id]);
                else
                    n.parents.push_back(action_idx_[t][p.id]);
            }
        }
        for (int j = 0; j < m.num_agents; ++j) {
            Node n{Node::Kind::Obs, j, t + 1, m.num_observations[j], {}};
            for (const auto& p : m.dbn.observation_cpts[j].parents) {
                if (p.kind == NodeRef::Kind::NextFactor)
                    n.parents.push_back(factor_idx_[t + 1][p.id]);
                else
                    n.parents.push_back(action_idx_[t][p.id]);
            }
            obs_idx_[t][j] = add(std::move(n));
        }
    }
}

void UnrolledNet::node_dist(int idx, const std::vector<int>& assignment,
                            std::vector<double>& out) const {
    const Node& n = nodes_[idx];
    out.resize(n.domain);
    const Cpt* cpt = nullptr;
    if (n.kind == Node::Kind::Factor)
        cpt = n.stage == 0 ? &m_->initial_bn.cpts[n.id] : &m_->dbn.factor_cpts[n.id];
    else if (n.kind == Node::Kind::Obs)
        cpt = &m_->dbn.observation_cpts[n.id];
    if (cpt) {
        std::int64_t row = 0;
        for (std::size_t k = 0; k < n.parents.size(); ++k)
            row = row * cpt->radix.sizes()[k] + assignment[n.parents[k]];
        // Row index computed incrementally is identical to radix.index.
        const double* src = cpt->row_at(row);
        std::copy(src, src + n.domain, out.begin());
        return;
    }
    // Opponent action node: policy applied to its AOH.
    const auto& dist = policies_[n.id].action_dist(aoh_of(assignment, n.id, n.stage));
    std::copy(dist.begin(), dist.end(), out.begin());
}

std::vector<int> UnrolledNet::aoh_of(const std::vector<int>& assignment, int j, int t) const {
    std::vector<int> aoh;
    aoh.reserve(2 * t);
    for (int k = 0; k < t; ++k) {
        aoh.push_back(assignment[action_node(j, k)]);
        aoh.push_back(assignment[obs_node(j, k + 1)]);
    }
    return aoh;
}

namespace {

struct Enumerator {
    const UnrolledNet& net;
    const EnumerateOptions& opt;
    const std::function<void(const std::vector<int>&, double)>& visit;
    std::vector<int> assignment;
    std::vector<int> evidence;  // per node, -1 if unconstrained
    std::vector<double> dist;
    std::int64_t leaves = 0;

    void run() {
        assignment.assign(net.num_nodes(), -1);
        evidence.assign(net.num_nodes(), -1);
        for (auto [n, v] : opt.evidence) evidence[n] = v;
        descend(0, 1.0);
    }

    void descend(int idx, double weight) {
        if (idx == net.num_nodes()) {
            if (++leaves > opt.cap)
                throw CapExceeded("trajectory enumeration exceeded cap of " +
                                  std::to_string(opt.cap));
            visit(assignment, weight);
            return;
        }
        const auto& n = net.node(idx);
        if (n.kind == UnrolledNet::Node::Kind::Action && n.id == net.agent()) {
            switch (opt.mode) {
                case ProtagonistMode::Plan: {
                    int a = opt.plan[n.stage];
                    if (evidence[idx] >= 0 && evidence[idx] != a) return;
                    assignment[idx] = a;
                    descend(idx + 1, weight);
                    break;
                }
                case ProtagonistMode::PolicyTree: {
                    const auto& d = opt.policy->action_dist(
                        net.aoh_of(assignment, net.agent(), n.stage));
                    branch(idx, weight, d.data(), n.domain);
                    break;
                }
                case ProtagonistMode::Uniform: {
                    double p = 1.0 / n.domain;
                    for (int a = 0; a < n.domain; ++a) {
                        if (evidence[idx] >= 0 && evidence[idx] != a) continue;
                        assignment[idx] = a;
                        descend(idx + 1, weight * p);
                    }
                    break;
                }
            }
            assignment[idx] = -1;
            return;
        }
        std::vector<double> local(n.domain);
        net.node_dist(idx, assignment, local);
        branch(idx, weight, local.data(), n.domain);
        assignment[idx] = -1;
    }

    void branch(int idx, double weight, const double* p, int domain) {
        for (int v = 0; v < domain; ++v) {
            if (p[v] <= 0.0) continue;
            if (evidence[idx] >= 0 && evidence[idx] != v) continue;
            assignment[idx] = v;
            descend(idx + 1, weight * p[v]);
        }
    }
};

}  // namespace

void enumerate(const UnrolledNet& net, const EnumerateOptions& opt,
               const std::function<void(const std::vector<int>&, double)>& visit) {
    Enumerator e{net, opt, visit};
    e.run();
}

std::int64_t count_trajectories(const UnrolledNet& net, const EnumerateOptions& opt) {
    std::int64_t n = 0;
    enumerate(net, opt, [&](const std::vector<int>&, double) { ++n; });
    return n;
}

std::map<std::vector<int>, double> query(const UnrolledNet& net, const std::vector<int>& targets,
                                         const std::vector<std::pair<int, int>>& evidence,
                                         const EnumerateOptions& opt) {
    EnumerateOptions o = opt;
    o.evidence.insert(o.evidence.end(), evidence.begin(), evidence.end());
    std::map<std::vector<int>, double> acc;
    double total = 0.0;
    std::vector<int> key(targets.size());
    enumerate(net, o, [&](const std::vector<int>& a, double w) {
        for (std::size_t k = 0; k < targets.size(); ++k) key[k] = a[targets[k]];
        acc[key] += w;
        total += w;
    });
    if (total <= 0.0) throw ZeroEvidence("conditioning event has probability zero");
    for (auto& [k, v] : acc) v /= total;
    return acc;
}

DsepNumericResult check_dsep_numeric(const UnrolledNet& net, const std::vector<int>& sources,
                                     const std::vector<int>& shield, const std::vector<int>& rest,
                                     double tol, std::int64_t cap) {
    // One pass accumulates the joint over (shield, rest, sources); the
    // conditional-independence deltas are read off the normalized slices.
    std::map<std::vector<int>, std::map<std::vector<int>, std::map<std::vector<int>, double>>> acc;
    EnumerateOptions opt;
    opt.cap = cap;
    std::vector<int> ks(shield.size()), kr(rest.size()), ku(sources.size());
    enumerate(net, opt, [&](const std::vector<int>& a, double w) {
        for (std::size_t k = 0; k < shield.size(); ++k) ks[k] = a[shield[k]];
        for (std::size_t k = 0; k < rest.size(); ++k) kr[k] = a[rest[k]];
        for (std::size_t k = 0; k < sources.size(); ++k) ku[k] = a[sources[k]];
        acc[ks][kr][ku] += w;
    });

    DsepNumericResult res;
    for (const auto& [sv, by_rest] : acc) {
        std::map<std::vector<int>, double> marginal;  // P(sources | shield)
        double total = 0.0;
        for (const auto& [rv, by_src] : by_rest)
            for (const auto& [uv, w] : by_src) {
                marginal[uv] += w;
                total += w;
            }
        for (auto& [uv, w] : marginal) w /= total;
        for (const auto& [rv, by_src] : by_rest) {
            double rest_mass = 0.0;
            for (const auto& [uv, w] : by_src) rest_mass += w;
            for (const auto& [uv, p] : marginal) {
                auto it = by_src.find(uv);
                double cond = it == by_src.end() ? 0.0 : it->second / rest_mass;
                res.max_violation = std::max(res.max_violation, std::abs(cond - p));
            }
        }
    }
    res.separated = res.max_violation <= tol;
    return res;
}

bool check_dsep_graph(const UnrolledNet& net, const std::vector<int>& sources,
                      const std::vector<int>& shield, const std::vector<int>& rest) {
    const int n = net.num_nodes();
    std::vector<char> relevant(n, 0), in_shield(n, 0);
    for (int v : shield) in_shield[v] = 1;

    // Ancestral closure of sources, shield, and rest.
    std::vector<int> stack;
    auto push = [&](int v) {
        if (!relevant[v]) {
            relevant[v] = 1;
            stack.push_back(v);
        }
    };
    for (int v : sources) push(v);
    for (int v : shield) push(v);
    for (int v : rest) push(v);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int p : net.node(v).parents) push(p);
    }

    // Moralize the subgraph induced by the ancestral closure.
    std::vector<std::set<int>> adj(n);
    auto link = [&](int a, int b) {
        if (a == b) return;
        adj[a].insert(b);
        adj[b].insert(a);
    };
    for (int v = 0; v < n; ++v) {
        if (!relevant[v]) continue;
        const auto& ps = net.node(v).parents;
        for (std::size_t a = 0; a < ps.size(); ++a) {
            if (!relevant[ps[a]]) continue;
            link(v, ps[a]);
            for (std::size_t b = a + 1; b < ps.size(); ++b)
                if (relevant[ps[b]]) link(ps[a], ps[b]);
        }
    }

    // Reachability from sources avoiding shield nodes.
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    for (int v : sources)
        if (!in_shield[v] && !seen[v]) {
            seen[v] = 1;
            q.push(v);
        }
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int w : adj[v])
            if (!seen[w] && !in_shield[w]) {
                seen[w] = 1;
                q.push(w);
            }
    }
    for (int v : rest)
        if (seen[v] && !in_shield[v]) return false;
    return true;
}

}  // namespace iba
