#include "iba/model.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace iba {

namespace {

std::vector<int> parent_sizes(const FactoredPosg& m, const std::vector<NodeRef>& parents) {
    std::vector<int> sizes;
    sizes.reserve(parents.size());
    for (const auto& p : parents) sizes.push_back(m.node_domain(p));
    return sizes;
}

bool node_ref_valid(const FactoredPosg& m, const NodeRef& r) {
    if (r.kind == NodeRef::Kind::Action) return r.id >= 0 && r.id < m.num_agents;
    return r.id >= 0 && r.id < m.num_factors();
}

// Topological order over next-slice factors induced by same-slice parent
// edges; returns empty optional on a cycle.
std::optional<std::vector<int>> topo_order(int n, const std::function<std::vector<int>(int)>& deps) {
    std::vector<int> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
    std::vector<int> order;
    bool cyclic = false;
    std::function<void(int)> visit = [&](int v) {
        if (state[v] == 2 || cyclic) return;
        if (state[v] == 1) {
            cyclic = true;
            return;
        }
        state[v] = 1;
        for (int d : deps(v)) visit(d);
        state[v] = 2;
        order.push_back(v);
    };
    for (int v = 0; v < n && !cyclic; ++v) visit(v);
    if (cyclic) return std::nullopt;
    return order;
}

void check_cpt_rows(const Cpt& c, const std::string& what, ValidationReport& out) {
    if (static_cast<std::int64_t>(c.table.size()) != c.radix.size() * c.child_domain) {
        out.push_back(what + ": table size mismatch");
        return;
    }
    for (std::int64_t r = 0; r < c.num_rows(); ++r) {
        const double* row = c.row_at(r);
        double sum = 0;
        for (int v = 0; v < c.child_domain; ++v) {
            if (!(row[v] >= 0.0 && row[v] <= 1.0 + kExactTol)) {
                out.push_back(what + ": entry out of [0,1] in row " + std::to_string(r));
                return;
            }
            sum += row[v];
        }
        if (std::abs(sum - 1.0) > kExactTol)
            out.push_back(what + ": row " + std::to_string(r) + " not normalized (sum=" +
                          std::to_string(sum) + ")");
    }
}

}  // namespace

void FactoredPosg::finalize() {
    auto build = [&](std::vector<NodeRef>& parents, MixedRadix& radix) {
        radix = MixedRadix(parent_sizes(*this, parents));
    };
    for (auto& c : dbn.factor_cpts) build(c.parents, c.radix);
    for (auto& c : dbn.observation_cpts) build(c.parents, c.radix);
    for (auto& c : initial_bn.cpts) build(c.parents, c.radix);
    for (auto& r : rewards) r.radix = MixedRadix(parent_sizes(*this, r.parents));
}

MixedRadix state_space(const FactoredPosg& m) {
    std::vector<int> sizes;
    for (const auto& f : m.dbn.factors) sizes.push_back(f.domain_size);
    return MixedRadix(sizes);
}

ValidationReport validate_model(const FactoredPosg& m) {
    ValidationReport out;
    const int nf = m.num_factors();
    if (m.num_agents < 1) out.push_back("model has no agents");
    if (static_cast<int>(m.num_actions.size()) != m.num_agents ||
        static_cast<int>(m.num_observations.size()) != m.num_agents) {
        out.push_back("action/observation alphabet count does not match agent count");
        return out;
    }
    for (int j = 0; j < m.num_agents; ++j) {
        if (m.num_actions[j] < 1) out.push_back("agent " + std::to_string(j) + ": empty action set");
        if (m.num_observations[j] < 1)
            out.push_back("agent " + std::to_string(j) + ": empty observation set");
    }
    std::set<std::string> names;
    for (int f = 0; f < nf; ++f) {
        if (m.dbn.factors[f].id != f) out.push_back("factor ids are not dense 0..n-1");
        if (m.dbn.factors[f].domain_size < 1)
            out.push_back("factor " + m.dbn.factors[f].name + ": empty domain");
        if (!names.insert(m.dbn.factors[f].name).second)
            out.push_back("duplicate factor name " + m.dbn.factors[f].name);
    }
    if (static_cast<int>(m.dbn.factor_cpts.size()) != nf) {
        out.push_back("expected one transition CPT per factor");
        return out;
    }
    if (static_cast<int>(m.dbn.observation_cpts.size()) != m.num_agents) {
        out.push_back("expected one observation CPT per agent");
        return out;
    }
    if (static_cast<int>(m.initial_bn.cpts.size()) != nf) {
        out.push_back("initial BN must cover every factor exactly once");
        return out;
    }
    if (static_cast<int>(m.rewards.size()) != m.num_agents) {
        out.push_back("expected one reward table per agent");
        return out;
    }
    if (m.horizon < 1) out.push_back("horizon must be at least 1");
    if (!(m.gamma >= 0.0 && m.gamma <= 1.0)) out.push_back("gamma must lie in [0,1]");

    for (int f = 0; f < nf; ++f) {
        const Cpt& c = m.dbn.factor_cpts[f];
        std::string what = "transition CPT of " + m.dbn.factors[f].name;
        if (c.child_domain != m.factor_domain(f)) out.push_back(what + ": child domain mismatch");
        for (const auto& p : c.parents) {
            if (!node_ref_valid(m, p)) out.push_back(what + ": dangling parent reference");
            if (p.kind == NodeRef::Kind::NextFactor && p.id == f)
                out.push_back(what + ": factor is its own same-slice parent");
        }
        check_cpt_rows(c, what, out);
    }
    for (int j = 0; j < m.num_agents; ++j) {
        const Cpt& c = m.dbn.observation_cpts[j];
        std::string what = "observation CPT of agent " + std::to_string(j);
        if (c.child_domain != m.num_observations[j]) out.push_back(what + ": child domain mismatch");
        for (const auto& p : c.parents) {
            if (!node_ref_valid(m, p)) out.push_back(what + ": dangling parent reference");
            if (p.kind == NodeRef::Kind::PrevFactor)
                out.push_back(what + ": observation parents must be next-slice factors or actions");
        }
        check_cpt_rows(c, what, out);
    }
    for (int f = 0; f < nf; ++f) {
        const Cpt& c = m.initial_bn.cpts[f];
        std::string what = "initial CPT of " + m.dbn.factors[f].name;
        if (c.child_domain != m.factor_domain(f)) out.push_back(what + ": child domain mismatch");
        for (const auto& p : c.parents) {
            if (p.kind != NodeRef::Kind::PrevFactor || !node_ref_valid(m, p))
                out.push_back(what + ": initial-BN parents must be stage-0 factors");
        }
        check_cpt_rows(c, what, out);
    }
    for (int j = 0; j < m.num_agents; ++j) {
        const RewardTable& r = m.rewards[j];
        std::string what = "reward table of agent " + std::to_string(j);
        for (const auto& p : r.parents)
            if (!node_ref_valid(m, p)) out.push_back(what + ": dangling parent reference");
        if (static_cast<std::int64_t>(r.values.size()) != r.radix.size())
            out.push_back(what + ": table size mismatch");
        if (!all_finite(r.values)) out.push_back(what + ": non-finite reward value");
    }

    // Same-slice dependencies among next-slice factors must be acyclic.
    auto next_deps = [&](int f) {
        std::vector<int> deps;
        for (const auto& p : m.dbn.factor_cpts[f].parents)
            if (p.kind == NodeRef::Kind::NextFactor && node_ref_valid(m, p)) deps.push_back(p.id);
        return deps;
    };
    if (!topo_order(nf, next_deps)) out.push_back("cyclic same-slice dependencies in the 2DBN");

    auto init_deps = [&](int f) {
        std::vector<int> deps;
        for (const auto& p : m.initial_bn.cpts[f].parents)
            if (node_ref_valid(m, p)) deps.push_back(p.id);
        return deps;
    };
    if (!topo_order(nf, init_deps)) out.push_back("cyclic initial Bayesian network");
    return out;
}

std::vector<int> next_slice_topo_order(const FactoredPosg& m) {
    auto deps = [&](int f) {
        std::vector<int> d;
        for (const auto& p : m.dbn.factor_cpts[f].parents)
            if (p.kind == NodeRef::Kind::NextFactor) d.push_back(p.id);
        return d;
    };
    auto order = topo_order(m.num_factors(), deps);
    if (!order) throw ModelError("cyclic same-slice dependencies in the 2DBN");
    return *order;
}

std::vector<int> initial_bn_topo_order(const FactoredPosg& m) {
    auto deps = [&](int f) {
        std::vector<int> d;
        for (const auto& p : m.initial_bn.cpts[f].parents) d.push_back(p.id);
        return d;
    };
    auto order = topo_order(m.num_factors(), deps);
    if (!order) throw ModelError("cyclic initial Bayesian network");
    return *order;
}

Classification classify_factors(const FactoredPosg& m, const LocalStateFunction& lsf, int agent) {
    const auto& S = lsf.modeled[agent];
    Classification out;
    out.cls.assign(m.num_factors(), FactorClass::Nmf);

    // Observation and reward nodes of the protagonist must not be parented
    // by foreign actions or unmodeled factors; that dependence has to be
    // relayed through a proxy factor first.
    for (const auto& p : m.dbn.observation_cpts[agent].parents) {
        bool foreign_action = p.kind == NodeRef::Kind::Action && p.id != agent;
        bool unmodeled = p.kind != NodeRef::Kind::Action && !S.count(p.id);
        if (foreign_action || unmodeled)
            throw InfluenceOnObservationOrReward(
                "observation node of agent " + std::to_string(agent) +
                " is parented by an external node; apply proxy_rewrite first");
    }
    for (const auto& p : m.rewards[agent].parents) {
        bool foreign_action = p.kind == NodeRef::Kind::Action && p.id != agent;
        bool unmodeled = p.kind != NodeRef::Kind::Action && !S.count(p.id);
        if (foreign_action || unmodeled)
            throw InfluenceOnObservationOrReward(
                "reward node of agent " + std::to_string(agent) +
                " is parented by an external node; apply proxy_rewrite first");
    }

    std::set<int> u_prev, u_actions, u_next;
    for (int f = 0; f < m.num_factors(); ++f) {
        if (!S.count(f)) {
            out.nmfs.push_back(f);
            continue;
        }
        bool local = true;
        std::vector<SourceRef> sources;
        for (const auto& p : m.dbn.factor_cpts[f].parents) {
            if (p.kind == NodeRef::Kind::Action) {
                if (p.id == agent) continue;
                local = false;
                u_actions.insert(p.id);
                sources.push_back({SourceRef::Kind::Action, p.id});
            } else if (!S.count(p.id)) {
                local = false;
                if (p.kind == NodeRef::Kind::PrevFactor) {
                    u_prev.insert(p.id);
                    sources.push_back({SourceRef::Kind::PrevFactor, p.id});
                } else {
                    u_next.insert(p.id);
                    sources.push_back({SourceRef::Kind::NextFactor, p.id});
                }
            }
        }
        out.cls[f] = local ? FactorClass::Olaf : FactorClass::Nlaf;
        (local ? out.olafs : out.nlafs).push_back(f);
        if (!local) {
            std::sort(sources.begin(), sources.end());
            sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
            out.links.sources_per_nlaf[f] = std::move(sources);
        }
    }
    out.links.u_prev.assign(u_prev.begin(), u_prev.end());
    out.links.u_actions.assign(u_actions.begin(), u_actions.end());
    out.links.u_next.assign(u_next.begin(), u_next.end());

    // Indirect sources: every 2DBN ancestor of an intra-stage source.
    // Next-slice ancestors recurse through their own CPTs; prev-slice
    // factors and actions are roots of the two-slice graph.
    std::set<int> seen_next;
    std::set<int> vpm, vpn, vact, vnm, vnn;
    bool v_own = false;
    std::function<void(int)> walk = [&](int g) {
        for (const auto& p : m.dbn.factor_cpts[g].parents) {
            if (p.kind == NodeRef::Kind::Action) {
                if (p.id == agent)
                    v_own = true;
                else
                    vact.insert(p.id);
            } else if (p.kind == NodeRef::Kind::PrevFactor) {
                (S.count(p.id) ? vpm : vpn).insert(p.id);
            } else {
                (S.count(p.id) ? vnm : vnn).insert(p.id);
                if (seen_next.insert(p.id).second) walk(p.id);
            }
        }
    };
    for (int g : u_next)
        if (seen_next.insert(g).second) walk(g);

    auto subtract = [](std::set<int>& a, const std::set<int>& b) {
        for (int x : b) a.erase(x);
    };
    subtract(vpn, u_prev);
    subtract(vact, u_actions);
    subtract(vnn, u_next);
    out.links.v_prev_modeled.assign(vpm.begin(), vpm.end());
    out.links.v_prev_nmf.assign(vpn.begin(), vpn.end());
    out.links.v_actions.assign(vact.begin(), vact.end());
    out.links.v_own_action = v_own;
    out.links.v_next_modeled.assign(vnm.begin(), vnm.end());
    out.links.v_next_nmf.assign(vnn.begin(), vnn.end());
    return out;
}

ValidationReport validate_lfm(const FactoredPosg& m, const LocalStateFunction& lsf, int agent) {
    ValidationReport out;
    const auto& S = lsf.modeled[agent];
    for (const auto& p : m.dbn.observation_cpts[agent].parents)
        if (p.kind != NodeRef::Kind::Action && !S.count(p.id))
            out.push_back("observation-relevant factor " + m.dbn.factors[p.id].name +
                          " not modeled");
    for (const auto& p : m.rewards[agent].parents)
        if (p.kind != NodeRef::Kind::Action && !S.count(p.id))
            out.push_back("reward-relevant factor " + m.dbn.factors[p.id].name + " not modeled");
    return out;
}

ProxyRewriteResult proxy_rewrite(const FactoredPosg& m, const LocalStateFunction& lsf, int agent) {
    ProxyRewriteResult res{m, lsf, 0};
    const auto& S = lsf.modeled[agent];

    auto offending = [&](const NodeRef& p) {
        if (p.kind == NodeRef::Kind::Action) return p.id != agent;
        return !S.count(p.id);
    };

    // Observation: the proxy carries the observation value itself. Its CPT
    // is the original observation CPT (next-slice parents become same-slice
    // parents), and the observation node becomes an identity read.
    {
        const Cpt& oc = m.dbn.observation_cpts[agent];
        bool bad = std::any_of(oc.parents.begin(), oc.parents.end(), offending);
        if (bad) {
            int pid = res.model.num_factors();
            Factor pf{pid, "proxy_obs_" + std::to_string(agent), oc.child_domain};
            res.model.dbn.factors.push_back(pf);
            Cpt pc;
            pc.parents = oc.parents;  // next-slice refs act as same-slice parents
            pc.child_domain = oc.child_domain;
            pc.table = oc.table;
            res.model.dbn.factor_cpts.push_back(pc);
            // Stage-0 value is immaterial (observations start at stage 1).
            Cpt init;
            init.child_domain = oc.child_domain;
            init.table.assign(oc.child_domain, 0.0);
            init.table[0] = 1.0;
            res.model.initial_bn.cpts.push_back(init);

            Cpt& noc = res.model.dbn.observation_cpts[agent];
            noc.parents = {next_factor(pid)};
            noc.child_domain = oc.child_domain;
            noc.table.assign(static_cast<std::size_t>(oc.child_domain) * oc.child_domain, 0.0);
            for (int v = 0; v < oc.child_domain; ++v)
                noc.table[static_cast<std::size_t>(v) * oc.child_domain + v] = 1.0;
            res.lsf.modeled[agent].insert(pid);
            ++res.num_proxies;
        }
    }

    // Reward: the proxy deterministically packs the offending parents'
    // values; the table is re-indexed to read the proxy instead.
    {
        const RewardTable& rt = m.rewards[agent];
        std::vector<int> bad_pos, good_pos;
        for (std::size_t k = 0; k < rt.parents.size(); ++k)
            (offending(rt.parents[k]) ? bad_pos : good_pos).push_back(static_cast<int>(k));
        if (!bad_pos.empty()) {
            std::vector<NodeRef> bad_parents;
            std::vector<int> bad_sizes;
            for (int k : bad_pos) {
                bad_parents.push_back(rt.parents[k]);
                bad_sizes.push_back(m.node_domain(rt.parents[k]));
            }
            MixedRadix bad_radix(bad_sizes);
            int pid = res.model.num_factors();
            Factor pf{pid, "proxy_rew_" + std::to_string(agent),
                      static_cast<int>(bad_radix.size())};
            res.model.dbn.factors.push_back(pf);
            Cpt pc;
            pc.parents = bad_parents;
            pc.child_domain = pf.domain_size;
            pc.table.assign(static_cast<std::size_t>(bad_radix.size()) * pf.domain_size, 0.0);
            for (std::int64_t r = 0; r < bad_radix.size(); ++r)
                pc.table[static_cast<std::size_t>(r) * pf.domain_size + r] = 1.0;
            res.model.dbn.factor_cpts.push_back(pc);
            Cpt init;
            init.child_domain = pf.domain_size;
            init.table.assign(pf.domain_size, 0.0);
            init.table[0] = 1.0;
            res.model.initial_bn.cpts.push_back(init);

            RewardTable& nrt = res.model.rewards[agent];
            std::vector<NodeRef> new_parents = {next_factor(pid)};
            std::vector<int> new_sizes = {pf.domain_size};
            for (int k : good_pos) {
                new_parents.push_back(rt.parents[k]);
                new_sizes.push_back(m.node_domain(rt.parents[k]));
            }
            MixedRadix new_radix(new_sizes);
            std::vector<double> new_values(new_radix.size());
            std::vector<int> old_vals(rt.parents.size());
            for (std::int64_t r = 0; r < new_radix.size(); ++r) {
                auto vals = new_radix.values(r);
                auto bad_vals = bad_radix.values(vals[0]);
                for (std::size_t k = 0; k < bad_pos.size(); ++k) old_vals[bad_pos[k]] = bad_vals[k];
                for (std::size_t k = 0; k < good_pos.size(); ++k)
                    old_vals[good_pos[k]] = vals[k + 1];
                new_values[r] = rt.values[rt.radix.index(old_vals)];
            }
            nrt.parents = std::move(new_parents);
            nrt.values = std::move(new_values);
            res.lsf.modeled[agent].insert(pid);
            ++res.num_proxies;
        }
    }

    res.model.finalize();
    return res;
}

ValidationReport validate_policy(const FactoredPosg& m, int agent, const Policy& pi) {
    ValidationReport out;
    auto check_dist = [&](const std::vector<double>& d, const std::string& what) {
        if (static_cast<int>(d.size()) != m.num_actions[agent]) {
            out.push_back(what + ": wrong distribution length");
            return;
        }
        double sum = std::accumulate(d.begin(), d.end(), 0.0);
        if (std::abs(sum - 1.0) > kExactTol) out.push_back(what + ": distribution not normalized");
        for (double p : d)
            if (!(p >= 0.0 && p <= 1.0 + kExactTol)) out.push_back(what + ": entry out of [0,1]");
    };
    if (pi.kind == Policy::Kind::Reactive) {
        if (!pi.reactive.count(-1)) out.push_back("reactive policy missing the empty-history row");
        for (const auto& [o, d] : pi.reactive)
            check_dist(d, "reactive row for observation " + std::to_string(o));
    } else {
        for (const auto& [aoh, d] : pi.tree)
            check_dist(d, "policy row for a history of length " + std::to_string(aoh.size()));
    }
    return out;
}

ValidationReport validate_dset(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                               const DSetSpec& dset) {
    ValidationReport out;
    std::set<int> seen;
    bool own_seen = false;
    for (const auto& e : dset.tracked) {
        if (e.own_action) {
            if (own_seen) out.push_back("own action tracked twice");
            own_seen = true;
            continue;
        }
        if (e.factor < 0 || e.factor >= m.num_factors()) {
            out.push_back("d-set references a nonexistent factor");
            continue;
        }
        if (!seen.insert(e.factor).second)
            out.push_back("factor " + m.dbn.factors[e.factor].name + " tracked twice");
        if (!lsf.modeled[agent].count(e.factor))
            out.push_back("d-set factor " + m.dbn.factors[e.factor].name +
                          " is not locally available");
    }
    return out;
}

}  // namespace iba
