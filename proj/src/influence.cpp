#include "iba/influence.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace iba {

namespace {

std::vector<int> merge_sorted(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// Position of v in a sorted id list, or -1.
int pos_of(const std::vector<int>& xs, int v) {
    auto it = std::lower_bound(xs.begin(), xs.end(), v);
    if (it == xs.end() || *it != v) return -1;
    return static_cast<int>(it - xs.begin());
}

// Value of a CPT parent given a decoded source assignment uv and the
// modeled-side assignments. Anything not in u must be supplied by the caller.
int parent_from_sources(const SourceSpace& sp, const std::vector<int>& uv, const NodeRef& p,
                        const std::vector<int>& xprev, const std::vector<int>& xnext, int a_i) {
    int v = -1;
    switch (p.kind) {
        case NodeRef::Kind::PrevFactor: {
            int q = pos_of(sp.u_prev, p.id);
            v = q >= 0 ? uv[q] : xprev[p.id];
            break;
        }
        case NodeRef::Kind::Action: {
            int q = pos_of(sp.u_actions, p.id);
            v = q >= 0 ? uv[sp.u_prev.size() + q] : a_i;
            break;
        }
        case NodeRef::Kind::NextFactor: {
            int q = pos_of(sp.u_next, p.id);
            v = q >= 0 ? uv[sp.u_prev.size() + sp.u_actions.size() + q] : xnext[p.id];
            break;
        }
    }
    if (v < 0) throw ModelError("CPT parent not covered by sources or supplied assignment");
    return v;
}

struct StageDsep {
    bool ok = true;
    double violation = 0.0;
};

// D-separation of the stage-t sources from the agent's local region given
// the d-set, on the full-horizon net. The ancestral-graph test is a sound
// fast path; the numeric check is authoritative.
StageDsep stage_dsep(const UnrolledNet& net, const LocalStateFunction& lsf, int agent,
                     const DSetSpec& dset, int t, const std::vector<int>& src_factors,
                     const std::vector<int>& src_agents, bool with_histories, double tol,
                     std::int64_t cap) {
    std::vector<int> sources;
    for (int f : src_factors) sources.push_back(net.factor_node(f, t));
    for (int j : src_agents) {
        sources.push_back(net.action_node(j, t));
        if (with_histories)
            for (int k = 0; k < t; ++k) {
                sources.push_back(net.action_node(j, k));
                sources.push_back(net.obs_node(j, k + 1));
            }
    }
    auto shield = dset_key_nodes(net, dset, agent, t);
    std::set<int> taken(shield.begin(), shield.end());
    taken.insert(sources.begin(), sources.end());
    std::vector<int> rest;
    auto add = [&](int n) {
        if (!taken.count(n)) rest.push_back(n);
    };
    for (int f : lsf.modeled[agent])
        for (int k = 0; k <= t; ++k) add(net.factor_node(f, k));
    for (int k = 0; k < t; ++k) add(net.action_node(agent, k));
    for (int k = 1; k <= t; ++k) add(net.obs_node(agent, k));
    if (check_dsep_graph(net, sources, shield, rest)) return {};
    auto res = check_dsep_numeric(net, sources, shield, rest, tol, cap);
    return {res.separated, res.max_violation};
}

void normalize_rows(std::map<std::vector<int>, std::vector<double>>& acc, StageTable& out) {
    for (auto& [key, row] : acc) {
        double total = 0;
        for (double x : row) total += x;
        for (double& x : row) x /= total;
        out.rows[key] = InfluenceRow{std::move(row), true};
    }
}

// Enumerates the next-slice unmodeled intra-stage sources in CPT order and
// accumulates the product of their CPTs into the u-indexed row. The plug-in
// arguments <x_v^t, a_i, x_v^{t+1}> come from the conditioning tuple, the
// rest from <y_w^t, a_w^t> and the values generated along the way.
class IntraEval {
public:
    IntraEval(const FactoredPosg& m, const Classification& cls, const SourceSpace& sp,
              const std::vector<int>& w_prev, const std::vector<int>& w_agents)
        : m_(&m), sp_(&sp) {
        auto all = merge_sorted(sp.u_next, cls.links.v_next_nmf);
        for (int f : next_slice_topo_order(m))
            if (pos_of(all, f) >= 0) order_.push_back(f);
        for (int f : sp.u_prev) uprev_pos_.push_back(pos_of(w_prev, f));
        for (int j : sp.u_actions) uact_pos_.push_back(pos_of(w_agents, j));
        std::vector<int> order_pos(m.num_factors(), -1);
        for (std::size_t k = 0; k < order_.size(); ++k) order_pos[order_[k]] = static_cast<int>(k);
        for (int f : sp.u_next) unext_pos_.push_back(order_pos[f]);
        for (int g : order_) {
            std::vector<Slot> slots;
            for (const NodeRef& p : m.dbn.factor_cpts[g].parents) {
                Slot s;
                switch (p.kind) {
                    case NodeRef::Kind::PrevFactor:
                        s.where = pos_of(w_prev, p.id) >= 0 ? From::WPrev : From::CondPrev;
                        s.pos = s.where == From::WPrev ? pos_of(w_prev, p.id)
                                                       : pos_of(sp.cond_prev, p.id);
                        break;
                    case NodeRef::Kind::Action:
                        s.where = pos_of(w_agents, p.id) >= 0 ? From::WAction : From::OwnAction;
                        s.pos = pos_of(w_agents, p.id);
                        break;
                    case NodeRef::Kind::NextFactor:
                        s.where = order_pos[p.id] >= 0 ? From::Generated : From::CondNext;
                        s.pos = s.where == From::Generated ? order_pos[p.id]
                                                           : pos_of(sp.cond_next, p.id);
                        break;
                }
                if (s.where != From::OwnAction && s.pos < 0)
                    throw ModelError("intra-stage source parent outside the source closure");
                slots.push_back(s);
            }
            slots_.push_back(std::move(slots));
        }
    }

    void accumulate(const std::vector<int>& yw, const std::vector<int>& aw, int a_i,
                    const std::vector<int>& cond_prev, const std::vector<int>& cond_next,
                    double weight, std::vector<double>& row) const {
        std::vector<int> gen(order_.size(), -1);
        std::function<void(std::size_t, double)> rec = [&](std::size_t k, double w) {
            if (k == order_.size()) {
                std::vector<int> uv;
                uv.reserve(sp_->arity());
                for (int p : uprev_pos_) uv.push_back(yw[p]);
                for (int p : uact_pos_) uv.push_back(aw[p]);
                for (int p : unext_pos_) uv.push_back(gen[p]);
                row[sp_->radix.index(uv)] += w;
                return;
            }
            const Cpt& c = m_->dbn.factor_cpts[order_[k]];
            std::int64_t ridx = 0;
            for (std::size_t q = 0; q < slots_[k].size(); ++q) {
                const Slot& s = slots_[k][q];
                int v = 0;
                switch (s.where) {
                    case From::WPrev: v = yw[s.pos]; break;
                    case From::CondPrev: v = cond_prev[s.pos]; break;
                    case From::WAction: v = aw[s.pos]; break;
                    case From::OwnAction: v = a_i; break;
                    case From::Generated: v = gen[s.pos]; break;
                    case From::CondNext: v = cond_next[s.pos]; break;
                }
                ridx = ridx * c.radix.sizes()[q] + v;
            }
            const double* dist = c.row_at(ridx);
            for (int v = 0; v < c.child_domain; ++v) {
                if (dist[v] <= 0.0) continue;
                gen[k] = v;
                rec(k + 1, w * dist[v]);
            }
            gen[k] = -1;
        };
        rec(0, weight);
    }

private:
    enum class From { WPrev, CondPrev, WAction, OwnAction, Generated, CondNext };
    struct Slot {
        From where = From::WPrev;
        int pos = -1;
    };
    const FactoredPosg* m_;
    const SourceSpace* sp_;
    std::vector<int> order_;  // next-slice NMF sources, CPT evaluation order
    std::vector<std::vector<Slot>> slots_;
    std::vector<int> uprev_pos_, uact_pos_, unext_pos_;
};

// Mixed radix over the conditioning tuple <x_v^t, a_i, x_v^{t+1}>.
MixedRadix cond_radix(const FactoredPosg& m, const SourceSpace& sp, int agent) {
    std::vector<int> sizes;
    for (int f : sp.cond_prev) sizes.push_back(m.factor_domain(f));
    if (sp.cond_own_action) sizes.push_back(m.num_actions[agent]);
    for (int f : sp.cond_next) sizes.push_back(m.factor_domain(f));
    return MixedRadix(sizes);
}

void split_cond(const SourceSpace& sp, const std::vector<int>& cv, std::vector<int>& cp, int& a_i,
                std::vector<int>& cn) {
    std::size_t k = 0;
    cp.assign(cv.begin(), cv.begin() + sp.cond_prev.size());
    k = sp.cond_prev.size();
    a_i = sp.cond_own_action ? cv[k++] : -1;
    cn.assign(cv.begin() + k, cv.end());
}

void stage_dsep_gate(const UnrolledNet& net, const LocalStateFunction& lsf, int agent,
                     const DSetSpec& dset, int horizon, const std::vector<int>& src_factors,
                     const std::vector<int>& src_agents, bool with_histories,
                     const InfluenceOptions& opt) {
    double worst = 0.0;
    int bad_stage = -1;
    for (int t = 0; t < horizon; ++t) {
        auto res = stage_dsep(net, lsf, agent, dset, t, src_factors, src_agents, with_histories,
                              opt.tol, opt.cap);
        if (!res.ok && res.violation >= worst) {
            worst = res.violation;
            bad_stage = t;
        }
    }
    if (bad_stage >= 0 && !opt.force)
        throw DSetNotSeparating("d-set fails to separate the influence sources at stage " +
                                    std::to_string(bad_stage),
                                worst);
}

}  // namespace

SourceSpace make_source_space(const FactoredPosg& m, const InfluenceLinks& links) {
    SourceSpace sp;
    sp.u_prev = links.u_prev;
    sp.u_actions = links.u_actions;
    sp.u_next = links.u_next;
    std::vector<int> sizes;
    for (int f : sp.u_prev) sizes.push_back(m.factor_domain(f));
    for (int j : sp.u_actions) sizes.push_back(m.num_actions[j]);
    for (int f : sp.u_next) sizes.push_back(m.factor_domain(f));
    sp.radix = MixedRadix(sizes);
    sp.cond_prev = links.v_prev_modeled;
    sp.cond_own_action = links.v_own_action;
    sp.cond_next = links.v_next_modeled;
    return sp;
}

std::vector<int> dset_key_nodes(const UnrolledNet& net, const DSetSpec& dset, int agent, int t) {
    std::vector<int> nodes;
    for (const DSetEntry& e : dset.tracked) {
        if (e.own_action) {
            for (int k = 0; k < t; ++k) nodes.push_back(net.action_node(agent, k));
            continue;
        }
        switch (e.retention) {
            case Retention::FullHistory:
                for (int k = 0; k <= t; ++k) nodes.push_back(net.factor_node(e.factor, k));
                break;
            case Retention::Stage0Only: nodes.push_back(net.factor_node(e.factor, 0)); break;
            case Retention::LastValue: nodes.push_back(net.factor_node(e.factor, t)); break;
        }
    }
    return nodes;
}

InfluencePoint compute_influence(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                                 const std::vector<Policy>& policies, const DSetSpec& dset,
                                 const InfluenceOptions& opt) {
    auto cls = classify_factors(m, lsf, agent);
    if (cls.links.has_isd())
        throw ModelError("model has intra-stage influence sources; use compute_influence_isd");
    InfluencePoint ip;
    ip.space = make_source_space(m, cls.links);
    ip.dset = dset;
    ip.stages.resize(m.horizon);

    UnrolledNet net(m, policies, agent, m.horizon);
    stage_dsep_gate(net, lsf, agent, dset, m.horizon, cls.links.u_prev, cls.links.u_actions, false,
                    opt);

    std::vector<std::vector<int>> dnodes(m.horizon), unodes(m.horizon);
    for (int t = 0; t < m.horizon; ++t) {
        dnodes[t] = dset_key_nodes(net, dset, agent, t);
        for (int f : ip.space.u_prev) unodes[t].push_back(net.factor_node(f, t));
        for (int j : ip.space.u_actions) unodes[t].push_back(net.action_node(j, t));
    }

    const std::int64_t usize = ip.space.radix.size();
    std::vector<std::map<std::vector<int>, std::vector<double>>> acc(m.horizon);
    EnumerateOptions eo;
    eo.mode = ProtagonistMode::Uniform;
    eo.cap = opt.cap;
    std::vector<int> key, uv;
    enumerate(net, eo, [&](const std::vector<int>& asg, double w) {
        for (int t = 0; t < m.horizon; ++t) {
            key.clear();
            for (int n : dnodes[t]) key.push_back(asg[n]);
            uv.clear();
            for (int n : unodes[t]) uv.push_back(asg[n]);
            auto& row = acc[t][key];
            if (row.empty()) row.assign(usize, 0.0);
            row[ip.space.radix.index(uv)] += w;
        }
    });
    for (int t = 0; t < m.horizon; ++t) normalize_rows(acc[t], ip.stages[t]);
    return ip;
}

InfluencePoint compute_influence_isd(const FactoredPosg& m, const LocalStateFunction& lsf,
                                     int agent, const std::vector<Policy>& policies,
                                     const DSetSpec& dset, const InfluenceOptions& opt) {
    auto cls = classify_factors(m, lsf, agent);
    if (!cls.links.has_isd()) return compute_influence(m, lsf, agent, policies, dset, opt);
    const InfluenceLinks& L = cls.links;
    InfluencePoint ip;
    ip.space = make_source_space(m, L);
    ip.dset = dset;
    ip.stages.resize(m.horizon);

    auto w_prev = merge_sorted(L.u_prev, L.v_prev_nmf);
    auto w_agents = merge_sorted(L.u_actions, L.v_actions);

    UnrolledNet net(m, policies, agent, m.horizon);
    stage_dsep_gate(net, lsf, agent, dset, m.horizon, w_prev, w_agents, true, opt);

    // Joint weights of (D^{t+1}, y_w^t, AOH_w^t) per stage; the stage-t action
    // branches and everything later marginalize out in the accumulation.
    std::vector<std::vector<int>> dnodes(m.horizon), ynodes(m.horizon);
    for (int t = 0; t < m.horizon; ++t) {
        dnodes[t] = dset_key_nodes(net, dset, agent, t);
        for (int f : w_prev) ynodes[t].push_back(net.factor_node(f, t));
    }
    std::vector<std::map<std::vector<int>, std::map<std::vector<int>, double>>> acc(m.horizon);
    EnumerateOptions eo;
    eo.mode = ProtagonistMode::Uniform;
    eo.cap = opt.cap;
    enumerate(net, eo, [&](const std::vector<int>& asg, double w) {
        for (int t = 0; t < m.horizon; ++t) {
            std::vector<int> key;
            for (int n : dnodes[t]) key.push_back(asg[n]);
            std::vector<int> wkey;
            for (int n : ynodes[t]) wkey.push_back(asg[n]);
            for (int j : w_agents) {
                auto aoh = net.aoh_of(asg, j, t);
                wkey.insert(wkey.end(), aoh.begin(), aoh.end());
            }
            acc[t][key][wkey] += w;
        }
    });

    IntraEval ev(m, cls, ip.space, w_prev, w_agents);
    MixedRadix crad = cond_radix(m, ip.space, agent);
    const std::int64_t usize = ip.space.radix.size();
    std::vector<int> asizes;
    for (int j : w_agents) asizes.push_back(m.num_actions[j]);
    MixedRadix arad(asizes);

    for (int t = 0; t < m.horizon; ++t) {
        for (const auto& [dkey, entries] : acc[t]) {
            double total = 0;
            for (const auto& [_, w] : entries) total += w;
            // Action distributions per entry, resolved once.
            std::vector<std::pair<std::vector<int>, double>> flat;  // (y_w, P) per (entry, a_w)
            std::vector<std::vector<std::vector<double>>> dists;
            for (const auto& [wkey, w] : entries) {
                std::vector<std::vector<double>> ds;
                for (std::size_t q = 0; q < w_agents.size(); ++q) {
                    std::vector<int> aoh(wkey.begin() + w_prev.size() + 2 * t * q,
                                         wkey.begin() + w_prev.size() + 2 * t * (q + 1));
                    ds.push_back(policies[w_agents[q]].action_dist(aoh));
                }
                dists.push_back(std::move(ds));
                flat.emplace_back(std::vector<int>(wkey.begin(), wkey.begin() + w_prev.size()),
                                  w / total);
            }
            for (std::int64_t ci = 0; ci < crad.size(); ++ci) {
                auto cv = crad.values(ci);
                std::vector<int> cp, cn;
                int a_i = -1;
                split_cond(ip.space, cv, cp, a_i, cn);
                std::vector<double> row(usize, 0.0);
                for (std::size_t e = 0; e < flat.size(); ++e) {
                    for (std::int64_t av = 0; av < arad.size(); ++av) {
                        auto aw = arad.values(av);
                        double pi = 1.0;
                        for (std::size_t q = 0; q < aw.size(); ++q) pi *= dists[e][q][aw[q]];
                        if (pi <= 0.0) continue;
                        ev.accumulate(flat[e].first, aw, a_i, cp, cn, flat[e].second * pi, row);
                    }
                }
                double sum = 0;
                for (double x : row) sum += x;
                for (double& x : row) x /= sum;
                std::vector<int> key = dkey;
                key.insert(key.end(), cv.begin(), cv.end());
                ip.stages[t].rows[key] = InfluenceRow{std::move(row), true};
            }
        }
    }
    return ip;
}

ExertedTable exerted_influence(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                               const std::vector<Policy>& policies, const DSetSpec& dset, int t,
                               const InfluenceOptions& opt) {
    auto cls = classify_factors(m, lsf, agent);
    const InfluenceLinks& L = cls.links;
    ExertedTable ex;
    ex.w_prev = merge_sorted(L.u_prev, L.v_prev_nmf);
    ex.w_actions = merge_sorted(L.u_actions, L.v_actions);
    std::vector<int> sizes;
    for (int f : ex.w_prev) sizes.push_back(m.factor_domain(f));
    for (int j : ex.w_actions) sizes.push_back(m.num_actions[j]);
    ex.radix = MixedRadix(sizes);

    UnrolledNet net(m, policies, agent, t + 1);
    auto dnodes = dset_key_nodes(net, dset, agent, t);
    std::vector<int> wnodes;
    for (int f : ex.w_prev) wnodes.push_back(net.factor_node(f, t));
    for (int j : ex.w_actions) wnodes.push_back(net.action_node(j, t));

    std::map<std::vector<int>, std::vector<double>> acc;
    EnumerateOptions eo;
    eo.mode = ProtagonistMode::Uniform;
    eo.cap = opt.cap;
    std::vector<int> key, wv;
    enumerate(net, eo, [&](const std::vector<int>& asg, double w) {
        key.clear();
        for (int n : dnodes) key.push_back(asg[n]);
        wv.clear();
        for (int n : wnodes) wv.push_back(asg[n]);
        auto& row = acc[key];
        if (row.empty()) row.assign(ex.radix.size(), 0.0);
        row[ex.radix.index(wv)] += w;
    });
    StageTable st;
    normalize_rows(acc, st);
    for (auto& [key2, row] : st.rows) ex.rows[key2] = std::move(row);
    return ex;
}

StageTable experienced_from_exerted(const FactoredPosg& m, const Classification& cls,
                                    const SourceSpace& space, const ExertedTable& exerted,
                                    int num_own_actions) {
    IntraEval ev(m, cls, space, exerted.w_prev, exerted.w_actions);
    std::vector<int> csizes;
    for (int f : space.cond_prev) csizes.push_back(m.factor_domain(f));
    if (space.cond_own_action) csizes.push_back(num_own_actions);
    for (int f : space.cond_next) csizes.push_back(m.factor_domain(f));
    MixedRadix crad{csizes};

    StageTable out;
    const std::int64_t usize = space.radix.size();
    const std::size_t np = exerted.w_prev.size();
    for (const auto& [dkey, erow] : exerted.rows) {
        for (std::int64_t ci = 0; ci < crad.size(); ++ci) {
            auto cv = crad.values(ci);
            std::vector<int> cp, cn;
            int a_i = -1;
            split_cond(space, cv, cp, a_i, cn);
            std::vector<double> row(usize, 0.0);
            for (std::int64_t wi = 0; wi < exerted.radix.size(); ++wi) {
                double p = erow.dist[wi];
                if (p <= 0.0) continue;
                auto wv = exerted.radix.values(wi);
                std::vector<int> yw(wv.begin(), wv.begin() + np);
                std::vector<int> aw(wv.begin() + np, wv.end());
                ev.accumulate(yw, aw, a_i, cp, cn, p, row);
            }
            double sum = 0;
            for (double x : row) sum += x;
            for (double& x : row) x /= sum;
            std::vector<int> key = dkey;
            key.insert(key.end(), cv.begin(), cv.end());
            out.rows[key] = InfluenceRow{std::move(row), erow.reachable};
        }
    }
    return out;
}

std::vector<double> induced_cpt_row(const FactoredPosg& m, const InfluencePoint& ip, int nlaf,
                                    int t, const std::vector<int>& xprev,
                                    const std::vector<int>& dkey, int a_i,
                                    const std::vector<int>& xnext) {
    const Cpt& c = m.dbn.factor_cpts[nlaf];
    const SourceSpace& sp = ip.space;
    const InfluenceRow* r = ip.find(t, dkey);
    std::vector<double> uniform;
    const std::vector<double>* dist;
    if (r) {
        dist = &r->dist;
    } else {
        uniform.assign(sp.radix.size(), 1.0 / static_cast<double>(sp.radix.size()));
        dist = &uniform;
    }
    std::vector<double> out(c.child_domain, 0.0);
    for (std::int64_t u = 0; u < sp.radix.size(); ++u) {
        if ((*dist)[u] <= 0.0) continue;
        auto uv = sp.radix.values(u);
        std::int64_t ridx = 0;
        for (std::size_t q = 0; q < c.parents.size(); ++q)
            ridx = ridx * c.radix.sizes()[q] +
                   parent_from_sources(sp, uv, c.parents[q], xprev, xnext, a_i);
        const double* crow = c.row_at(ridx);
        for (int v = 0; v < c.child_domain; ++v) out[v] += (*dist)[u] * crow[v];
    }
    return out;
}

double nlaf_prob(const FactoredPosg& m, const Classification& cls, const InfluencePoint& ip,
                 int t, const std::vector<int>& xprev, const std::vector<int>& dkey,
                 const std::vector<int>& xnext, int a_i, bool* used_unreachable) {
    const SourceSpace& sp = ip.space;
    std::vector<int> key = dkey;
    for (int f : sp.cond_prev) key.push_back(xprev[f]);
    if (sp.cond_own_action) key.push_back(a_i);
    for (int f : sp.cond_next) key.push_back(xnext[f]);
    const InfluenceRow* r = ip.find(t, key);
    std::vector<double> uniform;
    const std::vector<double>* dist;
    if (r) {
        dist = &r->dist;
    } else {
        if (used_unreachable) *used_unreachable = true;
        uniform.assign(sp.radix.size(), 1.0 / static_cast<double>(sp.radix.size()));
        dist = &uniform;
    }
    double p = 0.0;
    for (std::int64_t u = 0; u < sp.radix.size(); ++u) {
        if ((*dist)[u] <= 0.0) continue;
        auto uv = sp.radix.values(u);
        double prod = 1.0;
        for (std::size_t k = 0; k < cls.nlafs.size() && prod > 0.0; ++k) {
            const Cpt& c = m.dbn.factor_cpts[cls.nlafs[k]];
            std::int64_t ridx = 0;
            for (std::size_t q = 0; q < c.parents.size(); ++q)
                ridx = ridx * c.radix.sizes()[q] +
                       parent_from_sources(sp, uv, c.parents[q], xprev, xnext, a_i);
            prod *= c.row_at(ridx)[xnext[cls.nlafs[k]]];
        }
        p += (*dist)[u] * prod;
    }
    return p;
}

std::map<std::vector<int>, double> nlaf_joint(const FactoredPosg& m, const Classification& cls,
                                              const InfluencePoint& ip, int t,
                                              const std::vector<int>& xprev,
                                              const std::vector<int>& dkey,
                                              const std::vector<int>& xnext_olaf, int a_i,
                                              bool* used_unreachable) {
    std::vector<int> sizes;
    for (int f : cls.nlafs) sizes.push_back(m.factor_domain(f));
    MixedRadix nr(sizes);

    std::map<std::vector<int>, double> out;
    std::vector<int> xnext = xnext_olaf;
    for (std::int64_t idx = 0; idx < nr.size(); ++idx) {
        auto nv = nr.values(idx);
        for (std::size_t k = 0; k < cls.nlafs.size(); ++k) xnext[cls.nlafs[k]] = nv[k];
        out[nv] = nlaf_prob(m, cls, ip, t, xprev, dkey, xnext, a_i, used_unreachable);
    }
    return out;
}

bool factorization_check(const InfluencePoint& ip, const InfluenceLinks& links, double tol,
                         double* max_gap) {
    const SourceSpace& sp = ip.space;
    const int np = static_cast<int>(sp.u_prev.size());
    const int na = static_cast<int>(sp.u_actions.size());
    auto pos_of_source = [&](const SourceRef& s) -> int {
        switch (s.kind) {
            case SourceRef::Kind::PrevFactor: return pos_of(sp.u_prev, s.id);
            case SourceRef::Kind::Action: return np + pos_of(sp.u_actions, s.id);
            default: return np + na + pos_of(sp.u_next, s.id);
        }
    };
    std::vector<std::vector<int>> blocks;
    for (const auto& [nlaf, srcs] : links.sources_per_nlaf) {
        std::vector<int> blk;
        for (const SourceRef& s : srcs) blk.push_back(pos_of_source(s));
        blocks.push_back(std::move(blk));
    }

    double gap = 0.0;
    for (const StageTable& st : ip.stages) {
        for (const auto& [key, row] : st.rows) {
            if (!row.reachable) continue;
            std::vector<std::map<std::vector<int>, double>> marg(blocks.size());
            for (std::int64_t u = 0; u < sp.radix.size(); ++u) {
                auto uv = sp.radix.values(u);
                for (std::size_t b = 0; b < blocks.size(); ++b) {
                    std::vector<int> sub;
                    for (int p : blocks[b]) sub.push_back(uv[p]);
                    marg[b][sub] += row.dist[u];
                }
            }
            for (std::int64_t u = 0; u < sp.radix.size(); ++u) {
                auto uv = sp.radix.values(u);
                double prod = 1.0;
                for (std::size_t b = 0; b < blocks.size(); ++b) {
                    std::vector<int> sub;
                    for (int p : blocks[b]) sub.push_back(uv[p]);
                    prod *= marg[b][sub];
                }
                gap = std::max(gap, std::abs(prod - row.dist[u]));
            }
        }
    }
    if (max_gap) *max_gap = gap;
    return gap <= tol;
}

}  // namespace iba
