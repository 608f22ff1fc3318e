#include "iba/verify.hpp"

#include <atomic>
#include <thread>

#include "iba/influence.hpp"
#include "iba/unrolled.hpp"

namespace iba {

namespace {

std::vector<int> modeled_of(const Ialm& l) {
    const auto& cls = l.classification();
    std::vector<int> out(cls.olafs.begin(), cls.olafs.end());
    out.insert(out.end(), cls.nlafs.begin(), cls.nlafs.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> mask_modeled(const std::vector<int>& s, const std::vector<int>& modeled, int nf) {
    std::vector<int> x(nf, -1);
    for (int f : modeled) x[f] = s[f];
    return x;
}

template <class K>
double map_delta(const std::map<K, double>& a, const std::map<K, double>& b) {
    double d = 0.0;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        d = std::max(d, std::abs(v - (it == b.end() ? 0.0 : it->second)));
    }
    for (const auto& [k, v] : b)
        if (!a.count(k)) d = std::max(d, std::abs(v));
    return d;
}

// Follows an alternating (a^0, o^1, ...) history from the initial belief.
SparseBelief walk(BestResponsePomdp& p, const std::vector<int>& aoh) {
    SparseBelief b = p.initial_belief();
    try {
        for (std::size_t k = 0; k + 1 < aoh.size(); k += 2) b = belief_update(p, b, aoh[k], aoh[k + 1]);
    } catch (const ZeroProbObservation& e) {
        throw UnreachableHistory(e.what());
    }
    return b;
}

// Flattened key for one opponent AOH profile, -2 separated.
std::vector<int> flat_opp_key(const std::vector<std::vector<int>>& seqs) {
    std::vector<int> out;
    for (const auto& seq : seqs) {
        out.insert(out.end(), seq.begin(), seq.end());
        out.push_back(-2);
    }
    return out;
}

}  // namespace

double lemma1_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i) {
    const auto modeled = modeled_of(l);
    const int nf = g.model().num_factors();
    std::map<std::pair<std::vector<int>, std::vector<int>>, double> pg, pl;
    for (const auto& [s, pb] : bg.probs)
        for (const auto& [s2, pt] : g.transitions(s, a_i))
            pg[{mask_modeled(g.state(s).s, modeled, nf), mask_modeled(g.state(s2).s, modeled, nf)}] +=
                pb * pt;
    for (const auto& [s, pb] : bl.probs)
        for (const auto& [s2, pt] : l.transitions(s, a_i))
            pl[{l.state(s).x, l.state(s2).x}] += pb * pt;
    return map_delta(pg, pl);
}

double lemma2_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i) {
    const auto modeled = modeled_of(l);
    const int nf = g.model().num_factors();
    std::map<std::vector<int>, double> pg, pl;
    for (const auto& [s, pb] : bg.probs)
        for (const auto& [s2, pt] : g.transitions(s, a_i))
            pg[mask_modeled(g.state(s2).s, modeled, nf)] += pb * pt;
    for (const auto& [s, pb] : bl.probs)
        for (const auto& [s2, pt] : l.transitions(s, a_i)) pl[l.state(s2).x] += pb * pt;
    return map_delta(pg, pl);
}

double lemma3_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i) {
    return std::abs(gfbrm_expected_reward(g, bg, a_i) - ialm_expected_reward(l, bl, a_i));
}

double lemma4_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i) {
    auto og = gfbrm_obs_prob(g, bg, a_i);
    auto ol = ialm_obs_prob(l, bl, a_i);
    double d = 0.0;
    for (std::size_t o = 0; o < og.size(); ++o) d = std::max(d, std::abs(og[o] - ol[o]));
    return d;
}

namespace {

template <class Fn>
double check_one(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                 const std::vector<Policy>& policies, const InfluencePoint& ip,
                 const std::vector<int>& aoh, int a_i, Fn delta) {
    Gfbrm g(m, policies, agent);
    Ialm l(m, lsf, agent, ip);
    SparseBelief bg = walk(g, aoh);
    SparseBelief bl = walk(l, aoh);
    return delta(g, bg, l, bl, a_i);
}

}  // namespace

double check_lemma1(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i) {
    return check_one(m, lsf, agent, policies, ip, aoh, a_i, lemma1_delta);
}

double check_lemma2(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i) {
    return check_one(m, lsf, agent, policies, ip, aoh, a_i, lemma2_delta);
}

double check_lemma3(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i) {
    return check_one(m, lsf, agent, policies, ip, aoh, a_i, lemma3_delta);
}

double check_lemma4(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i) {
    return check_one(m, lsf, agent, policies, ip, aoh, a_i, lemma4_delta);
}

double belief_factorization_delta(Gfbrm& g, const ValueTree& gt, Ialm& l, const ValueTree& lt,
                                  const std::vector<Policy>& policies,
                                  const LocalStateFunction& lsf, std::int64_t cap) {
    const FactoredPosg& m = g.model();
    const int agent = g.agent();
    const int h = m.horizon;
    const DSetSpec& dset = l.influence().dset;
    UnrolledNet net(m, policies, agent, h);

    // One pass under a uniformly randomizing protagonist: for every stage and
    // every protagonist AOH, the joint weight of (local atom, external part).
    using Atom = std::pair<std::vector<int>, std::vector<int>>;  // <x, D^{t+1}>
    std::map<std::vector<int>, std::map<Atom, std::map<std::vector<int>, double>>> acc;
    const auto& modeled = lsf.modeled[agent];
    EnumerateOptions eopt;
    eopt.cap = cap;
    enumerate(net, eopt, [&](const std::vector<int>& asg, double w) {
        for (int t = 0; t < h; ++t) {
            std::vector<int> aoh_i = net.aoh_of(asg, agent, t);
            std::vector<int> x(m.num_factors(), -1), s(m.num_factors());
            for (int f = 0; f < m.num_factors(); ++f) {
                s[f] = asg[net.factor_node(f, t)];
                if (modeled.count(f)) x[f] = s[f];
            }
            std::vector<int> dval;
            for (int node : dset_key_nodes(net, dset, agent, t)) dval.push_back(asg[node]);
            std::vector<std::vector<int>> opp_seqs;
            for (int j : g.opponents()) opp_seqs.push_back(net.aoh_of(asg, j, t));
            std::vector<int> ext = s;
            auto flat = flat_opp_key(opp_seqs);
            ext.insert(ext.end(), flat.begin(), flat.end());
            acc[std::move(aoh_i)][{std::move(x), std::move(dval)}][std::move(ext)] += w;
        }
    });

    std::map<std::vector<int>, int> local_by_aoh;
    for (std::size_t i = 0; i < lt.nodes.size(); ++i)
        local_by_aoh[lt.aohs.sequence(lt.nodes[i].aoh)] = static_cast<int>(i);

    double delta = 0.0;
    for (const auto& gn : gt.nodes) {
        auto seq = gt.aohs.sequence(gn.aoh);
        auto lit = local_by_aoh.find(seq);
        if (lit == local_by_aoh.end()) continue;  // counted as unmatched elsewhere
        const auto& ln = lt.nodes[lit->second];

        std::map<std::vector<int>, double> bglobal;
        for (const auto& [sid, p] : gn.belief.probs) {
            const auto& st = g.state(sid);
            std::vector<std::vector<int>> opp_seqs;
            for (std::size_t k = 0; k < st.aohs.size(); ++k)
                opp_seqs.push_back(g.aoh_interner().sequence(st.aohs[k]));
            std::vector<int> ext = st.s;
            auto flat = flat_opp_key(opp_seqs);
            ext.insert(ext.end(), flat.begin(), flat.end());
            bglobal[std::move(ext)] += p;
        }

        // Eq-style reconstruction: b(s, aoh_-i) = sum_<x,D> b(x,D) Pr(s, aoh_-i | aoh_i, x, D).
        std::map<std::vector<int>, double> brecon;
        const auto& cond = acc.at(seq);
        for (const auto& [sid, p] : ln.belief.probs) {
            const auto& st = l.state(sid);
            auto rit = cond.find({st.x, st.dval});
            if (rit == cond.end()) {
                // Spurious local atom (possible only under forced influence).
                delta = std::max(delta, p);
                continue;
            }
            const auto& row = rit->second;
            double mass = 0.0;
            for (const auto& [_, w] : row) mass += w;
            for (const auto& [ext, w] : row) brecon[ext] += p * w / mass;
        }
        delta = std::max(delta, map_delta(bglobal, brecon));
    }
    return delta;
}

EquivalenceReport check_theorem(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                                const std::vector<Policy>& policies, const DSetSpec& dset,
                                const VerifyOptions& opt) {
    EquivalenceReport rep;
    rep.tol = opt.tol;
    rep.exact_tol = opt.exact_tol;

    auto cls = classify_factors(m, lsf, agent);
    InfluenceOptions iopt;
    iopt.force = opt.force;
    iopt.tol = opt.tol;
    iopt.cap = opt.cap;
    InfluencePoint ip = cls.links.has_isd()
                            ? compute_influence_isd(m, lsf, agent, policies, dset, iopt)
                            : compute_influence(m, lsf, agent, policies, dset, iopt);

    Gfbrm g(m, policies, agent);
    Ialm l(m, lsf, agent, std::move(ip));
    ValueTree gt = solve(g, opt.cap_aohs);
    ValueTree lt = solve(l, opt.cap_aohs);

    rep.value_gfbrm = gt.root_value();
    rep.value_ialm = lt.root_value();
    rep.value_delta = std::abs(rep.value_gfbrm - rep.value_ialm);

    rep.gfbrm_states_per_stage.assign(m.horizon + 1, 0);
    rep.ialm_states_per_stage.assign(m.horizon + 1, 0);
    for (int s = 0; s < g.num_states_created(); ++s) ++rep.gfbrm_states_per_stage[g.state(s).stage];
    for (int s = 0; s < l.num_states_created(); ++s) ++rep.ialm_states_per_stage[l.state(s).stage];
    rep.unreachable_rows = l.num_flagged_rows();

    std::map<std::vector<int>, int> local_by_aoh;
    for (std::size_t i = 0; i < lt.nodes.size(); ++i)
        local_by_aoh[lt.aohs.sequence(lt.nodes[i].aoh)] = static_cast<int>(i);

    // Match tree nodes by history; anything reachable on one side only is an
    // equivalence failure in itself.
    std::vector<std::pair<int, int>> matched;  // (global node, local node)
    std::set<std::vector<int>> seen;
    for (std::size_t i = 0; i < gt.nodes.size(); ++i) {
        auto seq = gt.aohs.sequence(gt.nodes[i].aoh);
        auto it = local_by_aoh.find(seq);
        if (it == local_by_aoh.end()) {
            ++rep.unmatched_aohs;
        } else {
            matched.emplace_back(static_cast<int>(i), it->second);
            seen.insert(std::move(seq));
        }
    }
    for (const auto& [seq, _] : local_by_aoh)
        if (!seen.count(seq)) ++rep.unmatched_aohs;

    // The solve above cached every transition and observation the lemma
    // checks can touch, so the per-AOH loop only reads and is safe to run
    // concurrently; records go to preassigned slots to keep output
    // deterministic regardless of scheduling.
    rep.records.resize(matched.size());
    const int num_actions = g.num_actions();
    auto eval_record = [&](std::size_t k) {
        const ValueNode& gn = gt.nodes[matched[k].first];
        const ValueNode& ln = lt.nodes[matched[k].second];
        AohRecord& rec = rep.records[k];
        rec.aoh = gt.aohs.sequence(gn.aoh);
        rec.stage = gn.stage;
        rec.q_delta.resize(num_actions);
        for (int a = 0; a < num_actions; ++a) {
            rec.q_delta[a] = std::abs(gn.q[a] - ln.q[a]);
            rec.l1 = std::max(rec.l1, lemma1_delta(g, gn.belief, l, ln.belief, a));
            rec.l2 = std::max(rec.l2, lemma2_delta(g, gn.belief, l, ln.belief, a));
            rec.l3 = std::max(rec.l3, lemma3_delta(g, gn.belief, l, ln.belief, a));
            rec.l4 = std::max(rec.l4, lemma4_delta(g, gn.belief, l, ln.belief, a));
        }
    };
    const int jobs = std::max(1, opt.jobs);
    if (jobs == 1 || matched.size() < 2) {
        for (std::size_t k = 0; k < matched.size(); ++k) eval_record(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr eptr;
        std::mutex emu;
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t k = next.fetch_add(1); k < rep.records.size();
                     k = next.fetch_add(1)) {
                    try {
                        eval_record(k);
                    } catch (...) {
                        std::scoped_lock lock(emu);
                        if (!eptr) eptr = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (eptr) std::rethrow_exception(eptr);
    }

    rep.max_q_per_stage.assign(m.horizon, 0.0);
    for (const AohRecord& rec : rep.records) {
        rep.max_l1 = std::max(rep.max_l1, rec.l1);
        rep.max_l2 = std::max(rep.max_l2, rec.l2);
        rep.max_l3 = std::max(rep.max_l3, rec.l3);
        rep.max_l4 = std::max(rep.max_l4, rec.l4);
        for (double qd : rec.q_delta) {
            rep.max_q = std::max(rep.max_q, qd);
            rep.max_q_per_stage[rec.stage] = std::max(rep.max_q_per_stage[rec.stage], qd);
        }
    }

    if (opt.belief_factorization)
        rep.belief_factorization_delta = belief_factorization_delta(g, gt, l, lt, policies, lsf, opt.cap);
    return rep;
}

}  // namespace iba
