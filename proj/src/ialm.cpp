#include "iba/ialm.hpp"

#include <functional>

#include "iba/gfbrm.hpp"

namespace iba {

namespace {

std::vector<int> modeled_list(const LocalStateFunction& lsf, int agent) {
    return std::vector<int>(lsf.modeled[agent].begin(), lsf.modeled[agent].end());
}

MixedRadix modeled_radix(const FactoredPosg& m, const std::vector<int>& modeled) {
    std::vector<int> sizes;
    for (int f : modeled) sizes.push_back(m.factor_domain(f));
    return MixedRadix(sizes);
}

// Support of P(x^{t+1} | x^t, D^{t+1}, a_i, I): OLAF CPT product times the
// influence-induced NLAF probability, enumerated over all modeled next
// assignments.
void for_each_local_next(const FactoredPosg& m, const Classification& cls,
                         const InfluencePoint& ip, int agent, const std::vector<int>& modeled,
                         const MixedRadix& mr, const std::vector<int>& x,
                         const std::vector<int>& dval, int stage, int a, int& flagged,
                         const std::function<void(const std::vector<int>&, double)>& fn) {
    std::vector<int> ja(m.num_agents, -1);
    ja[agent] = a;
    std::vector<int> xn(m.num_factors(), -1);
    for (std::int64_t idx = 0; idx < mr.size(); ++idx) {
        auto vals = mr.values(idx);
        for (std::size_t k = 0; k < modeled.size(); ++k) xn[modeled[k]] = vals[k];
        double p = 1.0;
        for (int f : cls.olafs) {
            const Cpt& c = m.dbn.factor_cpts[f];
            std::int64_t ridx = 0;
            for (std::size_t q = 0; q < c.parents.size(); ++q)
                ridx = ridx * c.radix.sizes()[q] + dyn::parent_value(c.parents[q], x, ja, xn);
            p *= c.row_at(ridx)[xn[f]];
            if (p <= 0.0) break;
        }
        if (p <= 0.0) continue;
        bool used = false;
        p *= nlaf_prob(m, cls, ip, stage, x, dval, xn, a, &used);
        if (used) ++flagged;
        if (p <= 0.0) continue;
        fn(xn, p);
    }
}

}  // namespace

std::map<std::vector<int>, double> initial_local_belief(const FactoredPosg& m,
                                                        const LocalStateFunction& lsf, int agent) {
    std::map<std::vector<int>, double> out;
    dyn::for_each_initial_state(m, [&](const std::vector<int>& s, double w) {
        std::vector<int> x(m.num_factors(), -1);
        for (int f : lsf.modeled[agent]) x[f] = s[f];
        out[x] += w;
    });
    return out;
}

std::vector<int> initial_dset_value(const DSetSpec& dset, const std::vector<int>& s0) {
    std::vector<int> out;
    for (const DSetEntry& e : dset.tracked) {
        if (e.own_action) continue;  // no actions taken yet
        out.push_back(s0[e.factor]);
    }
    return out;
}

std::vector<int> d_update(const DSetSpec& dset, int t, const std::vector<int>& dval, int a_i,
                          const std::vector<int>& xnext) {
    std::vector<int> out;
    std::size_t pos = 0;
    for (const DSetEntry& e : dset.tracked) {
        if (e.own_action) {
            for (int k = 0; k < t; ++k) out.push_back(dval[pos + k]);
            out.push_back(a_i);
            pos += t;
            continue;
        }
        switch (e.retention) {
            case Retention::FullHistory:
                for (int k = 0; k <= t; ++k) out.push_back(dval[pos + k]);
                out.push_back(xnext[e.factor]);
                pos += t + 1;
                break;
            case Retention::Stage0Only:
                out.push_back(dval[pos]);
                pos += 1;
                break;
            case Retention::LastValue:
                out.push_back(xnext[e.factor]);
                pos += 1;
                break;
        }
    }
    return out;
}

Ialm::Ialm(const FactoredPosg& m, const LocalStateFunction& lsf, int agent, InfluencePoint ip)
    : m_(&m), lsf_(lsf), agent_(agent), cls_(classify_factors(m, lsf, agent)),
      ip_(std::move(ip)), modeled_(modeled_list(lsf, agent)),
      modeled_radix_(modeled_radix(m, modeled_)) {
    for (const auto& [x, p] : initial_local_belief(m, lsf, agent)) {
        AugState st;
        st.x = x;
        st.dval = initial_dset_value(ip_.dset, x);
        st.stage = 0;
        b0_.probs.emplace_back(intern(std::move(st)), p);
    }
}

StateId Ialm::intern(AugState st) {
    auto key = std::tuple{st.x, st.dval, st.stage};
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    StateId id = static_cast<StateId>(states_.size());
    states_.push_back(std::move(st));
    index_.emplace(std::move(key), id);
    return id;
}

TransRow Ialm::expand_transitions(StateId s, int a) {
    const AugState st = states_[s];  // copy: states_ may grow below
    std::map<StateId, double> acc;
    for_each_local_next(*m_, cls_, ip_, agent_, modeled_, modeled_radix_, st.x, st.dval, st.stage,
                        a, flagged_, [&](const std::vector<int>& xn, double p) {
                            AugState nst;
                            nst.x = xn;
                            nst.dval = d_update(ip_.dset, st.stage, st.dval, a, xn);
                            nst.stage = st.stage + 1;
                            acc[intern(std::move(nst))] += p;
                        });
    return TransRow(acc.begin(), acc.end());
}

std::vector<double> Ialm::expand_observation(int a, StateId s2) {
    const AugState& nst = states_[s2];
    std::vector<int> ja(m_->num_agents, -1);
    ja[agent_] = a;
    const double* od = dyn::obs_row(*m_, agent_, ja, nst.x);
    return std::vector<double>(od, od + m_->num_observations[agent_]);
}

double Ialm::reward(StateId s, int a, StateId s2) {
    std::vector<int> ja(m_->num_agents, -1);
    ja[agent_] = a;
    return dyn::reward_value(*m_, agent_, states_[s].x, ja, states_[s2].x);
}

double ialm_expected_reward(Ialm& l, const SparseBelief& b, int a_i) {
    const FactoredPosg& m = l.model();
    const auto& cls = l.classification();
    std::vector<int> modeled;
    modeled.insert(modeled.end(), cls.olafs.begin(), cls.olafs.end());
    modeled.insert(modeled.end(), cls.nlafs.begin(), cls.nlafs.end());
    std::sort(modeled.begin(), modeled.end());
    MixedRadix mr = modeled_radix(m, modeled);
    std::vector<int> ja(m.num_agents, -1);
    ja[l.agent()] = a_i;
    double total = 0.0;
    int flagged = 0;
    for (const auto& [sid, pb] : b.probs) {
        const auto& st = l.state(sid);
        for_each_local_next(m, cls, l.influence(), l.agent(), modeled, mr, st.x, st.dval, st.stage,
                            a_i, flagged, [&](const std::vector<int>& xn, double p) {
                                total += pb * p * dyn::reward_value(m, l.agent(), st.x, ja, xn);
                            });
    }
    return total;
}

std::vector<double> ialm_obs_prob(Ialm& l, const SparseBelief& b, int a_i) {
    const FactoredPosg& m = l.model();
    const auto& cls = l.classification();
    std::vector<int> modeled;
    modeled.insert(modeled.end(), cls.olafs.begin(), cls.olafs.end());
    modeled.insert(modeled.end(), cls.nlafs.begin(), cls.nlafs.end());
    std::sort(modeled.begin(), modeled.end());
    MixedRadix mr = modeled_radix(m, modeled);
    std::vector<int> ja(m.num_agents, -1);
    ja[l.agent()] = a_i;
    std::vector<double> out(m.num_observations[l.agent()], 0.0);
    int flagged = 0;
    for (const auto& [sid, pb] : b.probs) {
        const auto& st = l.state(sid);
        for_each_local_next(m, cls, l.influence(), l.agent(), modeled, mr, st.x, st.dval, st.stage,
                            a_i, flagged, [&](const std::vector<int>& xn, double p) {
                                const double* od = dyn::obs_row(m, l.agent(), ja, xn);
                                for (int o = 0; o < m.num_observations[l.agent()]; ++o)
                                    out[o] += pb * p * od[o];
                            });
    }
    return out;
}

}  // namespace iba
