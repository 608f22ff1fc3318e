#include "iba/gfbrm.hpp"

#include <functional>

namespace iba {

namespace dyn {

int parent_value(const NodeRef& p, const std::vector<int>& prev, const std::vector<int>& ja,
                 const std::vector<int>& next) {
    switch (p.kind) {
        case NodeRef::Kind::PrevFactor: return prev[p.id];
        case NodeRef::Kind::NextFactor: return next[p.id];
        default: return ja[p.id];
    }
}

void for_each_next_state(const FactoredPosg& m, const std::vector<int>& trans_order,
                         const std::vector<int>& s, const std::vector<int>& ja,
                         const std::function<void(const std::vector<int>&, double)>& fn) {
    std::vector<int> next(m.num_factors(), -1);
    std::function<void(std::size_t, double)> rec = [&](std::size_t k, double w) {
        if (k == trans_order.size()) {
            fn(next, w);
            return;
        }
        int f = trans_order[k];
        const Cpt& c = m.dbn.factor_cpts[f];
        std::int64_t row = 0;
        for (std::size_t j = 0; j < c.parents.size(); ++j)
            row = row * c.radix.sizes()[j] + parent_value(c.parents[j], s, ja, next);
        const double* dist = c.row_at(row);
        for (int v = 0; v < c.child_domain; ++v) {
            if (dist[v] <= 0.0) continue;
            next[f] = v;
            rec(k + 1, w * dist[v]);
        }
        next[f] = -1;
    };
    rec(0, 1.0);
}

void for_each_initial_state(const FactoredPosg& m,
                            const std::function<void(const std::vector<int>&, double)>& fn) {
    auto order = initial_bn_topo_order(m);
    std::vector<int> s(m.num_factors(), -1);
    std::function<void(std::size_t, double)> rec = [&](std::size_t k, double w) {
        if (k == order.size()) {
            fn(s, w);
            return;
        }
        int f = order[k];
        const Cpt& c = m.initial_bn.cpts[f];
        std::int64_t row = 0;
        for (std::size_t j = 0; j < c.parents.size(); ++j)
            row = row * c.radix.sizes()[j] + s[c.parents[j].id];
        const double* dist = c.row_at(row);
        for (int v = 0; v < c.child_domain; ++v) {
            if (dist[v] <= 0.0) continue;
            s[f] = v;
            rec(k + 1, w * dist[v]);
        }
        s[f] = -1;
    };
    rec(0, 1.0);
}

const double* obs_row(const FactoredPosg& m, int j, const std::vector<int>& ja,
                      const std::vector<int>& next) {
    const Cpt& c = m.dbn.observation_cpts[j];
    std::int64_t row = 0;
    for (std::size_t k = 0; k < c.parents.size(); ++k)
        row = row * c.radix.sizes()[k] + parent_value(c.parents[k], next, ja, next);
    return c.row_at(row);
}

double reward_value(const FactoredPosg& m, int j, const std::vector<int>& prev,
                    const std::vector<int>& ja, const std::vector<int>& next) {
    const RewardTable& r = m.rewards[j];
    std::int64_t row = 0;
    for (std::size_t k = 0; k < r.parents.size(); ++k)
        row = row * r.radix.sizes()[k] + parent_value(r.parents[k], prev, ja, next);
    return r.value_at(row);
}

}  // namespace dyn

Gfbrm::Gfbrm(const FactoredPosg& m, std::vector<Policy> policies, int agent)
    : m_(&m), policies_(std::move(policies)), agent_(agent),
      trans_order_(next_slice_topo_order(m)) {
    for (int j = 0; j < m.num_agents; ++j)
        if (j != agent) opponents_.push_back(j);
    dyn::for_each_initial_state(m, [&](const std::vector<int>& s, double w) {
        AugState st;
        st.s = s;
        st.aohs.assign(opponents_.size(), aohs_.empty_id());
        st.stage = 0;
        b0_.probs.emplace_back(intern(std::move(st)), w);
    });
}

StateId Gfbrm::intern(AugState st) {
    auto key = std::pair{st.s, st.aohs};
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    StateId id = static_cast<StateId>(states_.size());
    states_.push_back(std::move(st));
    index_.emplace(std::move(key), id);
    return id;
}

std::vector<int> Gfbrm::last_opponent_actions(StateId s2) const {
    const AugState& st = states_[s2];
    std::vector<int> acts(opponents_.size());
    for (std::size_t k = 0; k < opponents_.size(); ++k)
        acts[k] = aohs_.action_of(st.aohs[k]);
    return acts;
}

// T-bar: [prod_{j != i} O_j(o_j | ja, s')] * T(s'|s,ja) * pi_{-i}(a_{-i} | AOHs).
// The sum over o_i is implicit (each observation row is normalized), and no
// division by an observation marginal is needed: zero-mass branches are pruned.
TransRow Gfbrm::expand_transitions(StateId s, int a) {
    const AugState st = states_[s];  // copy: states_ may grow below
    std::map<StateId, double> acc;

    std::vector<int> ja(m_->num_agents, -1);
    ja[agent_] = a;
    std::function<void(std::size_t, double)> over_actions = [&](std::size_t k, double wpi) {
        if (k == opponents_.size()) {
            dyn::for_each_next_state(*m_, trans_order_, st.s, ja, [&](const std::vector<int>& s2,
                                                                      double wt) {
                // Branch over the opponents' joint observation.
                std::function<void(std::size_t, double, std::vector<int>&)> over_obs =
                    [&](std::size_t q, double wo, std::vector<int>& obs) {
                        if (q == opponents_.size()) {
                            AugState nst;
                            nst.s = s2;
                            nst.stage = st.stage + 1;
                            nst.aohs.resize(opponents_.size());
                            for (std::size_t r = 0; r < opponents_.size(); ++r)
                                nst.aohs[r] =
                                    aohs_.child(st.aohs[r], ja[opponents_[r]], obs[r]);
                            acc[intern(std::move(nst))] += wpi * wt * wo;
                            return;
                        }
                        int j = opponents_[q];
                        const double* od = dyn::obs_row(*m_, j, ja, s2);
                        for (int o = 0; o < m_->num_observations[j]; ++o) {
                            if (od[o] <= 0.0) continue;
                            obs[q] = o;
                            over_obs(q + 1, wo * od[o], obs);
                        }
                    };
                std::vector<int> obs(opponents_.size());
                over_obs(0, 1.0, obs);
            });
            return;
        }
        int j = opponents_[k];
        const auto& dist = policies_[j].action_dist(aohs_.sequence(st.aohs[k]));
        for (int aj = 0; aj < m_->num_actions[j]; ++aj) {
            if (dist[aj] <= 0.0) continue;
            ja[j] = aj;
            over_actions(k + 1, wpi * dist[aj]);
        }
        ja[j] = -1;
    };
    over_actions(0, 1.0);

    TransRow row(acc.begin(), acc.end());
    return row;
}

std::vector<double> Gfbrm::expand_observation(int a, StateId s2) {
    const AugState& nst = states_[s2];
    std::vector<int> ja(m_->num_agents, -1);
    ja[agent_] = a;
    auto last = last_opponent_actions(s2);
    for (std::size_t k = 0; k < opponents_.size(); ++k) ja[opponents_[k]] = last[k];
    const double* od = dyn::obs_row(*m_, agent_, ja, nst.s);
    return std::vector<double>(od, od + m_->num_observations[agent_]);
}

double Gfbrm::reward(StateId s, int a, StateId s2) {
    const AugState& st = states_[s];
    const AugState& nst = states_[s2];
    std::vector<int> ja(m_->num_agents, -1);
    ja[agent_] = a;
    auto last = last_opponent_actions(s2);
    for (std::size_t k = 0; k < opponents_.size(); ++k) ja[opponents_[k]] = last[k];
    return dyn::reward_value(*m_, agent_, st.s, ja, nst.s);
}

double gfbrm_expected_reward(Gfbrm& g, const SparseBelief& b, int a_i) {
    const FactoredPosg& m = g.model();
    auto order = next_slice_topo_order(m);
    double total = 0.0;
    std::vector<int> ja(m.num_agents, -1);
    ja[g.agent()] = a_i;
    for (const auto& [sid, pb] : b.probs) {
        const auto& st = g.state(sid);
        std::function<void(std::size_t, double)> over_actions = [&](std::size_t k, double wpi) {
            if (k == g.opponents().size()) {
                dyn::for_each_next_state(m, order, st.s, ja,
                                         [&](const std::vector<int>& s2, double wt) {
                                             total += pb * wpi * wt *
                                                      dyn::reward_value(m, g.agent(), st.s, ja, s2);
                                         });
                return;
            }
            int j = g.opponents()[k];
            const auto& adist = g.policy(j).action_dist(g.aoh_interner().sequence(st.aohs[k]));
            for (int aj = 0; aj < m.num_actions[j]; ++aj) {
                if (adist[aj] <= 0.0) continue;
                ja[j] = aj;
                over_actions(k + 1, wpi * adist[aj]);
            }
            ja[j] = -1;
        };
        over_actions(0, 1.0);
    }
    return total;
}

std::vector<double> gfbrm_obs_prob(Gfbrm& g, const SparseBelief& b, int a_i) {
    const FactoredPosg& m = g.model();
    auto order = next_slice_topo_order(m);
    std::vector<double> out(m.num_observations[g.agent()], 0.0);
    std::vector<int> ja(m.num_agents, -1);
    ja[g.agent()] = a_i;
    for (const auto& [sid, pb] : b.probs) {
        const auto& st = g.state(sid);
        std::function<void(std::size_t, double)> over_actions = [&](std::size_t k, double wpi) {
            if (k == g.opponents().size()) {
                dyn::for_each_next_state(m, order, st.s, ja, [&](const std::vector<int>& s2,
                                                                 double wt) {
                    // Joint observation P(jo|ja,s') summed over o_{-i} explicitly.
                    std::function<void(std::size_t, double)> over_obs = [&](std::size_t q,
                                                                            double wo) {
                        if (q == g.opponents().size()) {
                            const double* oi = dyn::obs_row(m, g.agent(), ja, s2);
                            for (int o = 0; o < m.num_observations[g.agent()]; ++o)
                                out[o] += pb * wpi * wt * wo * oi[o];
                            return;
                        }
                        int j = g.opponents()[q];
                        const double* od = dyn::obs_row(m, j, ja, s2);
                        for (int o = 0; o < m.num_observations[j]; ++o)
                            if (od[o] > 0.0) over_obs(q + 1, wo * od[o]);
                    };
                    over_obs(0, 1.0);
                });
                return;
            }
            int j = g.opponents()[k];
            const auto& adist = g.policy(j).action_dist(g.aoh_interner().sequence(st.aohs[k]));
            for (int aj = 0; aj < m.num_actions[j]; ++aj) {
                if (adist[aj] <= 0.0) continue;
                ja[j] = aj;
                over_actions(k + 1, wpi * adist[aj]);
            }
            ja[j] = -1;
        };
        over_actions(0, 1.0);
    }
    return out;
}

}  // namespace iba
