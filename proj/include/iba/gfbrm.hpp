#pragma once

#include <functional>

#include "iba/model.hpp"
#include "iba/pomdp.hpp"

namespace iba {

// Global-form best-response model: the POMDP over augmented states
// <full state, other agents' action-observation histories> induced by
// fixing the other agents' policies. Expansion is lazy; augmented states
// are interned.
class Gfbrm : public BestResponsePomdp {
public:
    struct AugState {
        std::vector<int> s;     // assignment to all factors
        std::vector<int> aohs;  // interned AOH per opponent, in agent order
        int stage = 0;
    };

    Gfbrm(const FactoredPosg& m, std::vector<Policy> policies, int agent);

    int num_actions() const override { return m_->num_actions[agent_]; }
    int num_observations() const override { return m_->num_observations[agent_]; }
    int horizon() const override { return m_->horizon; }
    double gamma() const override { return m_->gamma; }
    const SparseBelief& initial_belief() override { return b0_; }
    double reward(StateId s, int a, StateId s2) override;

    const FactoredPosg& model() const { return *m_; }
    int agent() const { return agent_; }
    const std::vector<int>& opponents() const { return opponents_; }
    const Policy& policy(int j) const { return policies_[j]; }
    const AugState& state(StateId id) const { return states_[id]; }
    int num_states_created() const { return static_cast<int>(states_.size()); }
    const AohInterner& aoh_interner() const { return aohs_; }

    // Opponent action profile recorded in a successor state's histories.
    std::vector<int> last_opponent_actions(StateId s2) const;

protected:
    TransRow expand_transitions(StateId s, int a) override;
    std::vector<double> expand_observation(int a, StateId s2) override;

private:
    StateId intern(AugState st);
    const FactoredPosg* m_;
    std::vector<Policy> policies_;
    int agent_;
    std::vector<int> opponents_;
    std::vector<int> trans_order_;
    AohInterner aohs_;
    std::vector<AugState> states_;
    std::map<std::pair<std::vector<int>, std::vector<int>>, StateId> index_;
    SparseBelief b0_;
};

// Closed-form expected reward over a global belief:
//   sum_{s,s',a_-i} P(s'|s,ja) R_i(s,ja,s') sum_AOH pi(a_-i|AOH) b(s,AOH).
// Kept as an independent arithmetic path from the generic POMDP route.
double gfbrm_expected_reward(Gfbrm& g, const SparseBelief& b, int a_i);

// Closed-form observation probability over a global belief:
//   sum_{s,s',a_-i,o_-i} P(s'|s,ja) P(jo|ja,s') sum_AOH pi(a_-i|AOH) b(s,AOH).
std::vector<double> gfbrm_obs_prob(Gfbrm& g, const SparseBelief& b, int a_i);

// Shared low-level helpers for factored dynamics, also used by the
// verification module.
namespace dyn {

// Value of a CPT/reward parent given (prev assignment, joint action, next
// assignment); next may be partial (-1 entries) only for parents that are
// guaranteed assigned.
int parent_value(const NodeRef& p, const std::vector<int>& prev, const std::vector<int>& ja,
                 const std::vector<int>& next);

// Enumerates the support of P(s' | s, ja) as (assignment, probability)
// pairs, following the same-slice topological order.
void for_each_next_state(const FactoredPosg& m, const std::vector<int>& trans_order,
                         const std::vector<int>& s, const std::vector<int>& ja,
                         const std::function<void(const std::vector<int>&, double)>& fn);

// Enumerates the support of the initial-state distribution b0(s).
void for_each_initial_state(const FactoredPosg& m,
                            const std::function<void(const std::vector<int>&, double)>& fn);

// One agent's observation distribution O_j(o | ja, s').
const double* obs_row(const FactoredPosg& m, int j, const std::vector<int>& ja,
                      const std::vector<int>& next);

double reward_value(const FactoredPosg& m, int j, const std::vector<int>& prev,
                    const std::vector<int>& ja, const std::vector<int>& next);

}  // namespace dyn

}  // namespace iba
