#pragma once

#include "iba/influence.hpp"
#include "iba/pomdp.hpp"

namespace iba {

// Marginal of the initial belief over the modeled factors; keys are
// full-length assignments with -1 on unmodeled factors, so correlations
// between modeled factors are preserved.
std::map<std::vector<int>, double> initial_local_belief(const FactoredPosg& m,
                                                        const LocalStateFunction& lsf, int agent);

// Canonical flat encoding of the d-set value at stage 0.
std::vector<int> initial_dset_value(const DSetSpec& dset, const std::vector<int>& s0);

// Deterministic d-set update: maps the stage-t encoding D^{t+1} to D^{t+2}
// given the agent's action and the next modeled assignment. FullHistory
// entries append, LastValue entries replace, Stage0Only entries copy, and
// OwnAction entries append a_i.
std::vector<int> d_update(const DSetSpec& dset, int t, const std::vector<int>& dval, int a_i,
                          const std::vector<int>& xnext);

// Influence-augmented local model: the POMDP over augmented states
// <local state, d-set value> induced by an influence point. States are
// interned lazily, like in the global-form model.
class Ialm : public BestResponsePomdp {
public:
    struct AugState {
        std::vector<int> x;  // full-length assignment, -1 on unmodeled factors
        std::vector<int> dval;
        int stage = 0;
    };

    Ialm(const FactoredPosg& m, const LocalStateFunction& lsf, int agent, InfluencePoint ip);

    int num_actions() const override { return m_->num_actions[agent_]; }
    int num_observations() const override { return m_->num_observations[agent_]; }
    int horizon() const override { return m_->horizon; }
    double gamma() const override { return m_->gamma; }
    const SparseBelief& initial_belief() override { return b0_; }
    double reward(StateId s, int a, StateId s2) override;

    const FactoredPosg& model() const { return *m_; }
    int agent() const { return agent_; }
    const Classification& classification() const { return cls_; }
    const InfluencePoint& influence() const { return ip_; }
    const AugState& state(StateId id) const { return states_[id]; }
    int num_states_created() const { return static_cast<int>(states_.size()); }
    // Times a missing influence row was replaced by the flagged uniform.
    int num_flagged_rows() const { return flagged_; }

protected:
    TransRow expand_transitions(StateId s, int a) override;
    std::vector<double> expand_observation(int a, StateId s2) override;

private:
    StateId intern(AugState st);
    const FactoredPosg* m_;
    LocalStateFunction lsf_;
    int agent_;
    Classification cls_;
    InfluencePoint ip_;
    std::vector<int> modeled_;  // sorted factor ids
    MixedRadix modeled_radix_;
    std::vector<AugState> states_;
    std::map<std::tuple<std::vector<int>, std::vector<int>, int>, StateId> index_;
    SparseBelief b0_;
    int flagged_ = 0;
};

// Closed-form expected reward over a local belief:
//   sum_{<x,D>} b(x,D) sum_{x'} P(x'|x,D,a,I) R_i(x,a,x').
// An independent arithmetic path from the generic POMDP route.
double ialm_expected_reward(Ialm& l, const SparseBelief& b, int a_i);

// Closed-form observation probability over a local belief:
//   sum_{<x,D>} b(x,D) sum_{x'} P(x'|x,D,a,I) O_i(o|a,x').
std::vector<double> ialm_obs_prob(Ialm& l, const SparseBelief& b, int a_i);

}  // namespace iba
