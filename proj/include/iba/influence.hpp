#pragma once

#include <functional>
#include <map>

#include "iba/model.hpp"
#include "iba/unrolled.hpp"

namespace iba {

// Canonical layout of the direct-source space u^{t+1} and of the extra
// conditioning tuple used when intra-stage dependencies are present.
struct SourceSpace {
    std::vector<int> u_prev;     // y_u^t factor ids, ascending
    std::vector<int> u_actions;  // a_u^t foreign agent ids, ascending
    std::vector<int> u_next;     // y_u^{t+1} factor ids, ascending (ISD only)
    MixedRadix radix;            // over the domains in that order

    // Conditioning beyond the d-set (ISD only): <x_v^t, a_i^t, x_v^{t+1}>.
    std::vector<int> cond_prev;  // x_v^t factor ids
    bool cond_own_action = false;
    std::vector<int> cond_next;  // x_v^{t+1} factor ids

    int arity() const {
        return static_cast<int>(u_prev.size() + u_actions.size() + u_next.size());
    }
};

SourceSpace make_source_space(const FactoredPosg& m, const InfluenceLinks& links);

struct InfluenceRow {
    std::vector<double> dist;  // over u assignments in SourceSpace order
    bool reachable = true;
};

// Rows keyed by the canonical d-set encoding concatenated with the
// conditioning tuple values (empty for the across-stage case).
struct StageTable {
    std::map<std::vector<int>, InfluenceRow> rows;
};

struct InfluencePoint {
    SourceSpace space;
    DSetSpec dset;
    std::vector<StageTable> stages;  // stages[t] separates arrivals at t+1

    // Null when the key was never reached by exact inference.
    const InfluenceRow* find(int t, const std::vector<int>& key) const {
        const auto& rows = stages[t].rows;
        auto it = rows.find(key);
        return it == rows.end() ? nullptr : &it->second;
    }
};

struct InfluenceOptions {
    bool force = false;
    double tol = kDerivedTol;
    std::int64_t cap = kDefaultTrajCap;
};

// Unrolled-net nodes carrying D^{t+1}, in the canonical encoding order:
// FullHistory f -> f^0..f^t, Stage0Only -> f^0, LastValue -> f^t,
// OwnAction -> a_i^0..a_i^{t-1}.
std::vector<int> dset_key_nodes(const UnrolledNet& net, const DSetSpec& dset, int agent, int t);

// Across-stage influence (Def. 7): I(u^{t+1} | D^{t+1}) for t+1 = 1..h.
// Refuses with DSetNotSeparating when the d-set fails the numeric
// d-separation check, unless opt.force is set.
InfluencePoint compute_influence(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                                 const std::vector<Policy>& policies, const DSetSpec& dset,
                                 const InfluenceOptions& opt = {});

// Intra-stage-aware influence (Def. 12): rows additionally conditioned on
// <x_v^t, a_i^t, x_v^{t+1}> exactly when those variables are ancestors of an
// intra-stage source. Falls back to compute_influence when there are none.
InfluencePoint compute_influence_isd(const FactoredPosg& m, const LocalStateFunction& lsf,
                                     int agent, const std::vector<Policy>& policies,
                                     const DSetSpec& dset, const InfluenceOptions& opt = {});

// Exerted influence at stage t: distribution over <y_w^t, a_w^t> given
// D^{t+1}, where w adds the indirect sources to u.
struct ExertedTable {
    std::vector<int> w_prev;     // y_w^t factor ids
    std::vector<int> w_actions;  // agent ids
    MixedRadix radix;
    std::map<std::vector<int>, InfluenceRow> rows;  // keyed by the d-set encoding
};

ExertedTable exerted_influence(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                               const std::vector<Policy>& policies, const DSetSpec& dset, int t,
                               const InfluenceOptions& opt = {});

// Composes the exerted table through the intra-stage CPT product,
// reproducing the experienced influence rows.
StageTable experienced_from_exerted(const FactoredPosg& m, const Classification& cls,
                                    const SourceSpace& space, const ExertedTable& exerted,
                                    int num_own_actions);

// Induced CPT of one NLAF (across-stage case):
//   p(xn_k^{t+1} | x_i^t, D^{t+1}, a_i) = sum_u Pr(xn_k | x_i^t, a_i, u) I(u | D).
// xprev/xnext are full-length assignments with -1 on factors that do not
// participate; xnext supplies same-slice modeled parents when present.
std::vector<double> induced_cpt_row(const FactoredPosg& m, const InfluencePoint& ip, int nlaf,
                                    int t, const std::vector<int>& xprev,
                                    const std::vector<int>& dkey, int a_i,
                                    const std::vector<int>& xnext);

// Probability of the NLAF values inside one full next assignment:
//   sum_u I(u | D [, x_v^t, a_i, x_v^{t+1}]) prod_k CPT_k(xn_k | ...).
// xprev/xnext are full-length assignments with -1 on unassigned factors; all
// modeled factors of xnext must be set. Sets *used_unreachable when a
// flagged-uniform influence row had to be substituted.
double nlaf_prob(const FactoredPosg& m, const Classification& cls, const InfluencePoint& ip,
                 int t, const std::vector<int>& xprev, const std::vector<int>& dkey,
                 const std::vector<int>& xnext, int a_i, bool* used_unreachable = nullptr);

// Joint distribution over all NLAF next values given local state, d-set
// value, the already-generated OLAF next values, and the protagonist action.
// Returns probabilities keyed by the NLAF assignment (in cls.nlafs order).
// Sets *used_unreachable when a flagged-uniform row had to be substituted.
std::map<std::vector<int>, double> nlaf_joint(const FactoredPosg& m, const Classification& cls,
                                              const InfluencePoint& ip, int t,
                                              const std::vector<int>& xprev,
                                              const std::vector<int>& dkey,
                                              const std::vector<int>& xnext_olaf, int a_i,
                                              bool* used_unreachable = nullptr);

// Factorization proposition: compares every reachable influence row against
// the product of its per-NLAF block marginals. Returns true when the largest
// deviation is within tol; the deviation itself is written to *max_gap. With
// disjoint per-NLAF source sets the gap should vanish; a shared source
// generally breaks the factorization.
bool factorization_check(const InfluencePoint& ip, const InfluenceLinks& links,
                         double tol = kExactTol, double* max_gap = nullptr);

}  // namespace iba
