#pragma once

#include "iba/gfbrm.hpp"
#include "iba/ialm.hpp"
#include "iba/solver.hpp"

namespace iba {

// Per-AOH lemma deltas: maxima over actions of the absolute differences
// between the global-form and local-form predictions.
struct AohRecord {
    std::vector<int> aoh;  // alternating (a^0, o^1, ...)
    int stage = 0;
    double l1 = 0, l2 = 0, l3 = 0, l4 = 0;
    std::vector<double> q_delta;  // per action; empty at the last stage
};

struct EquivalenceReport {
    double tol = kDerivedTol;
    double exact_tol = kExactTol;
    std::vector<AohRecord> records;
    double max_l1 = 0, max_l2 = 0, max_l3 = 0, max_l4 = 0, max_q = 0;
    std::vector<double> max_q_per_stage;
    double value_gfbrm = 0, value_ialm = 0, value_delta = 0;
    std::vector<int> gfbrm_states_per_stage, ialm_states_per_stage;
    int unreachable_rows = 0;
    int unmatched_aohs = 0;  // AOHs reachable in one model but not the other
    double belief_factorization_delta = 0;

    bool pass() const {
        return max_l1 <= tol && max_l2 <= tol && max_l3 <= tol && max_l4 <= tol &&
               max_q <= tol && value_delta <= tol && unmatched_aohs == 0 &&
               unreachable_rows == 0 && belief_factorization_delta <= exact_tol;
    }
};

struct VerifyOptions {
    double tol = kDerivedTol;
    double exact_tol = kExactTol;
    bool force = false;  // forwarded to the influence computation
    std::int64_t cap = kDefaultTrajCap;
    std::int64_t cap_aohs = kDefaultAohCap;
    int jobs = 1;
    bool belief_factorization = true;
};

// Low-level deltas over beliefs induced by the same action-observation
// history in both models.

// Lemma 1: joint Pr(x^t, x^{t+1} | b, a).
double lemma1_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i);
// Lemma 2: marginal Pr(x^{t+1} | b, a).
double lemma2_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i);
// Lemma 3: immediate expected reward R(b, a).
double lemma3_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i);
// Lemma 4: observation probabilities Pr(o | b, a).
double lemma4_delta(Gfbrm& g, const SparseBelief& bg, Ialm& l, const SparseBelief& bl, int a_i);

// Self-contained checks following one action-observation history from the
// initial beliefs. Throw UnreachableHistory when the history has zero
// probability.
double check_lemma1(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i);
double check_lemma2(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i);
double check_lemma3(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i);
double check_lemma4(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                    const std::vector<Policy>& policies, const InfluencePoint& ip,
                    const std::vector<int>& aoh, int a_i);

// Belief-factorization identity: reconstructs the global-form belief at
// every reachable AOH from the local-form belief and the exact conditional
// over the external part, and reports the largest deviation.
double belief_factorization_delta(Gfbrm& g, const ValueTree& gt, Ialm& l, const ValueTree& lt,
                                  const std::vector<Policy>& policies,
                                  const LocalStateFunction& lsf,
                                  std::int64_t cap = kDefaultTrajCap);

// Full equivalence check: computes the influence point, builds and solves
// both models, runs all four lemma checks at every reachable AOH, and
// compares values and per-stage Q functions. Propagates DSetNotSeparating
// (unless opt.force) and CapExceeded.
EquivalenceReport check_theorem(const FactoredPosg& m, const LocalStateFunction& lsf, int agent,
                                const std::vector<Policy>& policies, const DSetSpec& dset,
                                const VerifyOptions& opt = {});

}  // namespace iba
