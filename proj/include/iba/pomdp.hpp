#pragma once

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "iba/common.hpp"

namespace iba {

using StateId = int;

// Sparse distribution over interned states, kept sorted by state id so all
// downstream iteration orders are deterministic.
struct SparseBelief {
    std::vector<std::pair<StateId, double>> probs;

    double mass() const {
        double s = 0;
        for (const auto& [_, p] : probs) s += p;
        return s;
    }
};

// Interned action-observation histories; id 0 is the empty history and every
// other id is created as a child (parent, action, observation).
class AohInterner {
public:
    int empty_id() const { return 0; }
    int child(int parent, int a, int o) {
        auto key = std::tuple{parent, a, o};
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back({parent, a, o, nodes_[parent].stage + 1});
        index_.emplace(key, id);
        return id;
    }
    int stage(int id) const { return nodes_[id].stage; }
    int size() const { return static_cast<int>(nodes_.size()); }
    int parent_of(int id) const { return nodes_[id].parent; }
    int action_of(int id) const { return nodes_[id].a; }
    int obs_of(int id) const { return nodes_[id].o; }

    // The alternating sequence (a^0, o^1, ..., a^{t-1}, o^t).
    std::vector<int> sequence(int id) const {
        std::vector<int> seq;
        while (id != 0) {
            seq.push_back(nodes_[id].o);
            seq.push_back(nodes_[id].a);
            id = nodes_[id].parent;
        }
        std::reverse(seq.begin(), seq.end());
        return seq;
    }

private:
    struct Node {
        int parent, a, o, stage;
    };
    std::vector<Node> nodes_ = {{-1, -1, -1, 0}};
    std::map<std::tuple<int, int, int>, int> index_;
};

using TransRow = std::vector<std::pair<StateId, double>>;

// The uniform non-stationary POMDP view shared by the global-form and the
// influence-augmented local model. Expansion is lazy and cached; evaluated
// entries are immutable, and the caches are internally synchronized.
class BestResponsePomdp {
public:
    BestResponsePomdp() = default;
    // Copies and moves transfer the caches but never the lock.
    BestResponsePomdp(const BestResponsePomdp& o)
        : trans_cache_(o.trans_cache_), obs_cache_(o.obs_cache_) {}
    BestResponsePomdp(BestResponsePomdp&& o) noexcept
        : trans_cache_(std::move(o.trans_cache_)), obs_cache_(std::move(o.obs_cache_)) {}
    BestResponsePomdp& operator=(const BestResponsePomdp& o) {
        trans_cache_ = o.trans_cache_;
        obs_cache_ = o.obs_cache_;
        return *this;
    }
    virtual ~BestResponsePomdp() = default;

    virtual int num_actions() const = 0;
    virtual int num_observations() const = 0;
    virtual int horizon() const = 0;
    virtual double gamma() const = 0;
    virtual const SparseBelief& initial_belief() = 0;
    virtual double reward(StateId s, int a, StateId s2) = 0;

    const TransRow& transitions(StateId s, int a);
    const std::vector<double>& observation(int a, StateId s2);

protected:
    virtual TransRow expand_transitions(StateId s, int a) = 0;
    virtual std::vector<double> expand_observation(int a, StateId s2) = 0;

private:
    std::mutex mu_;
    std::map<std::pair<StateId, int>, TransRow> trans_cache_;
    std::map<std::pair<int, StateId>, std::vector<double>> obs_cache_;
};

}  // namespace iba
