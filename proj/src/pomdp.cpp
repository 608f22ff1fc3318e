#include "iba/pomdp.hpp"

namespace iba {

const TransRow& BestResponsePomdp::transitions(StateId s, int a) {
    std::scoped_lock lock(mu_);
    auto key = std::pair{s, a};
    auto it = trans_cache_.find(key);
    if (it != trans_cache_.end()) return it->second;
    return trans_cache_.emplace(key, expand_transitions(s, a)).first->second;
}

const std::vector<double>& BestResponsePomdp::observation(int a, StateId s2) {
    std::scoped_lock lock(mu_);
    auto key = std::pair{a, s2};
    auto it = obs_cache_.find(key);
    if (it != obs_cache_.end()) return it->second;
    return obs_cache_.emplace(key, expand_observation(a, s2)).first->second;
}

}  // namespace iba
