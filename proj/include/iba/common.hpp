#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace iba {

// Tolerances used throughout. Direct table identities (row normalization,
// identical arithmetic paths) are held to kExactTol; quantities derived
// through different computation paths to kDerivedTol.
inline constexpr double kExactTol = 1e-12;
inline constexpr double kDerivedTol = 1e-9;

// Default resource caps (overridable via CLI flags).
inline constexpr std::int64_t kDefaultAohCap = 1'000'000;
inline constexpr std::int64_t kDefaultTrajCap = 10'000'000;

struct CapExceeded : std::runtime_error {
    explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroEvidence : std::runtime_error {
    explicit ZeroEvidence(const std::string& what) : std::runtime_error(what) {}
};

struct UnreachableHistory : std::runtime_error {
    explicit UnreachableHistory(const std::string& what) : std::runtime_error(what) {}
};

struct DSetNotSeparating : std::runtime_error {
    DSetNotSeparating(const std::string& what, double violation)
        : std::runtime_error(what), max_violation(violation) {}
    double max_violation;
};

struct ZeroProbObservation : std::runtime_error {
    explicit ZeroProbObservation(const std::string& what) : std::runtime_error(what) {}
};

struct InfluenceOnObservationOrReward : std::runtime_error {
    explicit InfluenceOnObservationOrReward(const std::string& what)
        : std::runtime_error(what) {}
};

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// Row-major indexing over a sequence of finite domains: index =
// sum_k value[k] * stride[k] with the last position varying fastest.
class MixedRadix {
public:
    MixedRadix() = default;
    explicit MixedRadix(std::vector<int> sizes) : sizes_(std::move(sizes)) {
        strides_.assign(sizes_.size(), 1);
        size_ = 1;
        for (int k = static_cast<int>(sizes_.size()) - 1; k >= 0; --k) {
            strides_[k] = size_;
            size_ *= sizes_[k];
        }
    }

    std::int64_t size() const { return size_; }
    int arity() const { return static_cast<int>(sizes_.size()); }
    const std::vector<int>& sizes() const { return sizes_; }

    std::int64_t index(const std::vector<int>& values) const {
        std::int64_t idx = 0;
        for (std::size_t k = 0; k < sizes_.size(); ++k) idx += values[k] * strides_[k];
        return idx;
    }

    std::vector<int> values(std::int64_t index) const {
        std::vector<int> out(sizes_.size());
        for (std::size_t k = 0; k < sizes_.size(); ++k) {
            out[k] = static_cast<int>(index / strides_[k]);
            index %= strides_[k];
        }
        return out;
    }

private:
    std::vector<int> sizes_;
    std::vector<std::int64_t> strides_;
    std::int64_t size_ = 1;
};

inline bool all_finite(const std::vector<double>& xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace iba
