#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chainfuse {

// c x m matrix of per-member, per-label supports for one instance. Hard votes
// are derived from the supports (vote = support >= 0.5), so the two can never
// disagree.
class DecisionProfile {
public:
    DecisionProfile() = default;
    DecisionProfile(std::size_t members, std::size_t labels);
    DecisionProfile(std::size_t members, std::size_t labels, std::vector<double> supports);

    std::size_t members() const { return members_; }
    std::size_t labels() const { return labels_; }

    double support(std::size_t i, std::size_t j) const { return supports_[i * labels_ + j]; }
    void set_support(std::size_t i, std::size_t j, double v) { supports_[i * labels_ + j] = v; }
    std::uint8_t hard(std::size_t i, std::size_t j) const { return support(i, j) >= 0.5 ? 1 : 0; }

    std::span<const double> member(std::size_t i) const { return {supports_.data() + i * labels_, labels_}; }
    std::span<double> member(std::size_t i) { return {supports_.data() + i * labels_, labels_}; }

    // Member-major flattening: member 0's m supports, then member 1's, ...
    const std::vector<double>& flatten() const { return supports_; }
    static DecisionProfile unflatten(std::size_t members, std::size_t labels, std::span<const double> flat);

    bool operator==(const DecisionProfile&) const = default;

private:
    std::size_t members_ = 0;
    std::size_t labels_ = 0;
    std::vector<double> supports_;
};

}  // namespace chainfuse
