#include "chainfuse/decision_profile.hpp"

#include "chainfuse/dataset.hpp"

namespace chainfuse {

DecisionProfile::DecisionProfile(std::size_t members, std::size_t labels)
    : members_(members), labels_(labels), supports_(members * labels, 0.0) {}

DecisionProfile::DecisionProfile(std::size_t members, std::size_t labels, std::vector<double> supports)
    : members_(members), labels_(labels), supports_(std::move(supports)) {
    if (supports_.size() != members_ * labels_) throw Error("decision profile size mismatch");
}

DecisionProfile DecisionProfile::unflatten(std::size_t members, std::size_t labels, std::span<const double> flat) {
    return DecisionProfile(members, labels, std::vector<double>(flat.begin(), flat.end()));
}

}  // namespace chainfuse
