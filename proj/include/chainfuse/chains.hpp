#pragma once

#include "chainfuse/dataset.hpp"
#include "chainfuse/decision_profile.hpp"
#include "chainfuse/naive_bayes.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chainfuse {

// A classifier chain. links[t] predicts label order[t] from the base features
// followed by the t preceding labels in chain order (as two-valued nominals).
// Binary relevance is the unlinked case: every link sees the base features
// only and the order is the identity.
struct ChainModel {
    std::vector<std::size_t> order;
    std::vector<NaiveBayesModel> links;
    std::size_t num_features = 0;
    bool linked = true;

    std::size_t num_labels() const { return order.size(); }
    bool operator==(const ChainModel&) const = default;
};

struct ChainOutput {
    std::vector<double> supports;      // original label order
    std::vector<std::uint8_t> labels;  // support >= 0.5
};

// Trains on the given dataset rows (duplicates allowed, as in a bootstrap sample).
ChainModel train_cc(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                    std::span<const std::size_t> order);
ChainModel train_cc(const MultiLabelDataset& ds, std::span<const std::size_t> order);

ChainModel train_br(const MultiLabelDataset& ds, std::span<const std::size_t> rows);
ChainModel train_br(const MultiLabelDataset& ds);

// Links receive their predecessors' hard predictions (threshold 0.5 inclusive).
ChainOutput predict_cc(const ChainModel& model, std::span<const double> row);

// Allocation-free variant; `scratch` is resized as needed.
void predict_cc(const ChainModel& model, std::span<const double> row, std::span<double> supports,
                std::vector<double>& scratch);

enum class EnsembleKind { ecc, ebr };

struct EnsembleModel {
    EnsembleKind kind = EnsembleKind::ecc;
    std::vector<ChainModel> members;
    std::vector<std::uint64_t> bag_seeds;  // per-member seed for label order and bootstrap
    std::size_t num_labels = 0;

    std::size_t size() const { return members.size(); }
    bool operator==(const EnsembleModel&) const = default;
};

// Member `index` of an ensemble seeded with `seed`. Each member draws its label
// order and its bootstrap sample (|rows| draws with replacement) from its own
// sub-stream, so members do not depend on each other or on the ensemble size.
ChainModel train_member(const MultiLabelDataset& ds, std::span<const std::size_t> rows, EnsembleKind kind,
                        std::uint64_t seed, std::size_t index);
std::uint64_t member_seed(std::uint64_t seed, std::size_t index);

EnsembleModel train_ecc(const MultiLabelDataset& ds, std::span<const std::size_t> rows, std::size_t c,
                        std::uint64_t seed, std::size_t jobs = 1);
EnsembleModel train_ecc(const MultiLabelDataset& ds, std::size_t c, std::uint64_t seed, std::size_t jobs = 1);
EnsembleModel train_ebr(const MultiLabelDataset& ds, std::span<const std::size_t> rows, std::size_t c,
                        std::uint64_t seed, std::size_t jobs = 1);
EnsembleModel train_ebr(const MultiLabelDataset& ds, std::size_t c, std::uint64_t seed, std::size_t jobs = 1);

// Row i of the profile is member i's supports in original label order.
DecisionProfile decision_profile(const EnsembleModel& ens, std::span<const double> row);

// Profiles for the given dataset rows, in the same order.
std::vector<DecisionProfile> decision_profiles(const EnsembleModel& ens, const MultiLabelDataset& ds,
                                               std::span<const std::size_t> rows, std::size_t jobs = 1);

}  // namespace chainfuse
