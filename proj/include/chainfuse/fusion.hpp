#pragma once

#include "chainfuse/chains.hpp"
#include "chainfuse/correlation.hpp"
#include "chainfuse/dataset.hpp"
#include "chainfuse/decision_profile.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chainfuse {

using LabelVector = std::vector<std::uint8_t>;

// Label j assigned iff the fraction of members voting for it is >= t.
LabelVector fuse_mv(const DecisionProfile& dp, double t);

// Label j assigned iff the mean member support is >= t.
LabelVector fuse_me(const DecisionProfile& dp, double t);

// Class-conditional mean profiles for one label, restricted to the columns in
// `selected`. dt_pos / dt_neg are c x |selected|, row-major.
struct DecisionTemplatePair {
    std::size_t label = 0;
    std::vector<std::size_t> selected;
    std::size_t members = 0;
    std::vector<double> dt_pos;
    std::vector<double> dt_neg;
    std::size_t pos_count = 0;
    std::size_t neg_count = 0;

    // One class had no training rows; the label falls back to mean-support
    // thresholding at 0.5.
    bool degenerate() const { return pos_count == 0 || neg_count == 0; }

    bool operator==(const DecisionTemplatePair&) const = default;
};

// Templates with caller-chosen column sets, selections[j] for label j. Each
// selection must contain j.
std::vector<DecisionTemplatePair> fit_templates(std::span<const DecisionProfile> profiles, const LabelMatrix& labels,
                                                const std::vector<std::vector<std::size_t>>& selections);

// Decision templates over each label's own column.
std::vector<DecisionTemplatePair> fit_dt(std::span<const DecisionProfile> profiles, const LabelMatrix& labels);

// Decision templates over each label's dependent-label columns at threshold phi_t.
std::vector<DecisionTemplatePair> fit_uddt(std::span<const DecisionProfile> profiles, const LabelMatrix& labels,
                                           const PhiMatrix& pm, double phi_t);

// c x |columns| slice of a profile, row-major.
std::vector<double> profile_slice(const DecisionProfile& dp, std::span<const std::size_t> columns);

// 1 - squared Frobenius distance between equally shaped matrices.
double similarity(std::span<const double> slice, std::span<const double> templ);

// Per label: assign iff similarity to dt_pos is strictly greater than to dt_neg.
std::uint8_t fuse_dt_label(const DecisionProfile& dp, const DecisionTemplatePair& pair);
LabelVector fuse_dt(const DecisionProfile& dp, std::span<const DecisionTemplatePair> templates);

// Stacking: a classifier chain over the c*m member supports (member-major).
struct StackModel {
    ChainModel meta;
    std::size_t members = 0;
    std::size_t labels = 0;

    bool operator==(const StackModel&) const = default;
};

MultiLabelDataset stack_meta_dataset(std::span<const DecisionProfile> profiles, const LabelMatrix& labels);
StackModel fit_stack(std::span<const DecisionProfile> profiles, const LabelMatrix& labels, std::uint64_t seed);
// Meta-instances built from the ensemble's supports on the given training rows.
StackModel fit_stack(const MultiLabelDataset& ds, std::span<const std::size_t> rows, const EnsembleModel& ens,
                     std::uint64_t seed, std::size_t jobs = 1);
LabelVector fuse_stack(const StackModel& model, const DecisionProfile& dp);

enum class FusionScheme { mv, me, dt, uddt, stack };

const char* to_string(FusionScheme scheme);

struct FusionModel {
    FusionScheme scheme = FusionScheme::mv;
    double threshold = 0.5;                       // mv, me
    double phi_t = 0.0;                           // uddt
    std::vector<DecisionTemplatePair> templates;  // dt, uddt
    std::optional<StackModel> stack;              // stack

    LabelVector fuse(const DecisionProfile& dp) const;
    bool operator==(const FusionModel&) const = default;
};

FusionModel make_mv(double t);
FusionModel make_me(double t);

}  // namespace chainfuse
