#include "chainfuse/fusion.hpp"

#include "chainfuse/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace chainfuse {

namespace {
void check_threshold(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw Error("fusion threshold must lie in (0, 1]");
}

double mean_support(const DecisionProfile& dp, std::size_t j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < dp.members(); ++i) sum += dp.support(i, j);
    return sum / static_cast<double>(dp.members());
}
}  // namespace

LabelVector fuse_mv(const DecisionProfile& dp, double t) {
    check_threshold(t);
    LabelVector out(dp.labels(), 0);
    for (std::size_t j = 0; j < dp.labels(); ++j) {
        std::size_t votes = 0;
        for (std::size_t i = 0; i < dp.members(); ++i) votes += dp.hard(i, j);
        out[j] = static_cast<double>(votes) / static_cast<double>(dp.members()) >= t ? 1 : 0;
    }
    return out;
}

LabelVector fuse_me(const DecisionProfile& dp, double t) {
    check_threshold(t);
    LabelVector out(dp.labels(), 0);
    for (std::size_t j = 0; j < dp.labels(); ++j) out[j] = mean_support(dp, j) >= t ? 1 : 0;
    return out;
}

std::vector<double> profile_slice(const DecisionProfile& dp, std::span<const std::size_t> columns) {
    std::vector<double> out(dp.members() * columns.size());
    for (std::size_t i = 0; i < dp.members(); ++i)
        for (std::size_t k = 0; k < columns.size(); ++k) out[i * columns.size() + k] = dp.support(i, columns[k]);
    return out;
}

double similarity(std::span<const double> slice, std::span<const double> templ) {
    if (slice.size() != templ.size()) throw Error("profile slice and template shapes differ");
    double dist = 0.0;
    for (std::size_t k = 0; k < slice.size(); ++k) {
        const double diff = slice[k] - templ[k];
        dist += diff * diff;
    }
    return 1.0 - dist;
}

std::vector<DecisionTemplatePair> fit_templates(std::span<const DecisionProfile> profiles, const LabelMatrix& labels,
                                                const std::vector<std::vector<std::size_t>>& selections) {
    if (profiles.empty()) throw Error("decision templates need at least one training profile");
    if (profiles.size() != labels.rows()) throw Error("profile count does not match label rows");
    const std::size_t c = profiles.front().members();
    const std::size_t m = labels.cols();
    if (selections.size() != m) throw Error("one column selection per label is required");
    for (const auto& dp : profiles)
        if (dp.members() != c || dp.labels() != m) throw Error("decision profiles have inconsistent shapes");

    std::vector<DecisionTemplatePair> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto& sel = selections[j];
        if (std::find(sel.begin(), sel.end(), j) == sel.end())
            throw Error("label " + std::to_string(j) + " is missing from its own template columns");
        for (auto col : sel)
            if (col >= m) throw Error("template column out of range");

        DecisionTemplatePair& pair = out[j];
        pair.label = j;
        pair.selected = sel;
        pair.members = c;
        const std::size_t s = sel.size();
        pair.dt_pos.assign(c * s, 0.0);
        pair.dt_neg.assign(c * s, 0.0);
        for (std::size_t r = 0; r < profiles.size(); ++r) {
            const bool positive = labels(r, j) != 0;
            auto& acc = positive ? pair.dt_pos : pair.dt_neg;
            ++(positive ? pair.pos_count : pair.neg_count);
            const DecisionProfile& dp = profiles[r];
            for (std::size_t i = 0; i < c; ++i)
                for (std::size_t k = 0; k < s; ++k) acc[i * s + k] += dp.support(i, sel[k]);
        }
        auto finish = [](std::vector<double>& acc, std::size_t count) {
            if (count == 0) {
                std::fill(acc.begin(), acc.end(), 0.5);
                return;
            }
            for (auto& v : acc) v /= static_cast<double>(count);
        };
        finish(pair.dt_pos, pair.pos_count);
        finish(pair.dt_neg, pair.neg_count);
    }
    return out;
}

std::vector<DecisionTemplatePair> fit_dt(std::span<const DecisionProfile> profiles, const LabelMatrix& labels) {
    std::vector<std::vector<std::size_t>> selections(labels.cols());
    for (std::size_t j = 0; j < labels.cols(); ++j) selections[j] = {j};
    return fit_templates(profiles, labels, selections);
}

std::vector<DecisionTemplatePair> fit_uddt(std::span<const DecisionProfile> profiles, const LabelMatrix& labels,
                                           const PhiMatrix& pm, double phi_t) {
    if (pm.size() != labels.cols()) throw Error("phi matrix does not match the label count");
    std::vector<std::vector<std::size_t>> selections(labels.cols());
    for (std::size_t j = 0; j < labels.cols(); ++j) selections[j] = dependent_labels(pm, j, phi_t);
    return fit_templates(profiles, labels, selections);
}

std::uint8_t fuse_dt_label(const DecisionProfile& dp, const DecisionTemplatePair& pair) {
    if (pair.degenerate()) return mean_support(dp, pair.label) >= 0.5 ? 1 : 0;
    const auto slice = profile_slice(dp, pair.selected);
    return similarity(slice, pair.dt_pos) > similarity(slice, pair.dt_neg) ? 1 : 0;
}

LabelVector fuse_dt(const DecisionProfile& dp, std::span<const DecisionTemplatePair> templates) {
    if (templates.size() != dp.labels()) throw Error("one template pair per label is required");
    LabelVector out(dp.labels(), 0);
    for (std::size_t j = 0; j < templates.size(); ++j) {
        if (templates[j].members != dp.members()) throw Error("template member count does not match the profile");
        out[j] = fuse_dt_label(dp, templates[j]);
    }
    return out;
}

MultiLabelDataset stack_meta_dataset(std::span<const DecisionProfile> profiles, const LabelMatrix& labels) {
    if (profiles.empty()) throw Error("stacking needs at least one training profile");
    if (profiles.size() != labels.rows()) throw Error("profile count does not match label rows");
    const std::size_t c = profiles.front().members();
    const std::size_t m = profiles.front().labels();
    std::vector<Feature> features;
    features.reserve(c * m);
    for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = 0; j < m; ++j)
            features.push_back({"member" + std::to_string(i) + "_label" + std::to_string(j), FeatureKind::numeric, {}});
    std::vector<double> values;
    values.reserve(profiles.size() * c * m);
    for (const auto& dp : profiles) {
        if (dp.members() != c || dp.labels() != m) throw Error("decision profiles have inconsistent shapes");
        values.insert(values.end(), dp.flatten().begin(), dp.flatten().end());
    }
    std::vector<std::string> names(m);
    for (std::size_t j = 0; j < m; ++j) names[j] = "y" + std::to_string(j);
    return MultiLabelDataset("stack", std::move(features), std::move(values), std::move(names), labels);
}

StackModel fit_stack(std::span<const DecisionProfile> profiles, const LabelMatrix& labels, std::uint64_t seed) {
    const MultiLabelDataset meta = stack_meta_dataset(profiles, labels);
    Rng rng(seed);
    const auto order = random_permutation(meta.num_labels(), rng);
    StackModel model;
    model.meta = train_cc(meta, order);
    model.members = profiles.front().members();
    model.labels = profiles.front().labels();
    return model;
}

StackModel fit_stack(const MultiLabelDataset& ds, std::span<const std::size_t> rows, const EnsembleModel& ens,
                     std::uint64_t seed, std::size_t jobs) {
    const auto profiles = decision_profiles(ens, ds, rows, jobs);
    return fit_stack(profiles, ds.labels().select_rows(rows), seed);
}

LabelVector fuse_stack(const StackModel& model, const DecisionProfile& dp) {
    if (dp.members() != model.members || dp.labels() != model.labels)
        throw Error("decision profile shape does not match the stacking model");
    return predict_cc(model.meta, dp.flatten()).labels;
}

const char* to_string(FusionScheme scheme) {
    switch (scheme) {
        case FusionScheme::mv: return "mv";
        case FusionScheme::me: return "me";
        case FusionScheme::dt: return "dt";
        case FusionScheme::uddt: return "uddt";
        case FusionScheme::stack: return "stack";
    }
    return "?";
}

LabelVector FusionModel::fuse(const DecisionProfile& dp) const {
    switch (scheme) {
        case FusionScheme::mv: return fuse_mv(dp, threshold);
        case FusionScheme::me: return fuse_me(dp, threshold);
        case FusionScheme::dt:
        case FusionScheme::uddt: return fuse_dt(dp, templates);
        case FusionScheme::stack:
            if (!stack) throw Error("stacking fusion model has no meta-classifier");
            return fuse_stack(*stack, dp);
    }
    throw Error("unknown fusion scheme");
}

FusionModel make_mv(double t) {
    check_threshold(t);
    FusionModel f;
    f.scheme = FusionScheme::mv;
    f.threshold = t;
    return f;
}

FusionModel make_me(double t) {
    check_threshold(t);
    FusionModel f;
    f.scheme = FusionScheme::me;
    f.threshold = t;
    return f;
}

}  // namespace chainfuse
