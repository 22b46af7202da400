#include "chainfuse/chains.hpp"

#include "chainfuse/parallel.hpp"
#include "chainfuse/rng.hpp"

#include <algorithm>
#include <numeric>

namespace chainfuse {

namespace {

void check_order(std::span<const std::size_t> order, std::size_t m) {
    if (order.size() != m) throw Error("label order must list every label exactly once");
    std::vector<bool> seen(m, false);
    for (auto j : order) {
        if (j >= m || seen[j]) throw Error("label order is not a permutation");
        seen[j] = true;
    }
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

ChainModel train_links(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                       std::span<const std::size_t> order, bool linked) {
    const std::size_t m = ds.num_labels();
    const std::size_t d = ds.num_features();
    check_order(order, m);
    if (rows.empty()) throw Error("cannot train a chain on an empty sample");

    // Base features followed by the labels in chain order.
    const std::size_t width = d + (linked ? m : 0);
    std::vector<double> design(rows.size() * width);
    std::vector<std::vector<std::uint8_t>> targets(m, std::vector<std::uint8_t>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = ds.row(rows[r]);
        double* dst = design.data() + r * width;
        std::copy(src.begin(), src.end(), dst);
        for (std::size_t t = 0; t < m; ++t) {
            const std::uint8_t y = ds.label(rows[r], order[t]);
            targets[t][r] = y;
            if (linked) dst[d + t] = y;
        }
    }

    NbSchema schema = feature_schema(ds.features());
    ChainModel model;
    model.order.assign(order.begin(), order.end());
    model.num_features = d;
    model.linked = linked;
    model.links.reserve(m);
    for (std::size_t t = 0; t < m; ++t) {
        const std::size_t cols = linked ? d + t : d;
        RowMatrixView view{design.data(), rows.size(), cols, width};
        model.links.push_back(train_nb(schema, view, targets[t]));
        if (linked) schema.push_back(label_column());
    }
    return model;
}

}  // namespace

ChainModel train_cc(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                    std::span<const std::size_t> order) {
    return train_links(ds, rows, order, true);
}

ChainModel train_cc(const MultiLabelDataset& ds, std::span<const std::size_t> order) {
    return train_cc(ds, all_rows(ds.size()), order);
}

ChainModel train_br(const MultiLabelDataset& ds, std::span<const std::size_t> rows) {
    return train_links(ds, rows, all_rows(ds.num_labels()), false);
}

ChainModel train_br(const MultiLabelDataset& ds) { return train_br(ds, all_rows(ds.size())); }

void predict_cc(const ChainModel& model, std::span<const double> row, std::span<double> supports,
                std::vector<double>& scratch) {
    const std::size_t d = model.num_features;
    const std::size_t m = model.num_labels();
    if (row.size() != d) throw Error("row width does not match the chain's feature count");
    if (supports.size() != m) throw Error("support buffer has the wrong length");
    if (!model.linked) {
        for (std::size_t t = 0; t < m; ++t) supports[model.order[t]] = model.links[t].predict_proba(row);
        return;
    }
    scratch.resize(d + m);
    std::copy(row.begin(), row.end(), scratch.begin());
    for (std::size_t t = 0; t < m; ++t) {
        const double p = model.links[t].predict_proba(std::span<const double>(scratch.data(), d + t));
        supports[model.order[t]] = p;
        scratch[d + t] = p >= 0.5 ? 1.0 : 0.0;
    }
}

ChainOutput predict_cc(const ChainModel& model, std::span<const double> row) {
    ChainOutput out;
    out.supports.assign(model.num_labels(), 0.0);
    std::vector<double> scratch;
    predict_cc(model, row, out.supports, scratch);
    out.labels.resize(out.supports.size());
    for (std::size_t j = 0; j < out.supports.size(); ++j) out.labels[j] = out.supports[j] >= 0.5 ? 1 : 0;
    return out;
}

std::uint64_t member_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, {index}); }

ChainModel train_member(const MultiLabelDataset& ds, std::span<const std::size_t> rows, EnsembleKind kind,
                        std::uint64_t seed, std::size_t index) {
    const std::uint64_t bag_seed = member_seed(seed, index);
    Rng order_rng(derive_seed(bag_seed, {0}));
    Rng bag_rng(derive_seed(bag_seed, {1}));

    std::vector<std::size_t> sample = bootstrap_sample(rows.size(), bag_rng);
    for (auto& s : sample) s = rows[s];

    if (kind == EnsembleKind::ebr) return train_br(ds, sample);
    const auto order = random_permutation(ds.num_labels(), order_rng);
    return train_cc(ds, sample, order);
}

namespace {
EnsembleModel train_ensemble(const MultiLabelDataset& ds, std::span<const std::size_t> rows, std::size_t c,
                             std::uint64_t seed, std::size_t jobs, EnsembleKind kind) {
    if (c == 0) throw Error("ensemble size must be at least 1");
    EnsembleModel ens;
    ens.kind = kind;
    ens.num_labels = ds.num_labels();
    ens.members.resize(c);
    ens.bag_seeds.resize(c);
    parallel_for(c, jobs, [&](std::size_t i) {
        ens.members[i] = train_member(ds, rows, kind, seed, i);
        ens.bag_seeds[i] = member_seed(seed, i);
    });
    return ens;
}
}  // namespace

EnsembleModel train_ecc(const MultiLabelDataset& ds, std::span<const std::size_t> rows, std::size_t c,
                        std::uint64_t seed, std::size_t jobs) {
    return train_ensemble(ds, rows, c, seed, jobs, EnsembleKind::ecc);
}

EnsembleModel train_ecc(const MultiLabelDataset& ds, std::size_t c, std::uint64_t seed, std::size_t jobs) {
    return train_ecc(ds, all_rows(ds.size()), c, seed, jobs);
}

EnsembleModel train_ebr(const MultiLabelDataset& ds, std::span<const std::size_t> rows, std::size_t c,
                        std::uint64_t seed, std::size_t jobs) {
    return train_ensemble(ds, rows, c, seed, jobs, EnsembleKind::ebr);
}

EnsembleModel train_ebr(const MultiLabelDataset& ds, std::size_t c, std::uint64_t seed, std::size_t jobs) {
    return train_ebr(ds, all_rows(ds.size()), c, seed, jobs);
}

DecisionProfile decision_profile(const EnsembleModel& ens, std::span<const double> row) {
    DecisionProfile dp(ens.size(), ens.num_labels);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < ens.size(); ++i) predict_cc(ens.members[i], row, dp.member(i), scratch);
    return dp;
}

std::vector<DecisionProfile> decision_profiles(const EnsembleModel& ens, const MultiLabelDataset& ds,
                                               std::span<const std::size_t> rows, std::size_t jobs) {
    std::vector<DecisionProfile> out(rows.size());
    const std::size_t chunk = 64;
    const std::size_t chunks = (rows.size() + chunk - 1) / chunk;
    parallel_for(chunks, jobs, [&](std::size_t b) {
        std::vector<double> scratch;
        const std::size_t end = std::min(rows.size(), (b + 1) * chunk);
        for (std::size_t r = b * chunk; r < end; ++r) {
            DecisionProfile dp(ens.size(), ens.num_labels);
            for (std::size_t i = 0; i < ens.size(); ++i)
                predict_cc(ens.members[i], ds.row(rows[r]), dp.member(i), scratch);
            out[r] = std::move(dp);
        }
    });
    return out;
}

}  // namespace chainfuse
