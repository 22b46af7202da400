#include "chainfuse/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chainfuse {

NbSchema feature_schema(const std::vector<Feature>& features) {
    NbSchema schema;
    schema.reserve(features.size());
    for (const auto& f : features) {
        if (f.kind == FeatureKind::numeric) schema.push_back({FeatureKind::numeric, 0, false});
        else schema.push_back({FeatureKind::nominal, f.values.size() + 1, true});
    }
    return schema;
}

namespace {
std::size_t category_of(const NbColumn& col, double v) {
    if (is_missing(v)) {
        if (!col.missing_slot) throw Error("missing value in a column without a missing category");
        return col.categories - 1;
    }
    const auto idx = static_cast<std::size_t>(v);
    const std::size_t limit = col.missing_slot ? col.categories - 1 : col.categories;
    if (v < 0 || idx >= limit) throw Error("nominal value outside the training schema");
    return idx;
}
}  // namespace

NaiveBayesModel train_nb(const NbSchema& schema, RowMatrixView rows, std::span<const std::uint8_t> targets) {
    if (rows.rows == 0) throw Error("cannot train Naive Bayes on an empty training set");
    if (targets.size() != rows.rows) throw Error("target count does not match row count");
    if (rows.cols != schema.size()) throw Error("row width does not match the schema");

    const std::size_t d = schema.size();
    NaiveBayesModel model;
    model.schema = schema;

    std::size_t class_count[2] = {0, 0};
    for (auto t : targets) ++class_count[t ? 1 : 0];
    model.prior1 = static_cast<double>(class_count[1]) / static_cast<double>(rows.rows);

    for (int c = 0; c < 2; ++c) {
        model.mean[c].assign(d, 0.0);
        model.variance[c].assign(d, kVarianceFloor);
    }
    model.gaussian_usable.assign(d, 0);
    model.offset.assign(d, 0);
    std::size_t total_categories = 0;
    for (std::size_t f = 0; f < d; ++f) {
        if (schema[f].kind != FeatureKind::nominal) continue;
        if (schema[f].categories == 0) throw Error("nominal column without categories");
        model.offset[f] = total_categories;
        total_categories += schema[f].categories;
    }

    // Numeric columns: mean then variance over observed values.
    std::vector<double> observed[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    std::vector<double> counts[2] = {std::vector<double>(total_categories, 0.0),
                                     std::vector<double>(total_categories, 0.0)};
    for (std::size_t i = 0; i < rows.rows; ++i) {
        const int c = targets[i] ? 1 : 0;
        auto row = rows.row(i);
        for (std::size_t f = 0; f < d; ++f) {
            const double v = row[f];
            if (schema[f].kind == FeatureKind::numeric) {
                if (is_missing(v)) continue;
                model.mean[c][f] += v;
                observed[c][f] += 1.0;
            } else {
                counts[c][model.offset[f] + category_of(schema[f], v)] += 1.0;
            }
        }
    }
    for (int c = 0; c < 2; ++c)
        for (std::size_t f = 0; f < d; ++f)
            if (observed[c][f] > 0) model.mean[c][f] /= observed[c][f];

    std::vector<double> sq[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t i = 0; i < rows.rows; ++i) {
        const int c = targets[i] ? 1 : 0;
        auto row = rows.row(i);
        for (std::size_t f = 0; f < d; ++f) {
            if (schema[f].kind != FeatureKind::numeric || is_missing(row[f])) continue;
            const double dev = row[f] - model.mean[c][f];
            sq[c][f] += dev * dev;
        }
    }
    for (std::size_t f = 0; f < d; ++f) {
        if (schema[f].kind != FeatureKind::numeric) continue;
        for (int c = 0; c < 2; ++c)
            if (observed[c][f] > 0) model.variance[c][f] = std::max(sq[c][f] / observed[c][f], kVarianceFloor);
        model.gaussian_usable[f] = observed[0][f] > 0 && observed[1][f] > 0;
    }

    for (int c = 0; c < 2; ++c) {
        model.log_prob[c].assign(total_categories, 0.0);
        for (std::size_t f = 0; f < d; ++f) {
            if (schema[f].kind != FeatureKind::nominal) continue;
            const double k = static_cast<double>(schema[f].categories);
            const double denom = static_cast<double>(class_count[c]) + k;
            for (std::size_t v = 0; v < schema[f].categories; ++v)
                model.log_prob[c][model.offset[f] + v] = std::log((counts[c][model.offset[f] + v] + 1.0) / denom);
        }
    }
    model.finalize();
    return model;
}

NaiveBayesModel train_nb(const MultiLabelDataset& ds, std::span<const std::uint8_t> targets) {
    std::vector<double> values;
    values.reserve(ds.size() * ds.num_features());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto r = ds.row(i);
        values.insert(values.end(), r.begin(), r.end());
    }
    RowMatrixView view{values.data(), ds.size(), ds.num_features(), ds.num_features()};
    return train_nb(feature_schema(ds.features()), view, targets);
}

void NaiveBayesModel::finalize() {
    const std::size_t d = schema.size();
    log_variance_ratio.assign(d, 0.0);
    half_inv_variance[0].assign(d, 0.0);
    half_inv_variance[1].assign(d, 0.0);
    for (std::size_t f = 0; f < d; ++f) {
        if (schema[f].kind != FeatureKind::numeric) continue;
        log_variance_ratio[f] = 0.5 * (std::log(variance[0][f]) - std::log(variance[1][f]));
        half_inv_variance[0][f] = 0.5 / variance[0][f];
        half_inv_variance[1][f] = 0.5 / variance[1][f];
    }
}

double NaiveBayesModel::log_likelihood_ratio(std::span<const double> row) const {
    if (row.size() != schema.size()) throw Error("row width does not match the trained schema");
    double llr = 0.0;
    for (std::size_t f = 0; f < schema.size(); ++f) {
        const double v = row[f];
        if (schema[f].kind == FeatureKind::numeric) {
            if (!gaussian_usable[f] || is_missing(v)) continue;
            const double d1 = v - mean[1][f], d0 = v - mean[0][f];
            llr += log_variance_ratio[f] + d0 * d0 * half_inv_variance[0][f] - d1 * d1 * half_inv_variance[1][f];
        } else {
            const std::size_t at = offset[f] + category_of(schema[f], v);
            llr += log_prob[1][at] - log_prob[0][at];
        }
    }
    return llr;
}

double NaiveBayesModel::predict_proba(std::span<const double> row) const {
    double p1;
    if (prior1 <= 0.0) {
        p1 = 0.0;
    } else if (prior1 >= 1.0) {
        p1 = 1.0;
    } else {
        const double log_odds = std::log(prior1) - std::log1p(-prior1) + log_likelihood_ratio(row);
        p1 = log_odds >= 0 ? 1.0 / (1.0 + std::exp(-log_odds)) : std::exp(log_odds) / (1.0 + std::exp(log_odds));
        if (std::isnan(p1)) p1 = 0.5;
    }
    return std::clamp(p1, kSupportClamp, 1.0 - kSupportClamp);
}

}  // namespace chainfuse
