#pragma once

#include "chainfuse/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chainfuse {

inline constexpr double kVarianceFloor = 1e-9;
inline constexpr double kSupportClamp = 1e-6;

// Input column description for the Naive Bayes learner. For nominal columns
// `categories` counts every value the column may take, including the slot
// reserved for missing values when there is one.
struct NbColumn {
    FeatureKind kind = FeatureKind::numeric;
    std::size_t categories = 0;
    bool missing_slot = false;  // missing nominal values map to the last category

    bool operator==(const NbColumn&) const = default;
};

using NbSchema = std::vector<NbColumn>;

// Schema for a dataset's feature columns: numerics stay Gaussian, nominals get
// one extra category for missing values.
NbSchema feature_schema(const std::vector<Feature>& features);

// Column schema of a two-valued label feature appended by a classifier chain.
inline NbColumn label_column() { return {FeatureKind::nominal, 2, false}; }

// Non-owning view over a row-major matrix whose rows may be wider than the
// columns consumed (stride >= cols).
struct RowMatrixView {
    const double* data = nullptr;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t stride = 0;

    std::span<const double> row(std::size_t i) const { return {data + i * stride, cols}; }
};

// Binary Naive Bayes: Gaussian numerics with a variance floor, Laplace add-one
// categorical nominals, maximum-likelihood class priors.
struct NaiveBayesModel {
    NbSchema schema;
    double prior1 = 0.5;  // P(class = 1)

    // Per column, indexed by column position; unused for nominal columns.
    std::vector<double> mean[2];
    std::vector<double> variance[2];
    std::vector<std::uint8_t> gaussian_usable;  // both classes observed a value

    // Nominal log-probabilities, flattened: log_prob[c][offset[f] + value].
    std::vector<std::size_t> offset;
    std::vector<double> log_prob[2];

    // Derived from the fields above by finalize().
    std::vector<double> log_variance_ratio;  // 0.5 * (log var0 - log var1)
    std::vector<double> half_inv_variance[2];

    void finalize();

    // Posterior P(class = 1 | row), clamped to [kSupportClamp, 1 - kSupportClamp].
    double predict_proba(std::span<const double> row) const;

    // Log-likelihood ratio log P(row | 1) - log P(row | 0), without priors.
    double log_likelihood_ratio(std::span<const double> row) const;

    bool operator==(const NaiveBayesModel&) const = default;
};

NaiveBayesModel train_nb(const NbSchema& schema, RowMatrixView rows, std::span<const std::uint8_t> targets);

// Convenience overload over a dataset's feature rows.
NaiveBayesModel train_nb(const MultiLabelDataset& ds, std::span<const std::uint8_t> targets);

}  // namespace chainfuse
