#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chainfuse {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    // 1-based line number in the offending input, 0 when not line-specific.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class FeatureKind { numeric, nominal };

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<std::string> values;  // declared value set, nominal only

    bool operator==(const Feature&) const = default;
};

// Dense row-major n x m binary matrix.
class LabelMatrix {
public:
    LabelMatrix() = default;
    LabelMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}
    LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::uint8_t operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::uint8_t& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const std::uint8_t> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<const std::uint8_t> data() const { return data_; }

    LabelMatrix select_rows(std::span<const std::size_t> rows) const;

    bool operator==(const LabelMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

// Missing feature values are stored as quiet NaN. Nominal values are stored as
// the index of the value in Feature::values.
class MultiLabelDataset {
public:
    MultiLabelDataset() = default;
    MultiLabelDataset(std::string relation, std::vector<Feature> features, std::vector<double> values,
                      std::vector<std::string> label_names, LabelMatrix labels);

    const std::string& relation() const { return relation_; }
    std::size_t size() const { return labels_.rows(); }
    std::size_t num_features() const { return features_.size(); }
    std::size_t num_labels() const { return labels_.cols(); }

    const std::vector<Feature>& features() const { return features_; }
    const std::vector<std::string>& label_names() const { return label_names_; }
    const LabelMatrix& labels() const { return labels_; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * features_.size(), features_.size()};
    }
    std::uint8_t label(std::size_t i, std::size_t j) const { return labels_(i, j); }

    MultiLabelDataset select_rows(std::span<const std::size_t> rows) const;

    // Missing values compare equal to each other.
    bool operator==(const MultiLabelDataset& other) const;

private:
    std::string relation_;
    std::vector<Feature> features_;
    std::vector<double> values_;
    std::vector<std::string> label_names_;
    LabelMatrix labels_;
};

bool is_missing(double value);
double missing_value();

// Parses ARFF text (dense or sparse) plus a Mulan XML label header.
MultiLabelDataset parse_dataset(std::string_view arff_text, std::string_view label_header_xml);
MultiLabelDataset load_dataset(const std::filesystem::path& arff, const std::filesystem::path& xml);

std::vector<std::string> parse_label_header(std::string_view xml);

// Dense ARFF with features first, labels last as {0,1} nominals.
std::string to_arff(const MultiLabelDataset& ds);
std::string to_label_header(const MultiLabelDataset& ds);

struct DatasetStats {
    double diversity = 0.0;
    double cardinality = 0.0;
    std::size_t distinct_labelsets = 0;
};

std::size_t distinct_labelsets(const LabelMatrix& labels);

// distinct labelsets / min(2^m, n)
double diversity(const MultiLabelDataset& ds);
double diversity(const LabelMatrix& labels);
DatasetStats dataset_stats(const MultiLabelDataset& ds);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // fold id per instance

    std::vector<std::size_t> test_rows(std::size_t fold) const;
    std::vector<std::size_t> train_rows(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

// Iterative label-wise stratification over all rows of `labels`.
FoldPlan plan_folds(const LabelMatrix& labels, std::size_t k, std::uint64_t seed);
FoldPlan plan_folds(const MultiLabelDataset& ds, std::size_t k, std::uint64_t seed);

}  // namespace chainfuse
