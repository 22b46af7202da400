#pragma once

#include "chainfuse/dataset.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace chainfuse {

// 2x2 table for labels p (rows) and q (columns):
//   a = both present, b = p only, c = q only, d = both absent.
struct ContingencyTable {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;

    std::uint64_t total() const { return a + b + c + d; }
    bool operator==(const ContingencyTable&) const = default;
};

// Chi-square dependency threshold at 99% confidence, one degree of freedom.
inline constexpr double kChiSquareDependent99 = 6.635;

ContingencyTable contingency(const LabelMatrix& labels, std::size_t p, std::size_t q);

// Both return 0 when any marginal of the table is zero.
double phi(const ContingencyTable& t);
double chi_square(const ContingencyTable& t);

inline bool chi_square_dependent(const ContingencyTable& t) { return chi_square(t) > kChiSquareDependent99; }

class PhiMatrix {
public:
    PhiMatrix() = default;
    PhiMatrix(std::size_t m, std::vector<double> values, std::vector<std::string> label_names);

    std::size_t size() const { return m_; }
    double operator()(std::size_t p, std::size_t q) const { return values_[p * m_ + q]; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::string>& label_names() const { return label_names_; }

    // Largest |phi| over distinct label pairs; 0 for a single label.
    double max_off_diagonal() const;

private:
    std::size_t m_ = 0;
    std::vector<double> values_;
    std::vector<std::string> label_names_;
};

PhiMatrix phi_matrix(const LabelMatrix& labels, std::vector<std::string> label_names = {});
PhiMatrix phi_matrix(const MultiLabelDataset& ds);

// Labels whose |phi| with label j reaches phi_t, in ascending index order.
// j itself is always included.
std::vector<std::size_t> dependent_labels(const PhiMatrix& pm, std::size_t j, double phi_t);

}  // namespace chainfuse
