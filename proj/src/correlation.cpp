#include "chainfuse/correlation.hpp"

#include <algorithm>
#include <cmath>

namespace chainfuse {

ContingencyTable contingency(const LabelMatrix& labels, std::size_t p, std::size_t q) {
    if (p >= labels.cols() || q >= labels.cols()) throw Error("label index out of range");
    ContingencyTable t;
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const bool lp = labels(i, p), lq = labels(i, q);
        if (lp && lq) ++t.a;
        else if (lp) ++t.b;
        else if (lq) ++t.c;
        else ++t.d;
    }
    return t;
}

namespace {
// Product of the four marginals, or 0 when the table is degenerate.
double marginal_product(const ContingencyTable& t) {
    const double ab = static_cast<double>(t.a + t.b), cd = static_cast<double>(t.c + t.d);
    const double ac = static_cast<double>(t.a + t.c), bd = static_cast<double>(t.b + t.d);
    return ab * cd * ac * bd;
}

double cross_difference(const ContingencyTable& t) {
    return static_cast<double>(t.a) * static_cast<double>(t.d) - static_cast<double>(t.b) * static_cast<double>(t.c);
}
}  // namespace

double phi(const ContingencyTable& t) {
    const double denom = marginal_product(t);
    if (denom == 0.0) return 0.0;
    // Perfect (anti-)association, exact rather than via the rounded square root.
    if (t.b == 0 && t.c == 0) return 1.0;
    if (t.a == 0 && t.d == 0) return -1.0;
    return std::clamp(cross_difference(t) / std::sqrt(denom), -1.0, 1.0);
}

double chi_square(const ContingencyTable& t) {
    const double denom = marginal_product(t);
    if (denom == 0.0) return 0.0;
    const double diff = cross_difference(t);
    return diff * diff * static_cast<double>(t.total()) / denom;
}

PhiMatrix::PhiMatrix(std::size_t m, std::vector<double> values, std::vector<std::string> label_names)
    : m_(m), values_(std::move(values)), label_names_(std::move(label_names)) {
    if (values_.size() != m_ * m_) throw Error("phi matrix size mismatch");
    if (!label_names_.empty() && label_names_.size() != m_) throw Error("phi matrix label name count mismatch");
}

double PhiMatrix::max_off_diagonal() const {
    double best = 0.0;
    for (std::size_t p = 0; p < m_; ++p)
        for (std::size_t q = 0; q < m_; ++q)
            if (p != q) best = std::max(best, std::abs((*this)(p, q)));
    return best;
}

PhiMatrix phi_matrix(const LabelMatrix& labels, std::vector<std::string> label_names) {
    const std::size_t m = labels.cols();
    if (m == 0) throw Error("phi matrix needs at least one label");

    // Pairwise co-presence counts give every table in one pass over the rows.
    std::vector<std::uint64_t> both(m * m, 0);
    std::vector<std::uint64_t> count(m, 0);
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        present.clear();
        auto row = labels.row(i);
        for (std::size_t j = 0; j < m; ++j)
            if (row[j]) present.push_back(j);
        for (std::size_t x : present) {
            ++count[x];
            for (std::size_t y : present) ++both[x * m + y];
        }
    }
    const std::uint64_t n = labels.rows();
    std::vector<double> values(m * m);
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = p; q < m; ++q) {
            ContingencyTable t;
            t.a = both[p * m + q];
            t.b = count[p] - t.a;
            t.c = count[q] - t.a;
            t.d = n - t.a - t.b - t.c;
            values[p * m + q] = values[q * m + p] = phi(t);
        }
    }
    return PhiMatrix(m, std::move(values), std::move(label_names));
}

PhiMatrix phi_matrix(const MultiLabelDataset& ds) { return phi_matrix(ds.labels(), ds.label_names()); }

std::vector<std::size_t> dependent_labels(const PhiMatrix& pm, std::size_t j, double phi_t) {
    if (j >= pm.size()) throw Error("label index out of range");
    if (!(phi_t >= 0.0 && phi_t <= 1.0)) throw Error("phi threshold must lie in [0, 1]");
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < pm.size(); ++p)
        if (p == j || std::abs(pm(p, j)) >= phi_t) out.push_back(p);
    return out;
}

}  // namespace chainfuse
