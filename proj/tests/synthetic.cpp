#include "synthetic.hpp"

#include "chainfuse/correlation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace chainfuse::testing {

MultiLabelDataset make_synthetic(const SyntheticShape& shape, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t q = shape.factors;
    const std::size_t d = shape.numeric + shape.nominal;

    std::vector<double> load(d * q), mix(shape.labels * q), bias(shape.labels);
    for (auto& v : load) v = rng.normal();
    for (std::size_t j = 0; j < shape.labels; ++j) {
        // Each label leans on one primary factor plus small contributions.
        for (std::size_t f = 0; f < q; ++f) mix[j * q + f] = 0.3 * rng.normal();
        mix[j * q + (j % q)] += 1.5;
        bias[j] = -0.3 - 0.6 * rng.uniform();
    }

    std::vector<Feature> features;
    for (std::size_t f = 0; f < shape.numeric; ++f) features.push_back({"x" + std::to_string(f), FeatureKind::numeric, {}});
    for (std::size_t f = 0; f < shape.nominal; ++f)
        features.push_back({"c" + std::to_string(f), FeatureKind::nominal, {"lo", "mid", "hi"}});

    std::vector<double> values(shape.n * d);
    LabelMatrix labels(shape.n, shape.labels);
    std::vector<double> z(q);
    for (std::size_t i = 0; i < shape.n; ++i) {
        for (auto& v : z) v = rng.normal();
        for (std::size_t f = 0; f < d; ++f) {
            double s = 0.0;
            for (std::size_t t = 0; t < q; ++t) s += load[f * q + t] * z[t];
            s += shape.feature_noise * rng.normal();
            double v = s;
            if (f >= shape.numeric) v = s < -0.5 ? 0.0 : (s < 0.5 ? 1.0 : 2.0);
            if (shape.missing_rate > 0.0 && rng.uniform() < shape.missing_rate) v = missing_value();
            values[i * d + f] = v;
        }
        for (std::size_t j = 0; j < shape.labels; ++j) {
            double s = bias[j];
            for (std::size_t t = 0; t < q; ++t) s += mix[j * q + t] * z[t];
            s += shape.label_noise * rng.normal();
            labels(i, j) = s > 0.0 ? 1 : 0;
        }
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < shape.labels; ++j) names.push_back("y" + std::to_string(j));
    return MultiLabelDataset(shape.name, std::move(features), std::move(values), std::move(names), std::move(labels));
}

MultiLabelDataset emotions_like(std::uint64_t seed) {
    SyntheticShape s;
    s.n = 593;
    s.numeric = 72;
    s.labels = 6;
    s.factors = 4;
    s.feature_noise = 2.0;
    s.name = "emotions_like";
    return make_synthetic(s, seed);
}

MultiLabelDataset scene_like(std::uint64_t seed) {
    SyntheticShape s;
    s.n = 2407;
    s.numeric = 294;
    s.labels = 6;
    s.factors = 5;
    s.feature_noise = 3.0;
    s.label_noise = 0.5;
    s.name = "scene_like";
    return make_synthetic(s, seed);
}

LabelMatrix random_labels(std::size_t n, std::size_t m, double density, Rng& rng) {
    LabelMatrix y(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) y(i, j) = rng.uniform() < density ? 1 : 0;
    return y;
}

MultiLabelDataset numeric_dataset(std::size_t d, std::vector<double> values, LabelMatrix labels, std::string relation) {
    std::vector<Feature> features;
    for (std::size_t f = 0; f < d; ++f) features.push_back({"x" + std::to_string(f), FeatureKind::numeric, {}});
    std::vector<std::string> names;
    for (std::size_t j = 0; j < labels.cols(); ++j) names.push_back("y" + std::to_string(j));
    return MultiLabelDataset(std::move(relation), std::move(features), std::move(values), std::move(names),
                             std::move(labels));
}

}  // namespace chainfuse::testing

namespace chainfuse::testing {

std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    auto dir = std::filesystem::temp_directory_path() /
               ("chainfuse_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(++counter));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_dataset(const MultiLabelDataset& ds, const std::filesystem::path& dir, const std::string& name) {
    std::ofstream(dir / (name + ".arff")) << to_arff(ds);
    std::ofstream(dir / (name + ".xml")) << to_label_header(ds);
}

double max_training_phi(const MultiLabelDataset& ds, std::size_t k, std::uint64_t plan_seed) {
    double top = phi_matrix(ds.labels()).max_off_diagonal();
    const FoldPlan plan = plan_folds(ds, k, plan_seed);
    for (std::size_t f = 0; f < k; ++f) {
        const auto train = plan.train_rows(f);
        top = std::max(top, phi_matrix(ds.labels().select_rows(train)).max_off_diagonal());
    }
    return top;
}

std::optional<double> phi_above_all(const MultiLabelDataset& ds, std::size_t k, std::uint64_t plan_seed) {
    const double top = max_training_phi(ds, k, plan_seed);
    if (top >= 1.0) return std::nullopt;
    return (top + 1.0) / 2.0;
}

}  // namespace chainfuse::testing
