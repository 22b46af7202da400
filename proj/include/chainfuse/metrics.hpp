#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainfuse {

struct PredictionPair {
    std::vector<std::uint8_t> truth;
    std::vector<std::uint8_t> predicted;
};

// Example-based metrics. When truth and prediction are both empty, accuracy,
// precision, recall and f1 are 1. An empty prediction against a non-empty truth
// has precision 0, and an empty truth against a non-empty prediction has recall 0.
double accuracy(const PredictionPair& p);
double hamming_loss(const PredictionPair& p);
double subset_accuracy(const PredictionPair& p);
double precision(const PredictionPair& p);
double recall(const PredictionPair& p);
double f1(const PredictionPair& p);

enum class Metric { accuracy, hamming_loss, subset_accuracy, precision, recall, f1 };

inline constexpr Metric kAllMetrics[] = {Metric::accuracy,  Metric::hamming_loss, Metric::subset_accuracy,
                                         Metric::precision, Metric::recall,       Metric::f1};

// The four metrics used for per-metric tuning passes.
inline constexpr Metric kHeadlineMetrics[] = {Metric::accuracy, Metric::f1, Metric::subset_accuracy,
                                              Metric::hamming_loss};

const char* to_string(Metric m);
std::optional<Metric> parse_metric(std::string_view name);
bool higher_is_better(Metric m);
double evaluate(Metric m, const PredictionPair& p);

struct MetricReport {
    double accuracy = 0.0;
    double hamming_loss = 0.0;
    double subset_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    double get(Metric m) const;
    double& get(Metric m);
    bool operator==(const MetricReport&) const = default;
};

// Per-metric means over the pairs.
MetricReport aggregate(std::span<const PredictionPair> pairs);

}  // namespace chainfuse
