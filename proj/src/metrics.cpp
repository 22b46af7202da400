#include "chainfuse/metrics.hpp"

#include "chainfuse/dataset.hpp"

#include <algorithm>
#include <cctype>

namespace chainfuse {

namespace {

struct Counts {
    std::size_t both = 0;
    std::size_t truth = 0;
    std::size_t pred = 0;
    std::size_t diff = 0;
};

Counts count(const PredictionPair& p) {
    if (p.truth.size() != p.predicted.size()) throw Error("truth and prediction lengths differ");
    Counts c;
    for (std::size_t j = 0; j < p.truth.size(); ++j) {
        const bool t = p.truth[j] != 0;
        const bool h = p.predicted[j] != 0;
        c.both += t && h;
        c.truth += t;
        c.pred += h;
        c.diff += t != h;
    }
    return c;
}

double ratio(std::size_t num, std::size_t den) { return static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

double accuracy(const PredictionPair& p) {
    const Counts c = count(p);
    const std::size_t uni = c.truth + c.pred - c.both;
    return uni == 0 ? 1.0 : ratio(c.both, uni);
}

double hamming_loss(const PredictionPair& p) {
    const Counts c = count(p);
    if (p.truth.empty()) return 0.0;
    return ratio(c.diff, p.truth.size());
}

double subset_accuracy(const PredictionPair& p) { return count(p).diff == 0 ? 1.0 : 0.0; }

double precision(const PredictionPair& p) {
    const Counts c = count(p);
    if (c.pred == 0) return c.truth == 0 ? 1.0 : 0.0;
    return ratio(c.both, c.pred);
}

double recall(const PredictionPair& p) {
    const Counts c = count(p);
    if (c.truth == 0) return c.pred == 0 ? 1.0 : 0.0;
    return ratio(c.both, c.truth);
}

double f1(const PredictionPair& p) {
    const Counts c = count(p);
    if (c.truth + c.pred == 0) return 1.0;
    return ratio(2 * c.both, c.truth + c.pred);
}

const char* to_string(Metric m) {
    switch (m) {
        case Metric::accuracy: return "accuracy";
        case Metric::hamming_loss: return "hamming_loss";
        case Metric::subset_accuracy: return "subset_accuracy";
        case Metric::precision: return "precision";
        case Metric::recall: return "recall";
        case Metric::f1: return "f1";
    }
    return "?";
}

std::optional<Metric> parse_metric(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) {
        return ch == '-' || ch == ' ' ? '_' : static_cast<char>(std::tolower(ch));
    });
    if (s == "accuracy" || s == "acc") return Metric::accuracy;
    if (s == "hamming_loss" || s == "hamming" || s == "hl") return Metric::hamming_loss;
    if (s == "subset_accuracy" || s == "subset" || s == "subset_01") return Metric::subset_accuracy;
    if (s == "precision") return Metric::precision;
    if (s == "recall") return Metric::recall;
    if (s == "f1" || s == "f_measure" || s == "fmeasure") return Metric::f1;
    return std::nullopt;
}

bool higher_is_better(Metric m) { return m != Metric::hamming_loss; }

double evaluate(Metric m, const PredictionPair& p) {
    switch (m) {
        case Metric::accuracy: return accuracy(p);
        case Metric::hamming_loss: return hamming_loss(p);
        case Metric::subset_accuracy: return subset_accuracy(p);
        case Metric::precision: return precision(p);
        case Metric::recall: return recall(p);
        case Metric::f1: return f1(p);
    }
    throw Error("unknown metric");
}

double MetricReport::get(Metric m) const { return const_cast<MetricReport*>(this)->get(m); }

double& MetricReport::get(Metric m) {
    switch (m) {
        case Metric::accuracy: return accuracy;
        case Metric::hamming_loss: return hamming_loss;
        case Metric::subset_accuracy: return subset_accuracy;
        case Metric::precision: return precision;
        case Metric::recall: return recall;
        case Metric::f1: return f1;
    }
    throw Error("unknown metric");
}

MetricReport aggregate(std::span<const PredictionPair> pairs) {
    if (pairs.empty()) throw Error("cannot aggregate an empty set of predictions");
    MetricReport r;
    for (const auto& p : pairs)
        for (Metric m : kAllMetrics) r.get(m) += evaluate(m, p);
    for (Metric m : kAllMetrics) r.get(m) /= static_cast<double>(pairs.size());
    return r;
}

}  // namespace chainfuse
