#pragma once

#include "chainfuse/chains.hpp"
#include "chainfuse/dataset.hpp"
#include "chainfuse/fusion.hpp"
#include "chainfuse/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainfuse {

// dtebr is decision templates over EBR profiles, the reference for uddtebr.
enum class Method { mvecc, meecc, dtecc, uddtecc, stackecc, br, ebr, uddtebr, dtebr };

inline constexpr Method kAllMethods[] = {Method::mvecc, Method::meecc, Method::dtecc,   Method::uddtecc, Method::stackecc,
                                         Method::br,    Method::ebr,   Method::uddtebr, Method::dtebr};

const char* to_string(Method m);
std::optional<Method> parse_method(std::string_view name);
bool uses_phi(Method m);

struct ExperimentConfig {
    Method method = Method::meecc;
    std::size_t ensemble_size = 50;
    double threshold = 0.5;
    std::vector<double> phi_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t outer_folds = 10;
    std::uint64_t seed = 1;
    Metric tuning_metric = Metric::accuracy;
    std::size_t jobs = 1;
    std::size_t inner_folds = 9;
    std::size_t validation_folds = 3;

    // Throws Error on an invalid combination.
    void validate() const;
};

// A trained multi-label classifier for one method.
struct TrainedClassifier {
    Method method = Method::meecc;
    std::optional<ChainModel> single;  // br
    EnsembleModel ensemble;            // every other method
    FusionModel fusion;

    std::vector<LabelVector> predict(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                                     std::size_t jobs = 1) const;
};

// Where rows were used. Fit stages see only training rows; score stages see
// only held-out rows.
enum class Stage { tune_fit, tune_score, final_fit, final_score };
const char* to_string(Stage s);

// Called with every row set a stage touches. outer_fold identifies the outer
// fold being processed.
using RowObserver = std::function<void(Stage stage, std::size_t outer_fold, std::span<const std::size_t> rows)>;

// Trains `method` on the given rows. phi_t is only used by the UDDT methods.
TrainedClassifier train_classifier(const MultiLabelDataset& ds, std::span<const std::size_t> rows, Method method,
                                   std::size_t ensemble_size, double threshold, double phi_t, std::uint64_t seed,
                                   std::size_t jobs = 1);

struct TuningResult {
    double best_phi = 0.0;
    std::vector<double> scores;  // tuning metric per grid value, loss metrics negated
};

// Grid search for phi_t. The training rows are split into cfg.inner_folds
// stratified sub-folds; the first cfg.validation_folds of them validate and the
// rest train. The first grid value wins ties.
TuningResult tune_phi(const MultiLabelDataset& ds, std::span<const std::size_t> training_rows,
                      const ExperimentConfig& cfg, std::uint64_t seed, const RowObserver& observer = {},
                      std::size_t outer_fold = 0);

struct PerformanceMatrix {
    std::vector<MetricReport> folds;
    std::vector<std::optional<double>> chosen_phi;        // per fold, set for UDDT methods
    std::vector<std::vector<std::size_t>> test_rows;      // per fold
    std::vector<std::vector<LabelVector>> predictions;    // per fold, aligned with test_rows
    MetricReport mean;
    MetricReport stddev;  // sample standard deviation over folds

    bool operator==(const PerformanceMatrix&) const = default;
};

PerformanceMatrix model_performance(const MultiLabelDataset& ds, const ExperimentConfig& cfg,
                                    const RowObserver& observer = {});

// Seed for one (dataset, method) cell of an experiment.
std::uint64_t cell_seed(std::uint64_t root, std::string_view dataset, Method method);

struct DatasetSource {
    std::string name;
    std::filesystem::path arff;
    std::filesystem::path xml;
};

// One finished (or failed) experiment cell.
struct CellResult {
    std::string dataset;
    Method method = Method::meecc;
    Metric tuning_metric = Metric::accuracy;
    double diversity = 0.0;
    std::vector<MetricReport> folds;
    std::vector<std::optional<double>> chosen_phi;
    MetricReport mean;
    MetricReport stddev;
    std::string error;  // non-empty when the cell failed
};

// Runs every dataset x method cell with per-cell seeds derived from
// defaults.seed. Finished cells are appended to <out_dir>/results.jsonl as they
// complete; cells already present there without an error are not recomputed.
// Writes <out_dir>/results.csv at the end and returns all cells in grid order.
std::vector<CellResult> run_experiment(const std::vector<DatasetSource>& datasets, const std::vector<Method>& methods,
                                       const ExperimentConfig& defaults, const std::filesystem::path& out_dir);

std::string cell_to_json(const CellResult& cell);
CellResult cell_from_json(std::string_view line);

// One CSV row per (cell, metric).
std::string results_csv(std::span<const CellResult> cells);

}  // namespace chainfuse
