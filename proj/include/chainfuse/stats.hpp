#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainfuse {

// Fractional ranks (1 = best); tied values share the mean of their positions.
std::vector<double> rank_row(std::span<const double> values, bool higher_is_better);

struct RankTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> ranks;  // datasets x methods
    std::vector<double> avg_ranks;           // per method
};

// scores is datasets x methods.
RankTable make_rank_table(std::vector<std::string> methods, std::vector<std::string> datasets,
                          const std::vector<std::vector<double>>& scores, bool higher_is_better);

std::vector<double> average_ranks(const RankTable& rt);

struct FriedmanResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t df = 0;
};

// Uncorrected Friedman chi-square over the average ranks, with a chi-square
// p-value on k - 1 degrees of freedom.
FriedmanResult friedman(const RankTable& rt);

// Upper-tail probability of the chi-square distribution.
double chi_square_sf(double x, double df);

// Quantile of the standard normal distribution, p in (0, 1).
double normal_quantile(double p);

// Two-tailed Bonferroni-Dunn critical difference for k methods over n datasets.
double bonferroni_dunn_cd(std::size_t k, std::size_t n_datasets, double alpha);

// Groups of methods (indices, sorted by average rank) whose average ranks are
// linked through pairwise differences below cd. Singletons are included.
std::vector<std::vector<std::size_t>> cd_groups(std::span<const double> avg_ranks, double cd);

std::string cd_diagram_svg(const RankTable& rt, double cd);
void render_cd_diagram(const RankTable& rt, double cd, const std::filesystem::path& path);

// Scores table read from an evaluation results CSV for one metric. Rows are
// datasets in first-seen order, columns are methods in first-seen order.
struct ScoreTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    std::vector<std::vector<double>> scores;
    std::vector<double> diversity;  // per dataset
};

// Keeps datasets with diversity > min_diversity; rows missing a method are an
// error.
ScoreTable read_scores_csv(std::string_view csv_text, std::string_view metric, double min_diversity = -1.0);

}  // namespace chainfuse
