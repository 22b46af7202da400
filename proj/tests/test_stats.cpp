#include "chainfuse/dataset.hpp"
#include "chainfuse/rng.hpp"
#include "chainfuse/stats.hpp"
#include "published.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

using namespace chainfuse;
using namespace chainfuse::testing;

namespace {

// O(k^2) rank oracle: 1 + #strictly better + 0.5 * #ties other than itself.
std::vector<double> rank_oracle(const std::vector<double>& v, bool higher) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double better = 0, ties = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (j == i) continue;
            if (v[j] == v[i]) ties += 1;
            else if (higher ? v[j] > v[i] : v[j] < v[i]) better += 1;
        }
        r[i] = 1 + better + 0.5 * ties;
    }
    return r;
}

// Connected components by depth-first search over the "within cd" graph.
std::vector<std::vector<std::size_t>> components_oracle(const std::vector<double>& avg, double cd) {
    const std::size_t k = avg.size();
    std::vector<int> comp(k, -1);
    int next = 0;
    for (std::size_t s = 0; s < k; ++s) {
        if (comp[s] >= 0) continue;
        std::vector<std::size_t> stack{s};
        comp[s] = next;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < k; ++v)
                if (comp[v] < 0 && std::abs(avg[u] - avg[v]) < cd) {
                    comp[v] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(next));
    for (std::size_t i = 0; i < k; ++i) out[static_cast<std::size_t>(comp[i])].push_back(i);
    for (auto& g : out) std::sort(g.begin(), g.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::size_t>> sorted_groups(std::vector<std::vector<std::size_t>> g) {
    for (auto& x : g) std::sort(x.begin(), x.end());
    std::sort(g.begin(), g.end());
    return g;
}

RankTable table_from_ranks(const std::vector<std::vector<double>>& ranks) {
    RankTable rt;
    for (std::size_t m = 0; m < ranks.front().size(); ++m) rt.methods.push_back("m" + std::to_string(m));
    for (std::size_t d = 0; d < ranks.size(); ++d) rt.datasets.push_back("d" + std::to_string(d));
    rt.ranks = ranks;
    rt.avg_ranks = average_ranks(rt);
    return rt;
}

}  // namespace

TEST_CASE("rank_row examples") {
    const std::vector<double> g{0.8990, 0.8983, 0.8990, 0.5649, 0.8990};
    CHECK(rank_row(g, true) == std::vector<double>{2.0, 4.0, 2.0, 5.0, 2.0});
    const std::vector<double> same(4, 0.3);
    CHECK(rank_row(same, true) == std::vector<double>(4, 2.5));
    const std::vector<double> dec{5, 4, 3, 2, 1};
    CHECK(rank_row(dec, true) == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(rank_row(dec, false) == std::vector<double>{5, 4, 3, 2, 1});
}

TEST_CASE("average_ranks examples") {
    auto rt = make_rank_table({"a", "b", "c"}, {"d1"}, {{0.1, 0.3, 0.2}}, true);
    CHECK(average_ranks(rt) == std::vector<double>{3, 1, 2});
    rt = make_rank_table({"a", "b", "c"}, {"d1", "d2", "d3"}, {{0.1, 0.3, 0.2}, {0.5, 0.4, 0.6}, {1, 1, 0}}, true);
    const auto avg = average_ranks(rt);
    CHECK(avg[0] == doctest::Approx((3.0 + 2.0 + 1.5) / 3.0));
    CHECK(avg[1] == doctest::Approx((1.0 + 3.0 + 1.5) / 3.0));
    CHECK(avg[2] == doctest::Approx((2.0 + 1.0 + 3.0) / 3.0));
    auto swapped = make_rank_table({"a", "b", "c"}, {"d3", "d1", "d2"}, {{1, 1, 0}, {0.1, 0.3, 0.2}, {0.5, 0.4, 0.6}}, true);
    CHECK(average_ranks(swapped) == avg);
}

TEST_CASE("published per-dataset ranks average to independent sums") {
    // The parenthesized ranks of each published table are recomputed from the means,
    // and their column means are checked against a direct sum.
    for (const char* metric : {"accuracy", "f1", "subset_accuracy", "hamming_loss"}) {
        const auto t = load_published_table(test_data_dir() / (std::string("published_") + metric + ".csv"));
        const bool higher = std::string(metric) != "hamming_loss";
        const auto rt = make_rank_table(t.methods, t.datasets, t.means, higher);
        for (std::size_t d = 0; d < t.datasets.size(); ++d) CHECK(rt.ranks[d] == t.ranks[d]);
        for (std::size_t m = 0; m < t.methods.size(); ++m) {
            double sum = 0;
            for (const auto& row : t.ranks) sum += row[m];
            CHECK(rt.avg_ranks[m] == doctest::Approx(sum / static_cast<double>(t.datasets.size())).epsilon(1e-12));
        }
    }
    const auto hl = load_published_table(test_data_dir() / "published_hamming_loss.csv");
    const auto rt = make_rank_table(hl.methods, hl.datasets, hl.means, false);
    const auto dt = std::find(hl.methods.begin(), hl.methods.end(), "DTECC") - hl.methods.begin();
    CHECK(rt.avg_ranks[static_cast<std::size_t>(dt)] == 2.78125);
}

TEST_CASE("Friedman examples") {
    // Identical columns.
    const auto same = make_rank_table({"a", "b", "c"}, {"1", "2"}, {{1, 1, 1}, {2, 2, 2}}, true);
    const auto f0 = friedman(same);
    CHECK(f0.statistic == 0.0);
    CHECK(f0.p_value == doctest::Approx(1.0));
    CHECK(f0.df == 2);

    // Three methods, four datasets, hand computation:
    // ranks (1,2,3) (1,3,2) (1,2,3) (2,1,3) -> R = (1.25, 2, 2.75)
    // chi2 = 12*4/(3*4) * (1.5625 + 4 + 7.5625 - 12) = 4 * 1.125 = 4.5, p = exp(-2.25).
    const auto rt = table_from_ranks({{1, 2, 3}, {1, 3, 2}, {1, 2, 3}, {2, 1, 3}});
    const auto f = friedman(rt);
    CHECK(f.statistic == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(f.p_value == doctest::Approx(std::exp(-2.25)).epsilon(1e-10));
}

TEST_CASE("chi-square survival function matches Boost") {
    for (double df : {1.0, 2.0, 4.0, 7.0}) {
        const boost::math::chi_squared dist(df);
        for (double x : {0.1, 1.0, 3.21, 7.779, 20.0})
            CHECK(chi_square_sf(x, df) == doctest::Approx(boost::math::cdf(boost::math::complement(dist, x))).epsilon(1e-12));
    }
    CHECK(chi_square_sf(0.0, 3.0) == 1.0);
}

TEST_CASE("normal quantile against tabulated values and Boost") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
    CHECK(std::abs(normal_quantile(0.95) - 1.6448536269514722) < 1e-9);
    CHECK(std::abs(normal_quantile(0.9875) - 2.241402727604947) < 1e-9);
    CHECK(std::abs(normal_quantile(0.995) - 2.5758293035489004) < 1e-9);
    const boost::math::normal n;
    for (double p = 1e-10; p < 1.0; p = p < 0.01 ? p * 10 : p + 0.01)
        CHECK(std::abs(normal_quantile(p) - boost::math::quantile(n, p)) < 1e-9 * std::max(1.0, std::abs(boost::math::quantile(n, p))));
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("Bonferroni-Dunn critical difference") {
    const double cd = bonferroni_dunn_cd(5, 16, 0.1);
    CHECK(cd == doctest::Approx(2.241402727604947 * std::sqrt(30.0 / 96.0)).epsilon(1e-9));
    CHECK(std::abs(cd - 1.253) < 5e-4);
    CHECK(bonferroni_dunn_cd(5, 32, 0.1) == doctest::Approx(cd / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(bonferroni_dunn_cd(5, 1000000, 0.1) < 0.01);
    CHECK_THROWS_AS(bonferroni_dunn_cd(1, 16, 0.1), Error);
    CHECK_THROWS_AS(bonferroni_dunn_cd(5, 16, 0.0), Error);
}

TEST_CASE("cd_groups examples") {
    const std::vector<double> far{1.0, 3.0};
    CHECK(sorted_groups(cd_groups(far, 1.0)) == std::vector<std::vector<std::size_t>>{{0}, {1}});
    const std::vector<double> near{2.9, 1.5, 2.0, 2.2};
    CHECK(cd_groups(near, 2.0).size() == 1);
    // Chained: 0-1 and 1-2 within cd although 0-2 is not.
    const std::vector<double> chain{1.0, 1.8, 2.6};
    CHECK(cd_groups(chain, 1.0).size() == 1);
    // Returned groups list members by average rank.
    const auto g = cd_groups(near, 2.0);
    CHECK(g[0] == std::vector<std::size_t>{1, 2, 3, 0});
}

TEST_CASE("CD diagram SVG") {
    const auto rt = make_rank_table({"A", "B<x>"}, {"d1", "d2"}, {{0.9, 0.1}, {0.8, 0.2}}, true);
    const auto apart = cd_diagram_svg(rt, 0.5);
    CHECK(apart.find("class=\"group\"") == std::string::npos);
    CHECK(apart.find("B&lt;x&gt;") != std::string::npos);
    CHECK(apart.find("<svg") == 0);
    const auto joined = cd_diagram_svg(rt, 1.5);
    CHECK(joined.find("class=\"group\"") != std::string::npos);
    std::size_t methods = 0;
    for (std::size_t pos = 0; (pos = joined.find("class=\"method\"", pos)) != std::string::npos; ++pos) ++methods;
    CHECK(methods == 2);
    const auto path = std::filesystem::temp_directory_path() / "chainfuse_cd_test.svg";
    render_cd_diagram(rt, 1.5, path);
    CHECK(std::filesystem::file_size(path) == joined.size());
    std::filesystem::remove(path);
}

TEST_CASE("read_scores_csv") {
    const std::string csv =
        "dataset,method,tuning_metric,metric,mean,std,folds,chosen_phi_t,diversity\n"
        "d1,mvecc,accuracy,accuracy,0.5,0,0.5,,0.3\n"
        "d1,dtecc,accuracy,accuracy,0.6,0,0.6,,0.3\n"
        "d1,mvecc,accuracy,f1,0.7,0,0.7,,0.3\n"
        "d1,dtecc,accuracy,f1,0.1,0,0.1,,0.3\n"
        "d1,mvecc,f1,f1,0.8,0,0.8,,0.3\n"
        "d2,mvecc,accuracy,accuracy,0.4,0,0.4,,0.05\n"
        "d2,dtecc,accuracy,accuracy,0.2,0,0.2,,0.05\n";
    const auto acc = read_scores_csv(csv, "accuracy");
    CHECK(acc.methods == std::vector<std::string>{"mvecc", "dtecc"});
    CHECK(acc.datasets == std::vector<std::string>{"d1", "d2"});
    CHECK(acc.scores == std::vector<std::vector<double>>{{0.5, 0.6}, {0.4, 0.2}});
    const auto high = read_scores_csv(csv, "accuracy", 0.1);
    CHECK(high.datasets == std::vector<std::string>{"d1"});
    // The row tuned for the metric itself wins over other tuning passes.
    const auto f = read_scores_csv(csv, "f1");
    CHECK(f.scores[0][0] == 0.8);
    CHECK_THROWS_AS(read_scores_csv(csv, "recall"), Error);
    CHECK_THROWS_AS(read_scores_csv("dataset,method\n", "accuracy"), Error);
}

TEST_CASE("property: ranks match the oracle and sum to k(k+1)/2") {
    Rng rng(500);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + rng.uniform_index(9);
        std::vector<double> v(k);
        for (auto& x : v) x = static_cast<double>(rng.uniform_index(4));  // many ties
        const bool higher = rng.uniform() < 0.5;
        const auto r = rank_row(v, higher);
        CHECK(r == rank_oracle(v, higher));
        CHECK(std::accumulate(r.begin(), r.end(), 0.0) == static_cast<double>(k * (k + 1)) / 2.0);
    }
}

TEST_CASE("property: Friedman is invariant under relabeling methods") {
    Rng rng(501);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + rng.uniform_index(6), n = 2 + rng.uniform_index(20);
        std::vector<std::vector<double>> scores(n, std::vector<double>(k));
        for (auto& row : scores)
            for (auto& x : row) x = static_cast<double>(rng.uniform_index(5));
        std::vector<std::string> names(k), ds(n);
        for (std::size_t m = 0; m < k; ++m) names[m] = "m" + std::to_string(m);
        for (std::size_t d = 0; d < n; ++d) ds[d] = "d" + std::to_string(d);
        const auto perm = random_permutation(k, rng);
        auto pscores = scores;
        std::vector<std::string> pnames(k);
        for (std::size_t m = 0; m < k; ++m) {
            pnames[m] = names[perm[m]];
            for (std::size_t d = 0; d < n; ++d) pscores[d][m] = scores[d][perm[m]];
        }
        const auto a = friedman(make_rank_table(names, ds, scores, true));
        const auto b = friedman(make_rank_table(pnames, ds, pscores, true));
        CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-12));
        CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-12));
        CHECK(a.statistic >= 0.0);
        CHECK(a.p_value <= 1.0);
    }
}

TEST_CASE("property: CD groups are the components of the within-CD graph") {
    Rng rng(502);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t k = 1 + rng.uniform_index(10);
        std::vector<double> avg(k);
        for (auto& x : avg) x = 1.0 + static_cast<double>(k - 1) * rng.uniform();
        const double cd = 2.0 * rng.uniform();
        const auto groups = cd_groups(avg, cd);
        CHECK(sorted_groups(groups) == components_oracle(avg, cd));
        for (const auto& g : groups)
            for (std::size_t i = 1; i < g.size(); ++i) CHECK(avg[g[i - 1]] <= avg[g[i]]);
    }
}
