#include "chainfuse/stats.hpp"

#include "chainfuse/dataset.hpp"
#include "chainfuse/format.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

namespace chainfuse {

std::vector<double> rank_row(std::span<const double> values, bool higher_is_better) {
    const std::size_t k = values.size();
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return higher_is_better ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<double> ranks(k);
    for (std::size_t i = 0; i < k;) {
        std::size_t j = i;
        while (j + 1 < k && values[idx[j + 1]] == values[idx[i]]) ++j;
        // positions i..j (0-based) share rank mean((i+1)..(j+1))
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

RankTable make_rank_table(std::vector<std::string> methods, std::vector<std::string> datasets,
                          const std::vector<std::vector<double>>& scores, bool higher_is_better) {
    if (scores.size() != datasets.size()) throw Error("score rows do not match the dataset count");
    RankTable rt;
    rt.methods = std::move(methods);
    rt.datasets = std::move(datasets);
    for (const auto& row : scores) {
        if (row.size() != rt.methods.size()) throw Error("score row does not match the method count");
        rt.ranks.push_back(rank_row(row, higher_is_better));
    }
    rt.avg_ranks = average_ranks(rt);
    return rt;
}

std::vector<double> average_ranks(const RankTable& rt) {
    if (rt.ranks.empty()) throw Error("rank table has no datasets");
    std::vector<double> avg(rt.methods.size(), 0.0);
    for (const auto& row : rt.ranks)
        for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += row[j];
    for (auto& v : avg) v /= static_cast<double>(rt.ranks.size());
    return avg;
}

double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw Error("chi-square degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(df / 2.0, x / 2.0);
}

FriedmanResult friedman(const RankTable& rt) {
    const std::size_t k = rt.methods.size();
    const std::size_t n = rt.ranks.size();
    if (k < 2) throw Error("the Friedman test needs at least two methods");
    const std::vector<double> avg = average_ranks(rt);
    double sum_sq = 0.0;
    for (double r : avg) sum_sq += r * r;
    const double kd = static_cast<double>(k);
    FriedmanResult res;
    res.statistic = 12.0 * static_cast<double>(n) / (kd * (kd + 1.0)) * (sum_sq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
    // Cancellation can leave a tiny negative value for identical columns.
    if (res.statistic < 0.0 && res.statistic > -1e-9) res.statistic = 0.0;
    res.df = k - 1;
    res.p_value = chi_square_sf(res.statistic, static_cast<double>(res.df));
    return res;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("normal quantile needs p in (0, 1)");
    // Acklam's rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    double x;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step against the exact normal CDF.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double bonferroni_dunn_cd(std::size_t k, std::size_t n_datasets, double alpha) {
    if (k < 2) throw Error("critical difference needs at least two methods");
    if (n_datasets < 1) throw Error("critical difference needs at least one dataset");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
    const double kd = static_cast<double>(k);
    const double z = normal_quantile(1.0 - alpha / (2.0 * (kd - 1.0)));
    return z * std::sqrt(kd * (kd + 1.0) / (6.0 * static_cast<double>(n_datasets)));
}

std::vector<std::vector<std::size_t>> cd_groups(std::span<const double> avg_ranks, double cd) {
    const std::size_t k = avg_ranks.size();
    std::vector<std::size_t> parent(k);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (std::abs(avg_ranks[i] - avg_ranks[j]) < cd) parent[find(i)] = find(j);

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return avg_ranks[a] < avg_ranks[b]; });
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::size_t, std::size_t> slot;
    for (std::size_t i : order) {
        const std::size_t root = find(i);
        auto [it, inserted] = slot.emplace(root, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(i);
    }
    return groups;
}

namespace {
std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}
}  // namespace

std::string cd_diagram_svg(const RankTable& rt, double cd) {
    const std::size_t k = rt.methods.size();
    if (k == 0) throw Error("rank table has no methods");
    const std::vector<double> avg = rt.avg_ranks.size() == k ? rt.avg_ranks : average_ranks(rt);
    const auto groups = cd_groups(avg, cd);

    const double width = 720.0, left = 160.0, right = width - 160.0, axis_y = 80.0;
    const double scale = k > 1 ? (right - left) / static_cast<double>(k - 1) : 0.0;
    auto xpos = [&](double rank) { return left + (rank - 1.0) * scale; };

    std::size_t bars = 0;
    for (const auto& g : groups) bars += g.size() > 1;
    const std::size_t half = (k + 1) / 2;
    const double label_top = axis_y + 30.0 + static_cast<double>(bars) * 10.0;
    const double height = label_top + static_cast<double>(half) * 22.0 + 20.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_fixed(width, 0) << "\" height=\""
        << format_fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Critical difference scale bar.
    svg << "<line x1=\"" << format_fixed(left, 2) << "\" y1=\"25\" x2=\"" << format_fixed(left + cd * scale, 2)
        << "\" y2=\"25\" stroke=\"black\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << format_fixed(left, 2) << "\" y=\"18\">CD = " << format_fixed(cd, 3) << "</text>\n";

    svg << "<line x1=\"" << format_fixed(left, 2) << "\" y1=\"" << axis_y << "\" x2=\"" << format_fixed(right, 2)
        << "\" y2=\"" << axis_y << "\" stroke=\"black\"/>\n";
    for (std::size_t r = 1; r <= k; ++r) {
        const double x = xpos(static_cast<double>(r));
        svg << "<line x1=\"" << format_fixed(x, 2) << "\" y1=\"" << axis_y - 6 << "\" x2=\"" << format_fixed(x, 2)
            << "\" y2=\"" << axis_y << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << format_fixed(x, 2) << "\" y=\"" << axis_y - 10 << "\" text-anchor=\"middle\">" << r
            << "</text>\n";
    }

    // Groups of methods with no significant difference.
    double bar_y = axis_y + 12.0;
    for (const auto& g : groups) {
        if (g.size() < 2) continue;
        const double x1 = xpos(avg[g.front()]) - 4.0, x2 = xpos(avg[g.back()]) + 4.0;
        svg << "<line class=\"group\" x1=\"" << format_fixed(x1, 2) << "\" y1=\"" << format_fixed(bar_y, 2)
            << "\" x2=\"" << format_fixed(x2, 2) << "\" y2=\"" << format_fixed(bar_y, 2)
            << "\" stroke=\"black\" stroke-width=\"3\"/>\n";
        bar_y += 10.0;
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return avg[a] < avg[b]; });
    for (std::size_t pos = 0; pos < k; ++pos) {
        const std::size_t i = order[pos];
        const bool left_side = pos < half;
        const std::size_t line = left_side ? pos : k - 1 - pos;
        const double y = label_top + static_cast<double>(line) * 22.0;
        const double x = xpos(avg[i]);
        const double tx = left_side ? left - 10.0 : right + 10.0;
        svg << "<polyline fill=\"none\" stroke=\"black\" points=\"" << format_fixed(x, 2) << ',' << axis_y << ' '
            << format_fixed(x, 2) << ',' << format_fixed(y, 2) << ' ' << format_fixed(tx, 2) << ','
            << format_fixed(y, 2) << "\"/>\n";
        svg << "<text class=\"method\" x=\"" << format_fixed(left_side ? tx - 4.0 : tx + 4.0, 2) << "\" y=\""
            << format_fixed(y + 4.0, 2) << "\" text-anchor=\"" << (left_side ? "end" : "start") << "\">"
            << xml_escape(rt.methods[i]) << " (" << format_fixed(avg[i], 3) << ")</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void render_cd_diagram(const RankTable& rt, double cd, const std::filesystem::path& path) {
    const std::string svg = cd_diagram_svg(rt, cd);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << svg;
    if (!out) throw Error("failed writing " + path.string());
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else if (ch != '\r') {
            fields.back() += ch;
        }
    }
    return fields;
}

double to_number(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw Error("");
        return v;
    } catch (const std::exception&) {
        throw Error("invalid number in results CSV: '" + s + "'");
    }
}

}  // namespace

ScoreTable read_scores_csv(std::string_view csv_text, std::string_view metric, double min_diversity) {
    std::istringstream in{std::string(csv_text)};
    std::string line;
    if (!std::getline(in, line)) throw Error("results CSV is empty");
    const auto header = split_csv_line(line);
    auto column = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    };
    const auto c_dataset = column("dataset"), c_method = column("method"), c_metric = column("metric"),
               c_mean = column("mean");
    if (!c_dataset || !c_method || !c_metric || !c_mean)
        throw Error("results CSV needs dataset, method, metric and mean columns");
    const auto c_div = column("diversity");
    const auto c_tuning = column("tuning_metric");

    ScoreTable table;
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, bool>> cells;
    std::vector<double> div_all;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw Error("results CSV line " + std::to_string(line_no) + " has the wrong number of fields");
        if (f[*c_metric] != metric) continue;
        auto index_of = [](std::vector<std::string>& names, const std::string& name) {
            auto it = std::find(names.begin(), names.end(), name);
            if (it != names.end()) return static_cast<std::size_t>(it - names.begin());
            names.push_back(name);
            return names.size() - 1;
        };
        const std::size_t di = index_of(table.datasets, f[*c_dataset]);
        const std::size_t mi = index_of(table.methods, f[*c_method]);
        if (div_all.size() < table.datasets.size()) div_all.push_back(c_div ? to_number(f[*c_div]) : 1.0);
        const bool preferred = c_tuning && f[*c_tuning] == metric;
        const double value = to_number(f[*c_mean]);
        auto [it, inserted] = cells.emplace(std::make_pair(di, mi), std::make_pair(value, preferred));
        if (!inserted) {
            if (preferred && !it->second.second) {
                it->second = {value, true};
            } else if (preferred == it->second.second) {
                throw Error("results CSV has duplicate rows for " + f[*c_dataset] + " / " + f[*c_method]);
            }
        }
    }
    if (table.datasets.empty()) throw Error("results CSV has no rows for metric '" + std::string(metric) + "'");

    ScoreTable out;
    out.methods = table.methods;
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        if (!(div_all[d] > min_diversity)) continue;
        std::vector<double> row(table.methods.size());
        for (std::size_t m = 0; m < table.methods.size(); ++m) {
            auto it = cells.find({d, m});
            if (it == cells.end())
                throw Error("results CSV lacks " + table.methods[m] + " on " + table.datasets[d]);
            row[m] = it->second.first;
        }
        out.datasets.push_back(table.datasets[d]);
        out.scores.push_back(std::move(row));
        out.diversity.push_back(div_all[d]);
    }
    return out;
}

}  // namespace chainfuse
