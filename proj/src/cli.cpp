#include "chainfuse/cli.hpp"

#include "chainfuse/correlation.hpp"
#include "chainfuse/dataset.hpp"
#include "chainfuse/evaluation.hpp"
#include "chainfuse/format.hpp"
#include "chainfuse/serialize.hpp"
#include "chainfuse/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#ifndef CHAINFUSE_VERSION
#define CHAINFUSE_VERSION "0.0.0"
#endif

namespace chainfuse {

const char* version() { return CHAINFUSE_VERSION; }

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join_methods() {
    std::string s;
    for (Method m : kAllMethods) s += std::string(s.empty() ? "" : ", ") + to_string(m);
    return s;
}

std::string join_metrics() {
    std::string s;
    for (Metric m : kAllMetrics) s += std::string(s.empty() ? "" : ", ") + to_string(m);
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<Method> parse_methods(const std::string& list) {
    std::vector<Method> out;
    for (const auto& name : split(list, ',')) {
        const auto m = parse_method(name);
        if (!m) throw CLI::ValidationError("--method", "unknown method '" + name + "' (choose from " + join_methods() + ")");
        out.push_back(*m);
    }
    if (out.empty()) throw CLI::ValidationError("--method", "no method given");
    return out;
}

Metric parse_metric_flag(const std::string& name, const char* flag) {
    const auto m = parse_metric(name);
    if (!m) throw CLI::ValidationError(flag, "unknown metric '" + name + "' (choose from " + join_metrics() + ")");
    return *m;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    for (const auto& item : split(text, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--phi-grid", "invalid number '" + item + "'");
        }
    }
    if (grid.empty()) throw CLI::ValidationError("--phi-grid", "empty grid");
    return grid;
}

fs::path default_results_dir() {
    if (const char* env = std::getenv(kResultsDirEnv); env && *env) return env;
    return "results";
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json config_json(const ExperimentConfig& cfg, const std::vector<Method>& methods) {
    json ms = json::array();
    for (Method m : methods) ms.push_back(to_string(m));
    return {{"methods", ms},
            {"ensemble_size", cfg.ensemble_size},
            {"threshold", cfg.threshold},
            {"phi_grid", cfg.phi_grid},
            {"outer_folds", cfg.outer_folds},
            {"seed", cfg.seed},
            {"tuning_metric", to_string(cfg.tuning_metric)},
            {"inner_folds", cfg.inner_folds},
            {"validation_folds", cfg.validation_folds}};
}

void write_manifest(const fs::path& dir, const char* command, const ExperimentConfig& cfg,
                    const std::vector<Method>& methods, const std::vector<DatasetSource>& datasets) {
    json ds = json::array();
    for (const auto& d : datasets)
        ds.push_back({{"name", d.name}, {"arff", fs::absolute(d.arff).string()}, {"xml", fs::absolute(d.xml).string()}});
    json manifest = {{"tool", "chainfuse"},
                     {"version", version()},
                     {"command", command},
                     {"timestamp", utc_timestamp()},
                     {"root_seed", cfg.seed},
                     {"config", config_json(cfg, methods)},
                     {"datasets", ds}};
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

struct Manifest {
    ExperimentConfig cfg;
    std::vector<Method> methods;
    std::vector<DatasetSource> datasets;
};

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read manifest " + path.string());
    json j;
    try {
        in >> j;
        Manifest m;
        const json& c = j.at("config");
        for (const auto& name : c.at("methods")) {
            const auto method = parse_method(name.get<std::string>());
            if (!method) throw Error("unknown method in manifest");
            m.methods.push_back(*method);
        }
        m.cfg.ensemble_size = c.at("ensemble_size").get<std::size_t>();
        m.cfg.threshold = c.at("threshold").get<double>();
        m.cfg.phi_grid = c.at("phi_grid").get<std::vector<double>>();
        m.cfg.outer_folds = c.at("outer_folds").get<std::size_t>();
        m.cfg.seed = c.at("seed").get<std::uint64_t>();
        const auto metric = parse_metric(c.at("tuning_metric").get<std::string>());
        if (!metric) throw Error("unknown tuning metric in manifest");
        m.cfg.tuning_metric = *metric;
        m.cfg.inner_folds = c.at("inner_folds").get<std::size_t>();
        m.cfg.validation_folds = c.at("validation_folds").get<std::size_t>();
        for (const auto& d : j.at("datasets"))
            m.datasets.push_back({d.at("name").get<std::string>(), d.at("arff").get<std::string>(),
                                  d.at("xml").get<std::string>()});
        return m;
    } catch (const json::exception& e) {
        throw Error("malformed manifest " + path.string() + ": " + e.what());
    }
}

void print_cells(std::ostream& out, const std::vector<CellResult>& cells) {
    for (const auto& c : cells) {
        out << c.dataset << ' ' << to_string(c.method) << ": ";
        if (!c.error.empty()) {
            out << "error: " << c.error << '\n';
            continue;
        }
        for (Metric m : kAllMetrics)
            out << to_string(m) << '=' << format_fixed(c.mean.get(m), 4) << "±" << format_fixed(c.stddev.get(m), 4)
                << ' ';
        out << '\n';
    }
}

int cells_exit(const std::vector<CellResult>& cells) {
    for (const auto& c : cells)
        if (!c.error.empty()) return kExitFailure;
    return kExitOk;
}

// Options shared by run and bench.
struct ExperimentFlags {
    std::size_t ensemble_size = 50;
    double threshold = 0.5;
    std::string phi_grid = "0,0.25,0.5,0.75,1";
    std::size_t folds = 10;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--ensemble-size,-c", ensemble_size, "Ensemble members")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--threshold,-t", threshold, "MV/ME threshold in (0,1]")->capture_default_str();
        app->add_option("--phi-grid", phi_grid, "Comma-separated phi_t grid for UDDT methods")->capture_default_str();
        app->add_option("--folds,-k", folds, "Outer cross-validation folds")->capture_default_str();
        app->add_option("--seed", seed, "Root seed")->capture_default_str();
        app->add_option("--jobs,-j", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--out,-o", out, std::string("Results directory (default $") + kResultsDirEnv + " or ./results)");
    }

    ExperimentConfig config() const {
        ExperimentConfig cfg;
        cfg.ensemble_size = ensemble_size;
        cfg.threshold = threshold;
        cfg.phi_grid = parse_grid(phi_grid);
        cfg.outer_folds = folds;
        cfg.seed = seed;
        cfg.jobs = jobs;
        return cfg;
    }

    fs::path out_dir() const { return out.empty() ? default_results_dir() : fs::path(out); }
};

void check_configs(const ExperimentConfig& base, const std::vector<Method>& methods) {
    for (Method m : methods) {
        ExperimentConfig cfg = base;
        cfg.method = m;
        try {
            cfg.validate();
        } catch (const Error& e) {
            throw CLI::ValidationError(e.what());
        }
    }
}

std::vector<DatasetSource> scan_data_dir(const fs::path& dir, const std::vector<std::string>& only) {
    if (!fs::is_directory(dir)) throw Error("data directory " + dir.string() + " does not exist");
    std::vector<DatasetSource> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".arff") continue;
        fs::path xml = entry.path();
        xml.replace_extension(".xml");
        if (!fs::exists(xml)) continue;
        const std::string name = entry.path().stem().string();
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        out.push_back({name, entry.path(), xml});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    if (out.empty()) throw Error("no <name>.arff / <name>.xml pairs found in " + dir.string());
    return out;
}

std::string phi_csv(const PhiMatrix& pm, bool absolute) {
    std::string out = "label";
    for (const auto& n : pm.label_names()) out += ',' + n;
    out += '\n';
    for (std::size_t p = 0; p < pm.size(); ++p) {
        out += pm.label_names()[p];
        for (std::size_t q = 0; q < pm.size(); ++q) {
            const double v = absolute ? std::abs(pm(p, q)) : pm(p, q);
            out += ',' + format_double(v);
        }
        out += '\n';
    }
    return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"chainfuse: ensembles of classifier chains with decision-template fusion"};
    app.name("chainfuse");
    app.footer("Methods: " + join_methods() + "\nMetrics: " + join_metrics() +
               "\nExit codes: 0 ok, 1 usage error, 2 runtime failure.");
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Cross-validate methods on one dataset");
    std::string arff, xml, name, method_list = "meecc", tuning = "accuracy", manifest;
    ExperimentFlags flags;
    run->add_option("--arff", arff, "ARFF data file");
    run->add_option("--xml-labels", xml, "XML label header");
    run->add_option("--name", name, "Dataset name used in results (default: ARFF file stem)");
    run->add_option("--method,-m", method_list, "Comma-separated methods: " + join_methods())->capture_default_str();
    run->add_option("--tuning-metric", tuning, "Metric for phi_t tuning: " + join_metrics())->capture_default_str();
    run->add_option("--manifest", manifest, "Re-run the experiment recorded in a manifest.json");
    flags.add(run);

    // bench
    auto* bench = app.add_subcommand("bench", "Dataset x method grid, one results directory per tuning metric");
    std::string data_dir, bench_methods = "mvecc,meecc,dtecc,uddtecc,stackecc", bench_metrics, bench_datasets;
    ExperimentFlags bench_flags;
    bench->add_option("--data-dir", data_dir, "Directory of <name>.arff / <name>.xml pairs")->required();
    bench->add_option("--datasets", bench_datasets, "Comma-separated dataset names (default: all found)");
    bench->add_option("--method,-m", bench_methods, "Comma-separated methods")->capture_default_str();
    bench->add_option("--metrics", bench_metrics, "Comma-separated tuning metrics (default: accuracy,f1,subset_accuracy,hamming_loss)");
    bench_flags.add(bench);

    // phi
    auto* phi_cmd = app.add_subcommand("phi", "Print the label phi-coefficient matrix as CSV");
    std::string phi_arff, phi_xml, phi_out;
    bool phi_abs = false;
    phi_cmd->add_option("--arff", phi_arff, "ARFF data file")->required();
    phi_cmd->add_option("--xml-labels", phi_xml, "XML label header")->required();
    phi_cmd->add_flag("--abs", phi_abs, "Absolute values");
    phi_cmd->add_option("--out,-o", phi_out, "Output file (default stdout)");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Average ranks, Friedman test and Bonferroni-Dunn CD diagram");
    std::string results, stats_metric = "accuracy", svg;
    double alpha = 0.1, min_div = -1.0;
    bool hib = false, lib = false;
    stats_cmd->add_option("--results", results, "results.csv from run or bench")->required();
    stats_cmd->add_option("--metric", stats_metric, "Metric to compare: " + join_metrics())->capture_default_str();
    stats_cmd->add_option("--alpha", alpha, "Significance level")->capture_default_str();
    auto* hib_flag = stats_cmd->add_flag("--higher-is-better", hib, "Rank larger values first");
    stats_cmd->add_flag("--lower-is-better", lib, "Rank smaller values first")->excludes(hib_flag);
    stats_cmd->add_option("--filter-diversity-min", min_div, "Keep datasets with diversity above this value");
    stats_cmd->add_option("--svg", svg, "Write the CD diagram to this SVG file");

    // info
    auto* info = app.add_subcommand("info", "Dataset statistics");
    std::string info_arff, info_xml;
    info->add_option("--arff", info_arff, "ARFF data file")->required();
    info->add_option("--xml-labels", info_xml, "XML label header")->required();

    // train
    auto* train = app.add_subcommand("train", "Train one method on a whole dataset and save the model");
    std::string tr_arff, tr_xml, tr_method = "uddtecc", tr_model;
    std::size_t tr_c = 50, tr_jobs = 1;
    double tr_t = 0.5, tr_phi = 0.0;
    std::uint64_t tr_seed = 1;
    train->add_option("--arff", tr_arff, "ARFF data file")->required();
    train->add_option("--xml-labels", tr_xml, "XML label header")->required();
    train->add_option("--method,-m", tr_method, "Method: " + join_methods())->capture_default_str();
    train->add_option("--ensemble-size,-c", tr_c, "Ensemble members")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--threshold,-t", tr_t, "MV/ME threshold")->capture_default_str();
    train->add_option("--phi", tr_phi, "phi_t for UDDT methods")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    train->add_option("--seed", tr_seed, "Seed")->capture_default_str();
    train->add_option("--jobs,-j", tr_jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    train->add_option("--model", tr_model, "Output model file")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "Predict label sets with a saved model");
    std::string pr_arff, pr_xml, pr_model, pr_out;
    predict->add_option("--arff", pr_arff, "ARFF data file")->required();
    predict->add_option("--xml-labels", pr_xml, "XML label header")->required();
    predict->add_option("--model", pr_model, "Model file from train")->required();
    predict->add_option("--out,-o", pr_out, "Predictions CSV (default stdout)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    }

    try {
        if (*run) {
            Manifest plan;
            if (!manifest.empty()) {
                plan = read_manifest(manifest);
                plan.cfg.jobs = flags.jobs;
            } else {
                if (arff.empty() || xml.empty()) throw CLI::ValidationError("run needs --arff and --xml-labels (or --manifest)");
                plan.cfg = flags.config();
                plan.cfg.tuning_metric = parse_metric_flag(tuning, "--tuning-metric");
                plan.methods = parse_methods(method_list);
                plan.datasets.push_back({name.empty() ? fs::path(arff).stem().string() : name, arff, xml});
            }
            check_configs(plan.cfg, plan.methods);
            const fs::path dir = flags.out_dir();
            write_manifest(dir, "run", plan.cfg, plan.methods, plan.datasets);
            const auto cells = run_experiment(plan.datasets, plan.methods, plan.cfg, dir);
            print_cells(out, cells);
            out << "results: " << (dir / "results.csv").string() << '\n';
            return cells_exit(cells);
        }
        if (*bench) {
            ExperimentConfig cfg = bench_flags.config();
            const auto methods = parse_methods(bench_methods);
            check_configs(cfg, methods);
            std::vector<Metric> metrics(std::begin(kHeadlineMetrics), std::end(kHeadlineMetrics));
            if (!bench_metrics.empty()) {
                metrics.clear();
                for (const auto& m : split(bench_metrics, ',')) metrics.push_back(parse_metric_flag(m, "--metrics"));
            }
            const auto datasets = scan_data_dir(data_dir, split(bench_datasets, ','));
            int code = kExitOk;
            for (Metric metric : metrics) {
                cfg.tuning_metric = metric;
                const fs::path dir = bench_flags.out_dir() / to_string(metric);
                write_manifest(dir, "run", cfg, methods, datasets);
                out << "== tuning metric " << to_string(metric) << " ==\n";
                const auto cells = run_experiment(datasets, methods, cfg, dir);
                print_cells(out, cells);
                code = std::max(code, cells_exit(cells));
            }
            return code;
        }
        if (*phi_cmd) {
            const auto ds = load_dataset(phi_arff, phi_xml);
            const std::string csv = phi_csv(phi_matrix(ds), phi_abs);
            if (phi_out.empty()) {
                out << csv;
            } else {
                std::ofstream f(phi_out, std::ios::trunc);
                if (!f) throw Error("cannot write " + phi_out);
                f << csv;
            }
            return kExitOk;
        }
        if (*stats_cmd) {
            const Metric metric = parse_metric_flag(stats_metric, "--metric");
            if (!(alpha > 0.0 && alpha < 1.0)) throw CLI::ValidationError("--alpha", "must lie in (0, 1)");
            const bool higher = hib ? true : lib ? false : higher_is_better(metric);
            std::ifstream in(results);
            if (!in) throw Error("cannot read " + results);
            std::ostringstream text;
            text << in.rdbuf();
            const ScoreTable scores = read_scores_csv(text.str(), to_string(metric), min_div);
            if (scores.datasets.empty()) throw Error("no datasets pass the diversity filter");
            const RankTable rt = make_rank_table(scores.methods, scores.datasets, scores.scores, higher);

            out << "dataset";
            for (const auto& m : rt.methods) out << ',' << m;
            out << '\n';
            for (std::size_t d = 0; d < rt.datasets.size(); ++d) {
                out << rt.datasets[d];
                for (std::size_t m = 0; m < rt.methods.size(); ++m)
                    out << ',' << format_fixed(scores.scores[d][m], 4) << " (" << format_double(rt.ranks[d][m]) << ')';
                out << '\n';
            }
            out << "average rank";
            for (double r : rt.avg_ranks) out << ',' << format_fixed(r, 6);
            out << '\n';
            const auto fr = friedman(rt);
            out << "friedman: chi2=" << format_fixed(fr.statistic, 4) << " df=" << fr.df
                << " p=" << format_fixed(fr.p_value, 6) << (fr.p_value < alpha ? " (reject H0)" : " (retain H0)") << '\n';
            const double cd = bonferroni_dunn_cd(rt.methods.size(), rt.datasets.size(), alpha);
            out << "bonferroni-dunn CD (alpha=" << format_double(alpha) << "): " << format_fixed(cd, 4) << '\n';
            for (const auto& g : cd_groups(rt.avg_ranks, cd)) {
                out << "group:";
                for (auto i : g) out << ' ' << rt.methods[i];
                out << '\n';
            }
            if (!svg.empty()) {
                render_cd_diagram(rt, cd, svg);
                out << "diagram: " << svg << '\n';
            }
            return kExitOk;
        }
        if (*info) {
            const auto ds = load_dataset(info_arff, info_xml);
            const auto st = dataset_stats(ds);
            out << "relation: " << ds.relation() << "\ninstances: " << ds.size() << "\nfeatures: " << ds.num_features()
                << "\nlabels: " << ds.num_labels() << "\ncardinality: " << format_fixed(st.cardinality, 4)
                << "\ndistinct labelsets: " << st.distinct_labelsets << "\ndiversity: " << format_fixed(st.diversity, 3)
                << '\n';
            return kExitOk;
        }
        if (*train) {
            const auto method = parse_method(tr_method);
            if (!method) throw CLI::ValidationError("--method", "unknown method '" + tr_method + "'");
            if (!(tr_t > 0.0 && tr_t <= 1.0)) throw CLI::ValidationError("--threshold", "must lie in (0, 1]");
            const auto ds = load_dataset(tr_arff, tr_xml);
            std::vector<std::size_t> rows(ds.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            const auto tc = train_classifier(ds, rows, *method, tr_c, tr_t, tr_phi, tr_seed, tr_jobs);
            save_classifier(tc, tr_model);
            out << "model: " << tr_model << '\n';
            return kExitOk;
        }
        if (*predict) {
            const auto tc = load_classifier(pr_model);
            const auto ds = load_dataset(pr_arff, pr_xml);
            std::vector<std::size_t> rows(ds.size());
            std::iota(rows.begin(), rows.end(), std::size_t{0});
            const auto predicted = tc.predict(ds, rows);
            std::ostringstream csv;
            csv << "row";
            for (const auto& n : ds.label_names()) csv << ',' << n;
            csv << '\n';
            std::vector<PredictionPair> pairs(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                csv << r;
                for (auto v : predicted[r]) csv << ',' << int(v);
                csv << '\n';
                const auto truth = ds.labels().row(r);
                pairs[r] = {std::vector<std::uint8_t>(truth.begin(), truth.end()), predicted[r]};
            }
            if (pr_out.empty()) {
                out << csv.str();
            } else {
                std::ofstream f(pr_out, std::ios::trunc);
                if (!f) throw Error("cannot write " + pr_out);
                f << csv.str();
            }
            const auto report = aggregate(pairs);
            for (Metric m : kAllMetrics) err << to_string(m) << '=' << format_fixed(report.get(m), 4) << '\n';
            return kExitOk;
        }
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace chainfuse
