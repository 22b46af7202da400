#include "chainfuse/evaluation.hpp"

#include "chainfuse/correlation.hpp"
#include "chainfuse/format.hpp"
#include "chainfuse/parallel.hpp"
#include "chainfuse/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

namespace chainfuse {

const char* to_string(Method m) {
    switch (m) {
        case Method::mvecc: return "mvecc";
        case Method::meecc: return "meecc";
        case Method::dtecc: return "dtecc";
        case Method::uddtecc: return "uddtecc";
        case Method::stackecc: return "stackecc";
        case Method::br: return "br";
        case Method::ebr: return "ebr";
        case Method::uddtebr: return "uddtebr";
        case Method::dtebr: return "dtebr";
    }
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    for (Method m : kAllMethods)
        if (s == to_string(m)) return m;
    return std::nullopt;
}

bool uses_phi(Method m) { return m == Method::uddtecc || m == Method::uddtebr; }

namespace {
bool uses_ebr(Method m) { return m == Method::ebr || m == Method::uddtebr || m == Method::dtebr; }
}  // namespace

void ExperimentConfig::validate() const {
    if (ensemble_size < 1) throw Error("ensemble size must be at least 1");
    if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("threshold must lie in (0, 1]");
    if (outer_folds < 2) throw Error("at least 2 outer folds are required");
    if (uses_phi(method)) {
        if (phi_grid.empty()) throw Error("phi grid must not be empty");
        for (double g : phi_grid)
            if (!(g >= 0.0 && g <= 1.0)) throw Error("phi grid values must lie in [0, 1]");
        if (inner_folds < 2) throw Error("at least 2 inner folds are required");
        if (validation_folds < 1 || validation_folds >= inner_folds)
            throw Error("validation folds must leave at least one inner training fold");
    }
}

const char* to_string(Stage s) {
    switch (s) {
        case Stage::tune_fit: return "tune_fit";
        case Stage::tune_score: return "tune_score";
        case Stage::final_fit: return "final_fit";
        case Stage::final_score: return "final_score";
    }
    return "?";
}

namespace {

FusionModel fit_fusion(Method method, std::span<const DecisionProfile> profiles, const LabelMatrix& labels,
                       double threshold, double phi_t, std::uint64_t seed) {
    switch (method) {
        case Method::mvecc:
        case Method::ebr: return make_mv(threshold);
        case Method::meecc: return make_me(threshold);
        case Method::dtecc:
        case Method::dtebr: {
            FusionModel f;
            f.scheme = FusionScheme::dt;
            f.templates = fit_dt(profiles, labels);
            return f;
        }
        case Method::uddtecc:
        case Method::uddtebr: {
            FusionModel f;
            f.scheme = FusionScheme::uddt;
            f.phi_t = phi_t;
            f.templates = fit_uddt(profiles, labels, phi_matrix(labels), phi_t);
            return f;
        }
        case Method::stackecc: {
            FusionModel f;
            f.scheme = FusionScheme::stack;
            f.stack = fit_stack(profiles, labels, derive_seed(seed, "stack"));
            return f;
        }
        case Method::br: break;
    }
    throw Error("method has no fusion stage");
}

bool needs_training_profiles(Method m) {
    return m == Method::dtecc || m == Method::dtebr || m == Method::uddtecc || m == Method::uddtebr ||
           m == Method::stackecc;
}

}  // namespace

TrainedClassifier train_classifier(const MultiLabelDataset& ds, std::span<const std::size_t> rows, Method method,
                                   std::size_t ensemble_size, double threshold, double phi_t, std::uint64_t seed,
                                   std::size_t jobs) {
    TrainedClassifier tc;
    tc.method = method;
    if (method == Method::br) {
        tc.single = train_br(ds, rows);
        return tc;
    }
    tc.ensemble = uses_ebr(method) ? train_ebr(ds, rows, ensemble_size, seed, jobs)
                                   : train_ecc(ds, rows, ensemble_size, seed, jobs);
    std::vector<DecisionProfile> profiles;
    if (needs_training_profiles(method)) profiles = decision_profiles(tc.ensemble, ds, rows, jobs);
    tc.fusion = fit_fusion(method, profiles, ds.labels().select_rows(rows), threshold, phi_t, seed);
    return tc;
}

std::vector<LabelVector> TrainedClassifier::predict(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                                                    std::size_t jobs) const {
    std::vector<LabelVector> out(rows.size());
    if (single) {
        for (std::size_t r = 0; r < rows.size(); ++r) out[r] = predict_cc(*single, ds.row(rows[r])).labels;
        return out;
    }
    const auto profiles = decision_profiles(ensemble, ds, rows, jobs);
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = fusion.fuse(profiles[r]);
    return out;
}

namespace {

std::vector<PredictionPair> pairs_for(const MultiLabelDataset& ds, std::span<const std::size_t> rows,
                                      const std::vector<LabelVector>& predicted) {
    std::vector<PredictionPair> pairs(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto truth = ds.labels().row(rows[r]);
        pairs[r].truth.assign(truth.begin(), truth.end());
        pairs[r].predicted = predicted[r];
    }
    return pairs;
}

double criterion(Metric m, const MetricReport& report) {
    const double v = report.get(m);
    return higher_is_better(m) ? v : -v;
}

}  // namespace

TuningResult tune_phi(const MultiLabelDataset& ds, std::span<const std::size_t> training_rows,
                      const ExperimentConfig& cfg, std::uint64_t seed, const RowObserver& observer,
                      std::size_t outer_fold) {
    if (cfg.phi_grid.empty()) throw Error("phi grid must not be empty");
    TuningResult result;
    result.best_phi = cfg.phi_grid.front();
    if (cfg.phi_grid.size() == 1) return result;

    if (training_rows.size() < cfg.inner_folds)
        throw Error("too few training rows for " + std::to_string(cfg.inner_folds) + " inner folds");
    const LabelMatrix training_labels = ds.labels().select_rows(training_rows);
    const FoldPlan inner = plan_folds(training_labels, cfg.inner_folds, derive_seed(seed, {0}));
    std::vector<std::size_t> fit_rows, validation_rows;
    for (std::size_t r = 0; r < training_rows.size(); ++r)
        (inner.assignment[r] < cfg.validation_folds ? validation_rows : fit_rows).push_back(training_rows[r]);
    if (fit_rows.empty() || validation_rows.empty()) throw Error("inner split left an empty partition");
    if (observer) {
        observer(Stage::tune_fit, outer_fold, fit_rows);
        observer(Stage::tune_score, outer_fold, validation_rows);
    }

    // The ensemble does not depend on phi_t, so one ensemble trained with the
    // tuning seed serves every grid value.
    const EnsembleKind kind = uses_ebr(cfg.method) ? EnsembleKind::ebr : EnsembleKind::ecc;
    const std::uint64_t ens_seed = derive_seed(seed, {1});
    const EnsembleModel ens = kind == EnsembleKind::ebr ? train_ebr(ds, fit_rows, cfg.ensemble_size, ens_seed, cfg.jobs)
                                                        : train_ecc(ds, fit_rows, cfg.ensemble_size, ens_seed, cfg.jobs);
    const auto fit_profiles = decision_profiles(ens, ds, fit_rows, cfg.jobs);
    const auto validation_profiles = decision_profiles(ens, ds, validation_rows, cfg.jobs);
    const LabelMatrix fit_labels = ds.labels().select_rows(fit_rows);
    const PhiMatrix pm = phi_matrix(fit_labels);

    double best = -std::numeric_limits<double>::infinity();
    for (double g : cfg.phi_grid) {
        const auto templates = fit_uddt(fit_profiles, fit_labels, pm, g);
        std::vector<LabelVector> predicted(validation_rows.size());
        for (std::size_t r = 0; r < validation_rows.size(); ++r)
            predicted[r] = fuse_dt(validation_profiles[r], templates);
        const double crit = criterion(cfg.tuning_metric, aggregate(pairs_for(ds, validation_rows, predicted)));
        result.scores.push_back(crit);
        if (crit > best) {
            best = crit;
            result.best_phi = g;
        }
    }
    return result;
}

PerformanceMatrix model_performance(const MultiLabelDataset& ds, const ExperimentConfig& cfg,
                                    const RowObserver& observer) {
    cfg.validate();
    const FoldPlan plan = plan_folds(ds, cfg.outer_folds, derive_seed(cfg.seed, {0}));
    const std::size_t k = cfg.outer_folds;

    PerformanceMatrix pm;
    pm.folds.resize(k);
    pm.chosen_phi.resize(k);
    pm.test_rows.resize(k);
    pm.predictions.resize(k);

    std::mutex observer_mutex;
    RowObserver serialized;
    if (observer) {
        serialized = [&](Stage s, std::size_t f, std::span<const std::size_t> rows) {
            std::lock_guard lock(observer_mutex);
            observer(s, f, rows);
        };
    }

    // Folds run in parallel when jobs > 1; each fold's models then train serially.
    ExperimentConfig inner_cfg = cfg;
    inner_cfg.jobs = cfg.jobs > 1 ? 1 : cfg.jobs;
    parallel_for(k, cfg.jobs, [&](std::size_t f) {
        const auto train = plan.train_rows(f);
        const auto test = plan.test_rows(f);
        const std::uint64_t fold_seed = derive_seed(cfg.seed, {1, f});
        double phi_t = 0.0;
        if (uses_phi(cfg.method)) {
            phi_t = tune_phi(ds, train, inner_cfg, derive_seed(fold_seed, {1}), serialized, f).best_phi;
            pm.chosen_phi[f] = phi_t;
        }
        if (serialized) {
            serialized(Stage::final_fit, f, train);
            serialized(Stage::final_score, f, test);
        }
        const TrainedClassifier tc = train_classifier(ds, train, cfg.method, cfg.ensemble_size, cfg.threshold, phi_t,
                                                      derive_seed(fold_seed, {0}), inner_cfg.jobs);
        pm.predictions[f] = tc.predict(ds, test, inner_cfg.jobs);
        pm.folds[f] = aggregate(pairs_for(ds, test, pm.predictions[f]));
        pm.test_rows[f] = test;
    });

    for (Metric m : kAllMetrics) {
        double sum = 0.0;
        for (const auto& r : pm.folds) sum += r.get(m);
        const double mean = sum / static_cast<double>(k);
        double ss = 0.0;
        for (const auto& r : pm.folds) ss += (r.get(m) - mean) * (r.get(m) - mean);
        pm.mean.get(m) = mean;
        pm.stddev.get(m) = std::sqrt(ss / static_cast<double>(k - 1));
    }
    return pm;
}

std::uint64_t cell_seed(std::uint64_t root, std::string_view dataset, Method method) {
    std::string tag(dataset);
    tag += '/';
    tag += to_string(method);
    return derive_seed(root, tag);
}

namespace {

using nlohmann::json;

json report_json(const MetricReport& r) {
    json j = json::object();
    for (Metric m : kAllMetrics) j[to_string(m)] = r.get(m);
    return j;
}

MetricReport report_from(const json& j) {
    MetricReport r;
    for (Metric m : kAllMetrics) r.get(m) = j.at(to_string(m)).get<double>();
    return r;
}

std::string cell_key(const std::string& dataset, Method method, Metric tuning) {
    return dataset + '\x1f' + to_string(method) + '\x1f' + to_string(tuning);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

}  // namespace

std::string cell_to_json(const CellResult& cell) {
    json j;
    j["dataset"] = cell.dataset;
    j["method"] = to_string(cell.method);
    j["tuning_metric"] = to_string(cell.tuning_metric);
    j["diversity"] = cell.diversity;
    if (!cell.error.empty()) {
        j["error"] = cell.error;
        return j.dump();
    }
    j["mean"] = report_json(cell.mean);
    j["std"] = report_json(cell.stddev);
    json folds = json::array();
    for (const auto& f : cell.folds) folds.push_back(report_json(f));
    j["folds"] = std::move(folds);
    json phis = json::array();
    for (const auto& p : cell.chosen_phi) phis.push_back(p ? json(*p) : json(nullptr));
    j["chosen_phi_t"] = std::move(phis);
    return j.dump();
}

CellResult cell_from_json(std::string_view line) {
    const json j = json::parse(line);
    CellResult cell;
    cell.dataset = j.at("dataset").get<std::string>();
    const auto method = parse_method(j.at("method").get<std::string>());
    const auto tuning = parse_metric(j.at("tuning_metric").get<std::string>());
    if (!method || !tuning) throw Error("unrecognized method or metric in results line");
    cell.method = *method;
    cell.tuning_metric = *tuning;
    cell.diversity = j.value("diversity", 0.0);
    if (j.contains("error")) {
        cell.error = j.at("error").get<std::string>();
        return cell;
    }
    cell.mean = report_from(j.at("mean"));
    cell.stddev = report_from(j.at("std"));
    for (const auto& f : j.at("folds")) cell.folds.push_back(report_from(f));
    for (const auto& p : j.at("chosen_phi_t"))
        cell.chosen_phi.push_back(p.is_null() ? std::nullopt : std::optional<double>(p.get<double>()));
    return cell;
}

std::string results_csv(std::span<const CellResult> cells) {
    std::string out = "dataset,method,tuning_metric,metric,mean,std,folds,chosen_phi_t,diversity\n";
    for (const auto& cell : cells) {
        if (!cell.error.empty()) continue;
        std::string phis;
        for (std::size_t f = 0; f < cell.chosen_phi.size(); ++f) {
            if (f) phis += ';';
            if (cell.chosen_phi[f]) phis += format_double(*cell.chosen_phi[f]);
        }
        for (Metric m : kAllMetrics) {
            std::string folds;
            for (std::size_t f = 0; f < cell.folds.size(); ++f) {
                if (f) folds += ';';
                folds += format_double(cell.folds[f].get(m));
            }
            out += csv_field(cell.dataset) + ',' + to_string(cell.method) + ',' + to_string(cell.tuning_metric) + ',' +
                   to_string(m) + ',' + format_double(cell.mean.get(m)) + ',' + format_double(cell.stddev.get(m)) +
                   ',' + folds + ',' + phis + ',' + format_double(cell.diversity) + '\n';
        }
    }
    return out;
}

std::vector<CellResult> run_experiment(const std::vector<DatasetSource>& datasets, const std::vector<Method>& methods,
                                       const ExperimentConfig& defaults, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto jsonl_path = out_dir / "results.jsonl";

    std::map<std::string, CellResult> done;
    {
        std::ifstream in(jsonl_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                CellResult cell = cell_from_json(line);
                if (cell.error.empty()) done[cell_key(cell.dataset, cell.method, cell.tuning_metric)] = std::move(cell);
            } catch (const std::exception&) {
                // A truncated trailing line from an interrupted run; the cell is recomputed.
            }
        }
    }

    std::ofstream jsonl(jsonl_path, std::ios::app);
    if (!jsonl) throw Error("cannot open " + jsonl_path.string() + " for writing");

    std::vector<CellResult> cells;
    for (const auto& src : datasets) {
        std::optional<MultiLabelDataset> ds;
        std::string load_error;
        auto ensure_loaded = [&] {
            if (ds || !load_error.empty()) return;
            try {
                ds = load_dataset(src.arff, src.xml);
            } catch (const std::exception& e) {
                load_error = e.what();
            }
        };
        for (Method method : methods) {
            const std::string key = cell_key(src.name, method, defaults.tuning_metric);
            if (auto it = done.find(key); it != done.end()) {
                cells.push_back(it->second);
                continue;
            }
            ensure_loaded();
            CellResult cell;
            cell.dataset = src.name;
            cell.method = method;
            cell.tuning_metric = defaults.tuning_metric;
            if (!load_error.empty()) {
                cell.error = load_error;
            } else {
                cell.diversity = diversity(*ds);
                try {
                    ExperimentConfig cfg = defaults;
                    cfg.method = method;
                    cfg.seed = cell_seed(defaults.seed, src.name, method);
                    PerformanceMatrix pm = model_performance(*ds, cfg);
                    cell.folds = std::move(pm.folds);
                    cell.chosen_phi = std::move(pm.chosen_phi);
                    cell.mean = pm.mean;
                    cell.stddev = pm.stddev;
                } catch (const std::exception& e) {
                    cell.error = e.what();
                }
            }
            jsonl << cell_to_json(cell) << '\n';
            jsonl.flush();
            cells.push_back(std::move(cell));
        }
    }

    std::ofstream csv(out_dir / "results.csv", std::ios::trunc);
    if (!csv) throw Error("cannot write " + (out_dir / "results.csv").string());
    csv << results_csv(cells);
    return cells;
}

}  // namespace chainfuse
