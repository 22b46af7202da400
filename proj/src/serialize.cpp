#include "chainfuse/serialize.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace chainfuse {

namespace {

using nlohmann::json;

// JSON has no literal for non-finite numbers, so they travel as strings.
json num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double num_from(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error("invalid number '" + s + "' in model file");
    }
    return j.get<double>();
}

json nums(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

std::vector<double> nums_from(const json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& x : j) out.push_back(num_from(x));
    return out;
}

json nb_json(const NaiveBayesModel& m) {
    json schema = json::array();
    for (const auto& c : m.schema)
        schema.push_back({{"kind", c.kind == FeatureKind::numeric ? "numeric" : "nominal"},
                          {"categories", c.categories},
                          {"missing_slot", c.missing_slot}});
    return {{"schema", std::move(schema)},
            {"prior1", num(m.prior1)},
            {"mean", {nums(m.mean[0]), nums(m.mean[1])}},
            {"variance", {nums(m.variance[0]), nums(m.variance[1])}},
            {"gaussian_usable", m.gaussian_usable},
            {"offset", m.offset},
            {"log_prob", {nums(m.log_prob[0]), nums(m.log_prob[1])}}};
}

NaiveBayesModel nb_from(const json& j) {
    NaiveBayesModel m;
    for (const auto& c : j.at("schema")) {
        NbColumn col;
        const auto kind = c.at("kind").get<std::string>();
        if (kind != "numeric" && kind != "nominal") throw Error("invalid column kind in model file");
        col.kind = kind == "numeric" ? FeatureKind::numeric : FeatureKind::nominal;
        col.categories = c.at("categories").get<std::size_t>();
        col.missing_slot = c.at("missing_slot").get<bool>();
        m.schema.push_back(col);
    }
    m.prior1 = num_from(j.at("prior1"));
    for (int c = 0; c < 2; ++c) {
        m.mean[c] = nums_from(j.at("mean").at(c));
        m.variance[c] = nums_from(j.at("variance").at(c));
        m.log_prob[c] = nums_from(j.at("log_prob").at(c));
    }
    m.gaussian_usable = j.at("gaussian_usable").get<std::vector<std::uint8_t>>();
    m.offset = j.at("offset").get<std::vector<std::size_t>>();
    const std::size_t d = m.schema.size();
    if (m.mean[0].size() != d || m.mean[1].size() != d || m.variance[0].size() != d || m.variance[1].size() != d ||
        m.gaussian_usable.size() != d || m.offset.size() != d)
        throw Error("inconsistent Naive Bayes parameters in model file");
    m.finalize();
    return m;
}

json chain_json(const ChainModel& m) {
    json links = json::array();
    for (const auto& l : m.links) links.push_back(nb_json(l));
    return {{"order", m.order}, {"num_features", m.num_features}, {"linked", m.linked}, {"links", std::move(links)}};
}

ChainModel chain_from(const json& j) {
    ChainModel m;
    m.order = j.at("order").get<std::vector<std::size_t>>();
    m.num_features = j.at("num_features").get<std::size_t>();
    m.linked = j.at("linked").get<bool>();
    for (const auto& l : j.at("links")) m.links.push_back(nb_from(l));
    if (m.links.size() != m.order.size()) throw Error("chain link count does not match its order");
    return m;
}

json ensemble_json(const EnsembleModel& m) {
    json members = json::array();
    for (const auto& c : m.members) members.push_back(chain_json(c));
    return {{"kind", m.kind == EnsembleKind::ecc ? "ecc" : "ebr"},
            {"num_labels", m.num_labels},
            {"bag_seeds", m.bag_seeds},
            {"members", std::move(members)}};
}

EnsembleModel ensemble_from(const json& j) {
    EnsembleModel m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "ecc" && kind != "ebr") throw Error("invalid ensemble kind in model file");
    m.kind = kind == "ecc" ? EnsembleKind::ecc : EnsembleKind::ebr;
    m.num_labels = j.at("num_labels").get<std::size_t>();
    m.bag_seeds = j.at("bag_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& c : j.at("members")) m.members.push_back(chain_from(c));
    return m;
}

json templates_json(const std::vector<DecisionTemplatePair>& ts) {
    json out = json::array();
    for (const auto& t : ts)
        out.push_back({{"label", t.label},
                       {"selected", t.selected},
                       {"members", t.members},
                       {"dt_pos", nums(t.dt_pos)},
                       {"dt_neg", nums(t.dt_neg)},
                       {"pos_count", t.pos_count},
                       {"neg_count", t.neg_count}});
    return out;
}

std::vector<DecisionTemplatePair> templates_from(const json& j) {
    std::vector<DecisionTemplatePair> out;
    for (const auto& t : j) {
        DecisionTemplatePair p;
        p.label = t.at("label").get<std::size_t>();
        p.selected = t.at("selected").get<std::vector<std::size_t>>();
        p.members = t.at("members").get<std::size_t>();
        p.dt_pos = nums_from(t.at("dt_pos"));
        p.dt_neg = nums_from(t.at("dt_neg"));
        p.pos_count = t.at("pos_count").get<std::size_t>();
        p.neg_count = t.at("neg_count").get<std::size_t>();
        out.push_back(std::move(p));
    }
    return out;
}

json fusion_json(const FusionModel& f) {
    json j = {{"scheme", to_string(f.scheme)}, {"threshold", num(f.threshold)}, {"phi_t", num(f.phi_t)}};
    j["templates"] = templates_json(f.templates);
    if (f.stack)
        j["stack"] = {{"meta", chain_json(f.stack->meta)}, {"members", f.stack->members}, {"labels", f.stack->labels}};
    return j;
}

FusionModel fusion_from(const json& j) {
    FusionModel f;
    const auto scheme = j.at("scheme").get<std::string>();
    bool known = false;
    for (auto s : {FusionScheme::mv, FusionScheme::me, FusionScheme::dt, FusionScheme::uddt, FusionScheme::stack})
        if (scheme == to_string(s)) {
            f.scheme = s;
            known = true;
        }
    if (!known) throw Error("invalid fusion scheme '" + scheme + "' in model file");
    f.threshold = num_from(j.at("threshold"));
    f.phi_t = num_from(j.at("phi_t"));
    f.templates = templates_from(j.at("templates"));
    if (j.contains("stack")) {
        const auto& s = j.at("stack");
        StackModel sm;
        sm.meta = chain_from(s.at("meta"));
        sm.members = s.at("members").get<std::size_t>();
        sm.labels = s.at("labels").get<std::size_t>();
        f.stack = std::move(sm);
    }
    return f;
}

std::string wrap(const char* type, json body) {
    json j = {{"format", "chainfuse"}, {"version", kModelFormatVersion}, {"type", type}, {"model", std::move(body)}};
    return j.dump();
}

json unwrap(std::string_view text, const char* type) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "chainfuse") throw Error("not a chainfuse model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
        throw Error("unsupported model format version " + j.at("version").dump());
    if (j.at("type").get<std::string>() != type)
        throw Error("model file holds a " + j.at("type").get<std::string>() + ", expected " + type);
    return j.at("model");
}

template <typename Fn>
auto guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
}

}  // namespace

std::string serialize(const ChainModel& model) { return wrap("chain", chain_json(model)); }
std::string serialize(const EnsembleModel& model) { return wrap("ensemble", ensemble_json(model)); }
std::string serialize(const FusionModel& model) { return wrap("fusion", fusion_json(model)); }

std::string serialize(const TrainedClassifier& model) {
    json j = {{"method", to_string(model.method)}};
    if (model.single) j["single"] = chain_json(*model.single);
    j["ensemble"] = ensemble_json(model.ensemble);
    j["fusion"] = fusion_json(model.fusion);
    return wrap("classifier", std::move(j));
}

ChainModel deserialize_chain(std::string_view text) {
    return guarded([&] { return chain_from(unwrap(text, "chain")); });
}

EnsembleModel deserialize_ensemble(std::string_view text) {
    return guarded([&] { return ensemble_from(unwrap(text, "ensemble")); });
}

FusionModel deserialize_fusion(std::string_view text) {
    return guarded([&] { return fusion_from(unwrap(text, "fusion")); });
}

TrainedClassifier deserialize_classifier(std::string_view text) {
    return guarded([&] {
        const json j = unwrap(text, "classifier");
        TrainedClassifier tc;
        const auto method = parse_method(j.at("method").get<std::string>());
        if (!method) throw Error("unknown method in model file");
        tc.method = *method;
        if (j.contains("single")) tc.single = chain_from(j.at("single"));
        tc.ensemble = ensemble_from(j.at("ensemble"));
        tc.fusion = fusion_from(j.at("fusion"));
        return tc;
    });
}

void save_classifier(const TrainedClassifier& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize(model) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_classifier(buf.str());
}

}  // namespace chainfuse
