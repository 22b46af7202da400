#include "chainfuse/dataset.hpp"

#include "chainfuse/rng.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace chainfuse {

bool is_missing(double value) { return std::isnan(value); }
double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

LabelMatrix::LabelMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw Error("label matrix size mismatch");
    for (auto v : data_)
        if (v > 1) throw Error("label matrix entries must be 0 or 1");
}

LabelMatrix LabelMatrix::select_rows(std::span<const std::size_t> rows) const {
    LabelMatrix out(rows.size(), cols_);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = row(rows[r]);
        std::copy(src.begin(), src.end(), out.data_.begin() + r * cols_);
    }
    return out;
}

MultiLabelDataset::MultiLabelDataset(std::string relation, std::vector<Feature> features,
                                     std::vector<double> values, std::vector<std::string> label_names,
                                     LabelMatrix labels)
    : relation_(std::move(relation)),
      features_(std::move(features)),
      values_(std::move(values)),
      label_names_(std::move(label_names)),
      labels_(std::move(labels)) {
    if (labels_.rows() == 0) throw Error("dataset must contain at least one instance");
    if (labels_.cols() == 0) throw Error("dataset must declare at least one label");
    if (label_names_.size() != labels_.cols()) throw Error("label name count does not match label matrix");
    if (values_.size() != labels_.rows() * features_.size()) throw Error("feature matrix size mismatch");

    std::unordered_set<std::string> names;
    for (const auto& f : features_)
        if (!names.insert(f.name).second) throw Error("duplicate attribute name '" + f.name + "'");
    for (const auto& l : label_names_)
        if (!names.insert(l).second) throw Error("label name '" + l + "' is not unique");

    const std::size_t d = features_.size();
    for (std::size_t j = 0; j < d; ++j) {
        if (features_[j].kind != FeatureKind::nominal) continue;
        const double limit = static_cast<double>(features_[j].values.size());
        for (std::size_t i = 0; i < labels_.rows(); ++i) {
            double v = values_[i * d + j];
            if (is_missing(v)) continue;
            if (v < 0 || v >= limit || v != std::floor(v))
                throw Error("nominal feature '" + features_[j].name + "' holds an undeclared value");
        }
    }
}

MultiLabelDataset MultiLabelDataset::select_rows(std::span<const std::size_t> rows) const {
    const std::size_t d = features_.size();
    std::vector<double> values(rows.size() * d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto src = row(rows[r]);
        std::copy(src.begin(), src.end(), values.begin() + r * d);
    }
    return MultiLabelDataset(relation_, features_, std::move(values), label_names_, labels_.select_rows(rows));
}

bool MultiLabelDataset::operator==(const MultiLabelDataset& other) const {
    if (relation_ != other.relation_ || features_ != other.features_ || label_names_ != other.label_names_ ||
        labels_ != other.labels_ || values_.size() != other.values_.size())
        return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double a = values_[i], b = other.values_[i];
        if (is_missing(a) != is_missing(b)) return false;
        if (!is_missing(a) && std::bit_cast<std::uint64_t>(a) != std::bit_cast<std::uint64_t>(b)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// ARFF parsing

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    return lower(s.substr(0, prefix.size())) == prefix;
}

// Reads one token starting at pos: a quoted string (with backslash escapes) or
// a run of characters up to whitespace or one of `stops`.
std::string read_token(std::string_view s, std::size_t& pos, std::string_view stops, std::size_t line) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) return {};
    const char q = s[pos];
    if (q == '\'' || q == '"') {
        std::string out;
        ++pos;
        while (pos < s.size() && s[pos] != q) {
            if (s[pos] == '\\' && pos + 1 < s.size()) ++pos;
            out.push_back(s[pos++]);
        }
        if (pos >= s.size()) throw ParseError("unterminated quoted string", line);
        ++pos;
        return out;
    }
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t' && stops.find(s[pos]) == std::string_view::npos)
        ++pos;
    return std::string(s.substr(start, pos - start));
}

// Splits on commas outside quotes; each piece is unquoted and trimmed. The
// second member records whether the piece was a bare '?'.
std::vector<std::pair<std::string, bool>> split_values(std::string_view s, std::size_t line) {
    std::vector<std::pair<std::string, bool>> out;
    std::size_t pos = 0;
    while (true) {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        bool quoted = pos < s.size() && (s[pos] == '\'' || s[pos] == '"');
        std::string tok;
        if (quoted) {
            tok = read_token(s, pos, ",", line);
        } else {
            std::size_t start = pos;
            while (pos < s.size() && s[pos] != ',') ++pos;
            tok = std::string(trim(s.substr(start, pos - start)));
        }
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        out.emplace_back(tok, !quoted && tok == "?");
        if (pos >= s.size()) break;
        if (s[pos] != ',') throw ParseError("expected ',' between values", line);
        ++pos;
    }
    return out;
}

struct Attribute {
    Feature feature;
    std::unordered_map<std::string, std::size_t> index;  // nominal value -> position
};

Attribute parse_attribute(std::string_view rest, std::size_t line) {
    std::size_t pos = 0;
    Attribute attr;
    attr.feature.name = read_token(rest, pos, "{", line);
    if (attr.feature.name.empty()) throw ParseError("attribute without a name", line);
    std::string_view type = trim(rest.substr(pos));
    if (type.empty()) throw ParseError("attribute '" + attr.feature.name + "' has no type", line);
    if (type.front() == '{') {
        auto close = type.rfind('}');
        if (close == std::string_view::npos) throw ParseError("unterminated nominal value list", line);
        attr.feature.kind = FeatureKind::nominal;
        for (auto& [v, missing] : split_values(type.substr(1, close - 1), line)) {
            if (v.empty()) throw ParseError("empty nominal value", line);
            if (!attr.index.emplace(v, attr.feature.values.size()).second)
                throw ParseError("duplicate nominal value '" + v + "'", line);
            attr.feature.values.push_back(v);
        }
        if (attr.feature.values.empty()) throw ParseError("nominal attribute with no values", line);
        return attr;
    }
    std::string kw = lower(type.substr(0, type.find_first_of(" \t")));
    if (kw == "numeric" || kw == "real" || kw == "integer") {
        attr.feature.kind = FeatureKind::numeric;
        return attr;
    }
    throw ParseError("unsupported attribute type '" + std::string(type) + "'", line);
}

double parse_number(std::string_view tok, std::size_t line) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("invalid numeric value '" + std::string(tok) + "'", line);
    return v;
}

std::string xml_unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos) {
            out.push_back('&');
            continue;
        }
        std::string_view ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else if (!ent.empty() && ent.front() == '#') {
            unsigned code = 0;
            bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
            std::string_view digits = ent.substr(hex ? 2 : 1);
            std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
            if (code < 0x80) out.push_back(static_cast<char>(code));
            else out += "?";
        } else {
            out.append(s.substr(i, semi - i + 1));
        }
        i = semi;
    }
    return out;
}

}  // namespace

std::vector<std::string> parse_label_header(std::string_view xml) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = xml.find("<label", pos)) != std::string_view::npos) {
        std::size_t after = pos + 6;
        if (after >= xml.size()) break;
        char next = xml[after];
        if (next != ' ' && next != '\t' && next != '\r' && next != '\n' && next != '/' && next != '>') {
            pos = after;  // <labels ...>
            continue;
        }
        auto end = xml.find('>', after);
        if (end == std::string_view::npos) throw ParseError("unterminated <label> element in XML header", 0);
        std::string_view tag = xml.substr(after, end - after);
        auto n = tag.find("name");
        while (n != std::string_view::npos) {
            std::size_t p = n + 4;
            while (p < tag.size() && (tag[p] == ' ' || tag[p] == '\t')) ++p;
            if (p < tag.size() && tag[p] == '=') break;
            n = tag.find("name", n + 4);
        }
        if (n == std::string_view::npos) throw ParseError("<label> element without a name attribute", 0);
        std::size_t p = tag.find('=', n) + 1;
        while (p < tag.size() && (tag[p] == ' ' || tag[p] == '\t')) ++p;
        if (p >= tag.size() || (tag[p] != '"' && tag[p] != '\''))
            throw ParseError("label name attribute must be quoted", 0);
        char q = tag[p];
        auto close = tag.find(q, p + 1);
        if (close == std::string_view::npos) throw ParseError("unterminated label name", 0);
        names.push_back(xml_unescape(tag.substr(p + 1, close - p - 1)));
        pos = end;
    }
    if (names.empty()) throw ParseError("XML label header declares no labels", 0);
    std::unordered_set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw ParseError("XML label header repeats label '" + n + "'", 0);
    return names;
}

MultiLabelDataset parse_dataset(std::string_view arff_text, std::string_view label_header_xml) {
    const auto label_names = parse_label_header(label_header_xml);

    std::string relation;
    std::vector<Attribute> attrs;
    std::unordered_map<std::string, std::size_t> attr_index;
    bool in_data = false;

    std::vector<std::size_t> label_attr;       // label position -> attribute index
    std::vector<std::ptrdiff_t> attr_to_label;  // attribute index -> label position or -1
    std::vector<std::size_t> attr_to_feature;   // attribute index -> feature position
    std::vector<std::uint8_t> label_one_index;  // per label: index of value "1"
    std::vector<Feature> features;

    std::vector<double> values;
    std::vector<std::uint8_t> labels;
    std::vector<double> row_values;
    std::vector<std::uint8_t> row_labels;

    auto begin_data = [&](std::size_t line) {
        if (attrs.empty()) throw ParseError("@data before any @attribute", line);
        attr_to_label.assign(attrs.size(), -1);
        for (const auto& name : label_names) {
            auto it = attr_index.find(name);
            if (it == attr_index.end())
                throw ParseError("label '" + name + "' from the XML header is not an ARFF attribute", 0);
            const Feature& f = attrs[it->second].feature;
            std::set<std::string> vals(f.values.begin(), f.values.end());
            if (f.kind != FeatureKind::nominal || vals != std::set<std::string>{"0", "1"})
                throw ParseError("label attribute '" + name + "' must be nominal {0,1}", 0);
            attr_to_label[it->second] = static_cast<std::ptrdiff_t>(label_attr.size());
            label_attr.push_back(it->second);
            label_one_index.push_back(static_cast<std::uint8_t>(attrs[it->second].index.at("1")));
        }
        attr_to_feature.assign(attrs.size(), 0);
        for (std::size_t a = 0; a < attrs.size(); ++a) {
            if (attr_to_label[a] >= 0) continue;
            attr_to_feature[a] = features.size();
            features.push_back(attrs[a].feature);
        }
        row_values.resize(features.size());
        row_labels.resize(label_names.size());
    };

    auto store = [&](std::size_t a, const std::string& tok, bool missing, std::size_t line) {
        const Attribute& attr = attrs[a];
        if (attr_to_label[a] >= 0) {
            if (missing) throw ParseError("missing value for label '" + attr.feature.name + "'", line);
            auto it = attr.index.find(tok);
            if (it == attr.index.end()) throw ParseError("label value '" + tok + "' is not 0 or 1", line);
            auto l = static_cast<std::size_t>(attr_to_label[a]);
            row_labels[l] = it->second == label_one_index[l] ? 1 : 0;
            return;
        }
        double& slot = row_values[attr_to_feature[a]];
        if (missing) {
            slot = missing_value();
        } else if (attr.feature.kind == FeatureKind::numeric) {
            slot = parse_number(tok, line);
        } else {
            auto it = attr.index.find(tok);
            if (it == attr.index.end())
                throw ParseError("value '" + tok + "' not declared for attribute '" + attr.feature.name + "'", line);
            slot = static_cast<double>(it->second);
        }
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= arff_text.size()) {
        auto nl = arff_text.find('\n', pos);
        std::string_view raw =
            arff_text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? arff_text.size() + 1 : nl + 1;
        ++line_no;

        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '%') continue;

        if (!in_data) {
            if (line.front() != '@') throw ParseError("expected a header declaration", line_no);
            if (starts_with_ci(line, "@relation")) {
                std::size_t p = 9;
                relation = read_token(line, p, "", line_no);
            } else if (starts_with_ci(line, "@attribute")) {
                Attribute attr = parse_attribute(line.substr(10), line_no);
                if (!attr_index.emplace(attr.feature.name, attrs.size()).second)
                    throw ParseError("duplicate attribute '" + attr.feature.name + "'", line_no);
                attrs.push_back(std::move(attr));
            } else if (starts_with_ci(line, "@data")) {
                begin_data(line_no);
                in_data = true;
            } else {
                throw ParseError("unknown declaration '" + std::string(line.substr(0, line.find(' '))) + "'",
                                 line_no);
            }
            continue;
        }

        if (line.front() == '{') {
            // Sparse row; an optional trailing instance weight {w} is ignored.
            auto close = line.find('}');
            if (close == std::string_view::npos) throw ParseError("unterminated sparse row", line_no);
            for (std::size_t a = 0; a < attrs.size(); ++a) {
                if (attr_to_label[a] >= 0) {
                    auto l = static_cast<std::size_t>(attr_to_label[a]);
                    row_labels[l] = label_one_index[l] == 0 ? 1 : 0;
                } else {
                    // 0 for numerics, first declared value (index 0) for nominals
                    row_values[attr_to_feature[a]] = 0.0;
                }
            }
            std::string_view body = trim(line.substr(1, close - 1));
            if (!body.empty()) {
                for (auto& [entry, bare_q] : split_values(body, line_no)) {
                    std::string_view e = entry;
                    auto sp = e.find_first_of(" \t");
                    if (sp == std::string_view::npos) throw ParseError("sparse entry needs 'index value'", line_no);
                    std::size_t idx = 0;
                    auto [ptr, ec] = std::from_chars(e.data(), e.data() + sp, idx);
                    if (ec != std::errc() || ptr != e.data() + sp)
                        throw ParseError("invalid sparse index '" + std::string(e.substr(0, sp)) + "'", line_no);
                    if (idx >= attrs.size())
                        throw ParseError("sparse index " + std::to_string(idx) + " out of range", line_no);
                    std::size_t vp = sp;
                    std::string raw_val(trim(e.substr(sp)));
                    bool quoted = !raw_val.empty() && (raw_val.front() == '\'' || raw_val.front() == '"');
                    std::string val = quoted ? read_token(e, vp, "", line_no) : raw_val;
                    store(idx, val, !quoted && val == "?", line_no);
                }
            }
        } else {
            auto toks = split_values(line, line_no);
            if (toks.size() != attrs.size())
                throw ParseError("expected " + std::to_string(attrs.size()) + " values, found " +
                                     std::to_string(toks.size()),
                                 line_no);
            for (std::size_t a = 0; a < attrs.size(); ++a) store(a, toks[a].first, toks[a].second, line_no);
        }
        values.insert(values.end(), row_values.begin(), row_values.end());
        labels.insert(labels.end(), row_labels.begin(), row_labels.end());
    }

    if (!in_data) throw ParseError("ARFF text has no @data section", line_no);
    const std::size_t n = labels.size() / label_names.size();
    if (n == 0) throw ParseError("ARFF data section is empty", line_no);
    return MultiLabelDataset(relation, std::move(features), std::move(values), label_names,
                             LabelMatrix(n, label_names.size(), std::move(labels)));
}

namespace {
std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
}  // namespace

MultiLabelDataset load_dataset(const std::filesystem::path& arff, const std::filesystem::path& xml) {
    const std::string arff_text = read_file(arff);
    const std::string xml_text = read_file(xml);
    try {
        return parse_dataset(arff_text, xml_text);
    } catch (const ParseError& e) {
        throw ParseError(arff.filename().string() + ": " + e.what(), e.line());
    }
}

// ---------------------------------------------------------------------------
// ARFF writing

namespace {

std::string quote_arff(const std::string& s) {
    bool needs = s.empty() || s == "?";
    for (char c : s)
        if (c == ' ' || c == '\t' || c == ',' || c == '\'' || c == '"' || c == '{' || c == '}' || c == '%' ||
            c == '\\')
            needs = true;
    if (!needs) return s;
    std::string out = "'";
    for (char c : s) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

std::string to_arff(const MultiLabelDataset& ds) {
    std::ostringstream out;
    out << "@relation " << quote_arff(ds.relation()) << "\n\n";
    for (const auto& f : ds.features()) {
        out << "@attribute " << quote_arff(f.name) << ' ';
        if (f.kind == FeatureKind::numeric) {
            out << "numeric\n";
        } else {
            out << '{';
            for (std::size_t v = 0; v < f.values.size(); ++v) out << (v ? "," : "") << quote_arff(f.values[v]);
            out << "}\n";
        }
    }
    for (const auto& l : ds.label_names()) out << "@attribute " << quote_arff(l) << " {0,1}\n";
    out << "\n@data\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto row = ds.row(i);
        bool first = true;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!first) out << ',';
            first = false;
            if (is_missing(row[j])) out << '?';
            else if (ds.features()[j].kind == FeatureKind::numeric) out << format_number(row[j]);
            else out << quote_arff(ds.features()[j].values[static_cast<std::size_t>(row[j])]);
        }
        for (auto y : ds.labels().row(i)) {
            if (!first) out << ',';
            first = false;
            out << static_cast<int>(y);
        }
        out << '\n';
    }
    return out.str();
}

std::string to_label_header(const MultiLabelDataset& ds) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<labels xmlns=\"http://mulan.sourceforge.net/labels\">\n";
    for (const auto& l : ds.label_names()) out << "<label name=\"" << xml_escape(l) << "\"></label>\n";
    out << "</labels>\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Statistics

std::size_t distinct_labelsets(const LabelMatrix& labels) {
    std::set<std::vector<std::uint8_t>> seen;
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        auto r = labels.row(i);
        seen.emplace(r.begin(), r.end());
    }
    return seen.size();
}

double diversity(const LabelMatrix& labels) {
    const double n = static_cast<double>(labels.rows());
    const double possible = labels.cols() >= 63 ? n : std::min(std::ldexp(1.0, static_cast<int>(labels.cols())), n);
    return static_cast<double>(distinct_labelsets(labels)) / possible;
}

double diversity(const MultiLabelDataset& ds) { return diversity(ds.labels()); }

DatasetStats dataset_stats(const MultiLabelDataset& ds) {
    DatasetStats s;
    s.distinct_labelsets = distinct_labelsets(ds.labels());
    s.diversity = diversity(ds);
    std::size_t total = 0;
    for (auto v : ds.labels().data()) total += v;
    s.cardinality = static_cast<double>(total) / static_cast<double>(ds.size());
    return s;
}

// ---------------------------------------------------------------------------
// Fold planning

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignment) ++sizes[f];
    return sizes;
}

FoldPlan plan_folds(const LabelMatrix& labels, std::size_t k, std::uint64_t seed) {
    const std::size_t n = labels.rows();
    const std::size_t m = labels.cols();
    if (k < 2) throw Error("fold count must be at least 2");
    if (k > n) throw Error("fold count " + std::to_string(k) + " exceeds instance count " + std::to_string(n));

    Rng rng(seed);

    // Hard capacities keep fold sizes within one of each other; which folds
    // receive the extra row is decided by the seed.
    std::vector<std::size_t> fold_ids = random_permutation(k, rng);
    std::vector<std::ptrdiff_t> capacity(k, static_cast<std::ptrdiff_t>(n / k));
    for (std::size_t r = 0; r < n % k; ++r) ++capacity[fold_ids[r]];

    std::vector<double> positives(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) positives[j] += labels(i, j);

    // desired[f][j]: remaining positives of label j fold f should still take.
    std::vector<std::vector<double>> desired(k, std::vector<double>(m));
    for (std::size_t f = 0; f < k; ++f)
        for (std::size_t j = 0; j < m; ++j)
            desired[f][j] = positives[j] * static_cast<double>(capacity[f]) / static_cast<double>(n);

    std::vector<std::size_t> order = random_permutation(n, rng);
    std::vector<bool> assigned(n, false);
    std::vector<std::size_t> remaining_pos(m);
    for (std::size_t j = 0; j < m; ++j) remaining_pos[j] = static_cast<std::size_t>(positives[j]);

    FoldPlan plan;
    plan.k = k;
    plan.assignment.assign(n, 0);

    auto place = [&](std::size_t i, std::ptrdiff_t label) {
        std::vector<std::size_t> best;
        double best_desired = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t best_cap = std::numeric_limits<std::ptrdiff_t>::min();
        for (std::size_t f = 0; f < k; ++f) {
            if (capacity[f] <= 0) continue;
            double want = label >= 0 ? desired[f][static_cast<std::size_t>(label)] : 0.0;
            if (want > best_desired || (want == best_desired && capacity[f] > best_cap)) {
                best.assign(1, f);
                best_desired = want;
                best_cap = capacity[f];
            } else if (want == best_desired && capacity[f] == best_cap) {
                best.push_back(f);
            }
        }
        std::size_t f = best.size() == 1 ? best[0] : best[rng.uniform_index(best.size())];
        plan.assignment[i] = f;
        assigned[i] = true;
        --capacity[f];
        for (std::size_t j = 0; j < m; ++j) {
            if (!labels(i, j)) continue;
            desired[f][j] -= 1.0;
            --remaining_pos[j];
        }
    };

    while (true) {
        // Rarest label among those with unassigned positives; ties go to the lowest index.
        std::ptrdiff_t rare = -1;
        for (std::size_t j = 0; j < m; ++j)
            if (remaining_pos[j] > 0 && (rare < 0 || remaining_pos[j] < remaining_pos[static_cast<std::size_t>(rare)]))
                rare = static_cast<std::ptrdiff_t>(j);
        if (rare < 0) break;
        for (std::size_t i : order)
            if (!assigned[i] && labels(i, static_cast<std::size_t>(rare))) place(i, rare);
    }
    for (std::size_t i : order)
        if (!assigned[i]) place(i, -1);
    return plan;
}

FoldPlan plan_folds(const MultiLabelDataset& ds, std::size_t k, std::uint64_t seed) {
    return plan_folds(ds.labels(), k, seed);
}

}  // namespace chainfuse
