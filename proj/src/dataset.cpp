#include "metriq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "metriq/rng.hpp"

namespace metriq {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_double(const std::string& field, const std::string& file, std::size_t line) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(file, line, "expected a number, got '" + field + "'");
    if (!std::isfinite(value))
        throw ParseError(file, line, "non-finite value '" + field + "'");
    return value;
}

long parse_int(const std::string& field, const std::string& file, std::size_t line) {
    long value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(file, line, "expected an integer, got '" + field + "'");
    return value;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    return in;
}

void format_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

double pearson(const std::vector<FeatureVec>& rows, int a, int b) {
    const std::size_t n = rows.size();
    double ma = 0.0, mb = 0.0;
    for (const auto& row : rows) {
        ma += row[a];
        mb += row[b];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (const auto& row : rows) {
        const double da = row[a] - ma;
        const double db = row[b] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

void Dataset::rebuild_index() {
    index.clear();
    index.reserve(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) index.emplace(objects[i].id, i);
}

std::optional<std::size_t> Dataset::index_of(const ObjectId& id) const {
    auto it = index.find(id);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

const FeatureVec& Dataset::features_of(const ObjectId& id) const {
    auto i = index_of(id);
    if (!i) throw InputError("unknown object id '" + id + "'");
    return objects[*i].x;
}

std::optional<int> Dataset::label_of(const ObjectId& id) const {
    for (const auto& ex : labels)
        if (ex.o == id) return ex.c;
    return std::nullopt;
}

Dataset load_dataset(const std::string& features_path, const std::string& labels_path,
                     const std::string& ratings_path) {
    Dataset ds;

    {
        std::ifstream in = open_or_throw(features_path);
        std::string line;
        std::size_t lineno = 0;
        if (!std::getline(in, line)) throw ParseError(features_path, 1, "missing header");
        ++lineno;
        auto header = split_fields(strip_cr(line));
        if (header.empty() || header[0] != "object_id")
            throw ParseError(features_path, 1, "header must start with 'object_id'");
        ds.feature_count = static_cast<int>(header.size()) - 1;
        if (ds.feature_count < 1) throw ParseError(features_path, 1, "no feature columns");

        std::unordered_set<ObjectId> seen;
        while (std::getline(in, line)) {
            ++lineno;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto fields = split_fields(line);
            if (static_cast<int>(fields.size()) != ds.feature_count + 1)
                throw ParseError(features_path, lineno,
                                 "expected " + std::to_string(ds.feature_count + 1) +
                                     " fields, got " + std::to_string(fields.size()));
            if (fields[0].empty()) throw ParseError(features_path, lineno, "empty object id");
            if (!seen.insert(fields[0]).second)
                throw ParseError(features_path, lineno, "duplicate object id '" + fields[0] + "'");
            FeatureVec x(static_cast<std::size_t>(ds.feature_count));
            for (int k = 0; k < ds.feature_count; ++k)
                x[k] = parse_double(fields[k + 1], features_path, lineno);
            ds.objects.push_back({fields[0], std::move(x)});
        }
    }
    ds.rebuild_index();

    {
        std::ifstream in = open_or_throw(labels_path);
        std::string line;
        std::size_t lineno = 0;
        if (!std::getline(in, line)) throw ParseError(labels_path, 1, "missing header");
        ++lineno;
        if (strip_cr(line) != "object_id,class")
            throw ParseError(labels_path, 1, "expected header 'object_id,class'");
        std::unordered_set<ObjectId> seen;
        while (std::getline(in, line)) {
            ++lineno;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto fields = split_fields(line);
            if (fields.size() != 2)
                throw ParseError(labels_path, lineno, "expected 2 fields");
            auto idx = ds.index_of(fields[0]);
            if (!idx)
                throw ParseError(labels_path, lineno, "unknown object id '" + fields[0] + "'");
            if (!seen.insert(fields[0]).second)
                throw ParseError(labels_path, lineno, "duplicate label for '" + fields[0] + "'");
            long c = parse_int(fields[1], labels_path, lineno);
            if (c < 1) throw ParseError(labels_path, lineno, "class index must be >= 1");
            ds.labels.push_back({fields[0], ds.objects[*idx].x, static_cast<int>(c)});
            ds.class_count = std::max(ds.class_count, static_cast<int>(c));
        }
    }

    {
        std::ifstream in = open_or_throw(ratings_path);
        std::string line;
        std::size_t lineno = 0;
        if (!std::getline(in, line)) throw ParseError(ratings_path, 1, "missing header");
        ++lineno;
        if (strip_cr(line) != "object_id_a,object_id_b,rating")
            throw ParseError(ratings_path, 1, "expected header 'object_id_a,object_id_b,rating'");
        while (std::getline(in, line)) {
            ++lineno;
            line = strip_cr(line);
            if (line.empty()) continue;
            auto fields = split_fields(line);
            if (fields.size() != 3)
                throw ParseError(ratings_path, lineno, "expected 3 fields");
            auto ia = ds.index_of(fields[0]);
            if (!ia)
                throw ParseError(ratings_path, lineno, "unknown object id '" + fields[0] + "'");
            auto ib = ds.index_of(fields[1]);
            if (!ib)
                throw ParseError(ratings_path, lineno, "unknown object id '" + fields[1] + "'");
            if (*ia == *ib)
                throw ParseError(ratings_path, lineno, "rating pairs an object with itself");
            long sigma = parse_int(fields[2], ratings_path, lineno);
            if (sigma < 1 || sigma > 3)
                throw ParseError(ratings_path, lineno,
                                 "rating must be 1, 2 or 3, got " + std::to_string(sigma));
            ds.ratings.push_back({fields[0], fields[1], ds.objects[*ia].x, ds.objects[*ib].x,
                                  static_cast<int>(sigma)});
        }
    }

    return ds;
}

void save_dataset(const Dataset& ds, const std::string& features_path,
                  const std::string& labels_path, const std::string& ratings_path) {
    {
        std::string out = "object_id";
        for (int k = 1; k <= ds.feature_count; ++k) out += ",f" + std::to_string(k);
        out += '\n';
        for (const auto& obj : ds.objects) {
            out += obj.id;
            for (double v : obj.x) {
                out += ',';
                format_double(out, v);
            }
            out += '\n';
        }
        std::ofstream f(features_path, std::ios::binary);
        if (!f) throw Error("cannot write " + features_path);
        f << out;
    }
    {
        std::string out = "object_id,class\n";
        for (const auto& ex : ds.labels) out += ex.o + "," + std::to_string(ex.c) + "\n";
        std::ofstream f(labels_path, std::ios::binary);
        if (!f) throw Error("cannot write " + labels_path);
        f << out;
    }
    {
        std::string out = "object_id_a,object_id_b,rating\n";
        for (const auto& ex : ds.ratings)
            out += ex.o + "," + ex.o2 + "," + std::to_string(ex.sigma) + "\n";
        std::ofstream f(ratings_path, std::ios::binary);
        if (!f) throw Error("cannot write " + ratings_path);
        f << out;
    }
}

FilterResult filter_correlated(const std::vector<FeatureVec>& rows, double threshold) {
    if (rows.size() < 2) throw InputError("filter_correlated needs at least 2 rows");
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw InputError("correlation threshold must be in (0, 1]");
    const int k0 = static_cast<int>(rows.front().size());
    for (const auto& row : rows)
        if (static_cast<int>(row.size()) != k0)
            throw InputError("filter_correlated: ragged feature matrix");

    FilterResult result;
    for (int j = 0; j < k0; ++j) {
        double mean = 0.0;
        for (const auto& row : rows) mean += row[j];
        mean /= static_cast<double>(rows.size());
        double var = 0.0;
        for (const auto& row : rows) var += (row[j] - mean) * (row[j] - mean);
        if (var == 0.0) {
            // undefined correlation; treated as redundant
            result.dropped_pairs.push_back({j, j, 1.0});
            continue;
        }
        bool kept = true;
        for (int i : result.kept_feature_indices) {
            const double corr = pearson(rows, i, j);
            if (std::abs(corr) > threshold) {
                result.dropped_pairs.push_back({j, i, corr});
                kept = false;
                break;
            }
        }
        if (kept) result.kept_feature_indices.push_back(j);
    }

    result.rows.reserve(rows.size());
    for (const auto& row : rows) {
        FeatureVec reduced;
        reduced.reserve(result.kept_feature_indices.size());
        for (int j : result.kept_feature_indices) reduced.push_back(row[j]);
        result.rows.push_back(std::move(reduced));
    }
    return result;
}

FeatureVec Standardizer::apply(const FeatureVec& x) const {
    if (x.size() != mean.size()) throw InputError("Standardizer: dimension mismatch");
    FeatureVec out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean[k]) / stddev[k];
    return out;
}

std::pair<std::vector<FeatureVec>, Standardizer> normalize(const std::vector<FeatureVec>& rows) {
    if (rows.size() < 2) throw InputError("normalize needs at least 2 rows");
    const std::size_t n = rows.size();
    const std::size_t k = rows.front().size();
    Standardizer st;
    st.mean.assign(k, 0.0);
    st.stddev.assign(k, 0.0);
    for (const auto& row : rows) {
        if (row.size() != k) throw InputError("normalize: ragged feature matrix");
        for (std::size_t j = 0; j < k; ++j) st.mean[j] += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) st.mean[j] /= static_cast<double>(n);
    for (const auto& row : rows)
        for (std::size_t j = 0; j < k; ++j) {
            const double d = row[j] - st.mean[j];
            st.stddev[j] += d * d;
        }
    for (std::size_t j = 0; j < k; ++j) {
        st.stddev[j] = std::sqrt(st.stddev[j] / static_cast<double>(n - 1));
        if (st.stddev[j] == 0.0)
            throw InputError("normalize: zero-variance column " + std::to_string(j) +
                             " (filter correlated/constant features first)");
    }
    std::vector<FeatureVec> out;
    out.reserve(n);
    for (const auto& row : rows) out.push_back(st.apply(row));
    return {std::move(out), std::move(st)};
}

std::pair<Dataset, PreprocessReport> preprocess_dataset(const Dataset& ds, double threshold) {
    std::vector<FeatureVec> rows;
    rows.reserve(ds.objects.size());
    for (const auto& obj : ds.objects) rows.push_back(obj.x);

    FilterResult filtered = filter_correlated(rows, threshold);
    auto [standardized, st] = normalize(filtered.rows);

    PreprocessReport report;
    report.kept_feature_indices = filtered.kept_feature_indices;
    report.dropped_pairs = filtered.dropped_pairs;
    report.means = st.mean;
    report.deviations = st.stddev;

    Dataset out;
    out.feature_count = static_cast<int>(report.kept_feature_indices.size());
    out.class_count = ds.class_count;
    out.objects.reserve(ds.objects.size());
    for (std::size_t i = 0; i < ds.objects.size(); ++i)
        out.objects.push_back({ds.objects[i].id, standardized[i]});
    out.rebuild_index();
    for (const auto& ex : ds.labels)
        out.labels.push_back({ex.o, out.features_of(ex.o), ex.c});
    for (const auto& ex : ds.ratings)
        out.ratings.push_back({ex.o, ex.o2, out.features_of(ex.o), out.features_of(ex.o2), ex.sigma});
    return {std::move(out), std::move(report)};
}

void write_preprocess_report(const PreprocessReport& report, const std::string& path) {
    nlohmann::json j;
    j["kept_feature_indices"] = report.kept_feature_indices;
    j["dropped_pairs"] = nlohmann::json::array();
    for (const auto& d : report.dropped_pairs)
        j["dropped_pairs"].push_back(
            {{"dropped", d.dropped}, {"against", d.against}, {"correlation", d.correlation}});
    j["means"] = report.means;
    j["deviations"] = report.deviations;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << j.dump(2) << '\n';
}

std::vector<RatingExample> split_ratings(const std::vector<RatingExample>& ratings, double fraction,
                                         std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw InputError("split_ratings: fraction must be in (0, 1]");
    const std::size_t n = ratings.size();
    const std::size_t take =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (take < 1) throw InputError("split_ratings: requested sample is empty");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    // partial Fisher-Yates: the first `take` slots are a uniform sample
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<RatingExample> subset;
    subset.reserve(take);
    for (std::size_t i = 0; i < take; ++i) subset.push_back(ratings[order[i]]);
    return subset;
}

}  // namespace metriq
