#include "elevest/estimate.hpp"

#include "elevest/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace elevest {

std::string_view method_name(EstimateMethod m) {
    switch (m) {
        case EstimateMethod::BowVerified: return "bow-verified";
        case EstimateMethod::BowMedian: return "bow-median";
        case EstimateMethod::MultiVocab: return "mvocab";
        case EstimateMethod::Baseline: return "baseline";
        case EstimateMethod::External: return "external";
        case EstimateMethod::Hybrid: return "hybrid";
    }
    return "unknown";
}

void EstimatorParams::validate() const {
    if (t_sp < 1) throw ValidationError("t_sp must be >= 1");
    if (k < 1) throw ValidationError("k must be >= 1");
    if (!(w_t >= 1.0) || !std::isfinite(w_t)) throw ValidationError("w_t must be >= 1");
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

ElevationEstimate decide_bow(std::span<const RerankedEntry> reranked, std::span<const double> elevations) {
    if (reranked.empty()) throw NoEstimateError("retrieval returned no images");
    if (elevations.size() != reranked.size()) throw ValidationError("elevations do not match the ranked list");
    ElevationEstimate e;
    if (reranked.front().verification.verified) {
        e.elevation_m = elevations.front();
        e.method = EstimateMethod::BowVerified;
        e.verified = true;
        e.neighbor_count = 1;
        return e;
    }
    e.elevation_m = median({elevations.begin(), elevations.end()});
    e.method = EstimateMethod::BowMedian;
    e.neighbor_count = elevations.size();
    return e;
}

ElevationEstimate estimate_bow(const QuantizedImage& query, const InvertedIndex& index, const ImageLookup& lookup,
                               const EstimatorParams& params, VerifyParams verify) {
    params.validate();
    if (query.words.empty()) throw NoEstimateError("query '" + query.id + "' has no features");
    if (index.image_count() == 0) throw NoEstimateError("index is empty");
    const BowVector q = encode_bow(query.words, index.idf());
    const RankedList ranked = index.query(q, params.k, query.id);
    if (ranked.entries.empty()) throw NoEstimateError("query '" + query.id + "' shares no words with the index");

    verify.t_sp = params.t_sp;
    const auto reranked = rerank(ranked, query, lookup, verify);
    std::vector<double> elevations;
    elevations.reserve(reranked.size());
    for (const auto& r : reranked) elevations.push_back(*index.elevation_of(r.id));
    return decide_bow(reranked, elevations);
}

ElevationEstimate weighted_knn_estimate(std::span<const Neighbor> neighbors, double w_t) {
    if (neighbors.empty()) throw NoEstimateError("no neighbors to weight");
    if (!(w_t >= 1.0)) throw ValidationError("w_t must be >= 1");
    const double d1 = neighbors.front().dissimilarity;

    auto mean_of_ties = [&](double d) {
        ElevationEstimate e;
        e.method = EstimateMethod::MultiVocab;
        double sum = 0.0;
        for (const auto& n : neighbors) {
            if (n.dissimilarity == d) {
                sum += n.elevation_m;
                ++e.neighbor_count;
            }
        }
        e.elevation_m = sum / static_cast<double>(e.neighbor_count);
        return e;
    };
    // The weight formula divides by d1; exact duplicates answer directly.
    if (d1 == 0.0) return mean_of_ties(0.0);

    ElevationEstimate e;
    e.method = EstimateMethod::MultiVocab;
    double wsum = 0.0;
    double acc = 0.0;
    const double cutoff = w_t * d1;
    for (const auto& n : neighbors) {
        const double w = std::max(0.0, 1.0 - n.dissimilarity / cutoff);
        if (w > 0.0) {
            wsum += w;
            acc += w * n.elevation_m;
            ++e.neighbor_count;
        }
    }
    // w_t = 1 zeroes even the top weight.
    if (wsum == 0.0) return mean_of_ties(d1);
    e.elevation_m = acc / wsum;
    return e;
}

ElevationEstimate estimate_mvocab(const ShortVector& query, std::span<const DatabaseEntry> database,
                                  const EstimatorParams& params, unsigned threads) {
    params.validate();
    const auto neighbors = knn_search(database, query, params.k, threads);
    return weighted_knn_estimate(neighbors, params.w_t);
}

ElevationEstimate estimate_baseline(std::span<const double> train_elevations) {
    if (train_elevations.empty()) throw ValidationError("baseline needs a non-empty training set");
    ElevationEstimate e;
    e.elevation_m = std::accumulate(train_elevations.begin(), train_elevations.end(), 0.0) /
                    static_cast<double>(train_elevations.size());
    e.method = EstimateMethod::Baseline;
    e.neighbor_count = train_elevations.size();
    return e;
}

std::optional<double> ExternalPredictions::find(const std::string& id) const {
    auto it = rows.find(id);
    if (it == rows.end()) return std::nullopt;
    return it->second.elevation_m;
}

namespace {

constexpr std::string_view kPredictionsHeader = "image_id,elevation_m,method";

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

}  // namespace

ExternalPredictions parse_predictions(std::string_view text, std::string source) {
    ExternalPredictions out;
    out.source = std::move(source);
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool header_seen = false;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kPredictionsHeader) {
                throw ParseError("expected header '" + std::string(kPredictionsHeader) + "'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw ParseError("expected 3 columns, found " + std::to_string(cells.size()), line_no);
        const std::string id(trim(cells[0]));
        if (id.empty()) throw ParseError("empty image_id", line_no);
        const auto num = trim(cells[1]);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
        if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(value)) {
            throw ParseError("elevation '" + std::string(num) + "' is not a finite number", line_no);
        }
        if (!out.rows.emplace(id, Prediction{value, std::string(trim(cells[2]))}).second) {
            throw DuplicateIdError(id);
        }
    }
    return out;
}

ExternalPredictions load_external_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open predictions file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_predictions(ss.str(), path.stem().string());
}

std::string format_predictions(std::span<const PredictionRow> rows) {
    std::ostringstream out;
    out << kPredictionsHeader << '\n';
    char num[64];
    for (const auto& r : rows) {
        if (r.image_id.find(',') != std::string::npos || r.method.find(',') != std::string::npos) {
            throw ValidationError("prediction fields must not contain commas");
        }
        // Shortest form that reads back to the same double.
        const auto res = std::to_chars(num, num + sizeof num, r.elevation_m);
        out << r.image_id << ',' << std::string_view(num, static_cast<std::size_t>(res.ptr - num)) << ',' << r.method
            << '\n';
    }
    return out.str();
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << format_predictions(rows);
}

ElevationEstimate estimate_external(const ExternalPredictions& predictions, const std::string& id) {
    const auto v = predictions.find(id);
    if (!v) throw NoEstimateError("no external prediction for '" + id + "'");
    ElevationEstimate e;
    e.elevation_m = *v;
    e.method = EstimateMethod::External;
    return e;
}

ElevationEstimate estimate_hybrid(const EstimatorFn& primary, const EstimatorFn& secondary) {
    if (!primary) throw ValidationError("hybrid estimator needs a primary estimator");
    std::optional<ElevationEstimate> first;
    try {
        first = primary();
    } catch (const NoEstimateError&) {
        if (!secondary) throw;
    }
    if (first && (first->method == EstimateMethod::BowVerified || !secondary)) return *first;

    ElevationEstimate fallback;
    try {
        fallback = secondary();
    } catch (const NoEstimateError& e) {
        throw NoEstimateError(std::string("primary and secondary estimators both failed: ") + e.what());
    }
    fallback.method = EstimateMethod::Hybrid;
    fallback.verified = false;
    return fallback;
}

}  // namespace elevest
