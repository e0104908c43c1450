#pragma once

#include "elevest/bowindex.hpp"
#include "elevest/geomverify.hpp"
#include "elevest/mvocab.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elevest {

enum class EstimateMethod { BowVerified, BowMedian, MultiVocab, Baseline, External, Hybrid };

std::string_view method_name(EstimateMethod m);

struct EstimatorParams {
    std::size_t t_sp = 8;
    std::size_t k = 100;
    double w_t = 1.4;

    void validate() const;
};

struct ElevationEstimate {
    double elevation_m = 0.0;
    EstimateMethod method = EstimateMethod::Baseline;
    bool verified = false;
    std::size_t neighbor_count = 0;
};

/// Median; for an even count, the mean of the two central values.
double median(std::vector<double> values);

/// Verified top-1 elevation if the re-ranked head is verified, otherwise the
/// median over every retrieved image. `elevations` follows `reranked`.
ElevationEstimate decide_bow(std::span<const RerankedEntry> reranked, std::span<const double> elevations);

/// Retrieval, spatial re-ranking and the decision above. Throws
/// NoEstimateError when retrieval comes back empty.
ElevationEstimate estimate_bow(const QuantizedImage& query, const InvertedIndex& index, const ImageLookup& lookup,
                               const EstimatorParams& params, VerifyParams verify = {});

/// Weights max(0, 1 - d / (w_t * d1)) over neighbors sorted by dissimilarity.
ElevationEstimate weighted_knn_estimate(std::span<const Neighbor> neighbors, double w_t);

ElevationEstimate estimate_mvocab(const ShortVector& query, std::span<const DatabaseEntry> database,
                                  const EstimatorParams& params, unsigned threads = 1);

/// Mean training elevation.
ElevationEstimate estimate_baseline(std::span<const double> train_elevations);

struct Prediction {
    double elevation_m = 0.0;
    std::string method;
};

/// Per-image predictions from any outside regressor.
struct ExternalPredictions {
    std::map<std::string, Prediction> rows;
    std::string source;

    std::optional<double> find(const std::string& id) const;
};

/// CSV with header `image_id,elevation_m,method`. An empty file is an empty map.
ExternalPredictions load_external_predictions(const std::filesystem::path& path);
ExternalPredictions parse_predictions(std::string_view text, std::string source = {});

struct PredictionRow {
    std::string image_id;
    double elevation_m = 0.0;
    std::string method;
};

std::string format_predictions(std::span<const PredictionRow> rows);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows);

ElevationEstimate estimate_external(const ExternalPredictions& predictions, const std::string& id);

using EstimatorFn = std::function<ElevationEstimate()>;

/// BOW first; any non-verified outcome is replaced by the secondary
/// estimator's value. Without a secondary this is the primary result as is.
ElevationEstimate estimate_hybrid(const EstimatorFn& primary, const EstimatorFn& secondary);

}  // namespace elevest
