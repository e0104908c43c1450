#pragma once

#include "elevest/bowindex.hpp"
#include "elevest/features.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elevest {

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    double scale = 1.0;
    double orientation = 0.0;
};

/// Detection geometry plus visual words of one image, as needed for
/// verification. `diagonal` is the image diagonal in pixels.
struct QuantizedImage {
    std::string id;
    std::vector<Keypoint> keypoints;
    std::vector<std::uint32_t> words;
    double diagonal = 0.0;

    static QuantizedImage from_features(std::string id, std::span<const LocalFeature> features,
                                        std::vector<std::uint32_t> words);
};

/// Diagonal of the box spanned by the origin and the farthest keypoint.
double keypoint_extent_diagonal(std::span<const Keypoint> keypoints);

struct Correspondence {
    std::uint32_t query_feature;
    std::uint32_t db_feature;
    std::uint32_t word;

    bool operator==(const Correspondence&) const = default;
};

struct SimilarityTransform {
    double scale = 1.0;
    double rotation = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    std::pair<double, double> apply(double x, double y) const;
    static SimilarityTransform from_pair(const Keypoint& query, const Keypoint& db);
};

struct VerifyParams {
    std::size_t t_sp = 8;       // verified iff more than t_sp inliers
    double reproj_tol = 0.05;   // fraction of the db image diagonal
    std::size_t shortlist = 50;
    unsigned threads = 1;

    void validate() const;
};

struct VerificationResult {
    std::size_t inlier_count = 0;
    std::optional<SimilarityTransform> transform;
    bool verified = false;
    std::vector<std::size_t> inliers;  // indices into the correspondence list
};

inline constexpr std::size_t kMaxPairsPerWordSide = 5;

/// Every cross pair of features sharing a word, at most 5 x 5 per word.
/// Ordered by word, then query index, then db index.
std::vector<Correspondence> tentative_correspondences(const QuantizedImage& query, const QuantizedImage& db);

/// Tries the similarity transform implied by each correspondence and keeps
/// the one with the most inliers (first one wins ties).
VerificationResult verify(std::span<const Correspondence> correspondences, const QuantizedImage& query,
                          const QuantizedImage& db, const VerifyParams& params);

struct RerankedEntry {
    std::string id;
    double score = 0.0;
    std::size_t original_rank = 0;
    VerificationResult verification;
};

/// Returns nullptr when an image's features are unavailable; such images are
/// treated as unverified.
using ImageLookup = std::function<const QuantizedImage*(const std::string&)>;

/// Verifies the top `shortlist` entries. Verified images move to the front
/// ordered by inlier count; everything else keeps its similarity order.
std::vector<RerankedEntry> rerank(const RankedList& ranked, const QuantizedImage& query, const ImageLookup& lookup,
                                  const VerifyParams& params);

/// Structured text (JSON) dump of one verification, for diagnostics.
std::string dump_verification(const QuantizedImage& query, const QuantizedImage& db,
                              std::span<const Correspondence> correspondences, const VerificationResult& result);

}  // namespace elevest
