#include "elevest/geomverify.hpp"

#include "elevest/errors.hpp"
#include "elevest/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace elevest {

QuantizedImage QuantizedImage::from_features(std::string id, std::span<const LocalFeature> features,
                                             std::vector<std::uint32_t> words) {
    if (words.size() != features.size()) throw ValidationError("word list does not match feature list");
    QuantizedImage q;
    q.id = std::move(id);
    q.keypoints.reserve(features.size());
    for (const auto& f : features) q.keypoints.push_back({f.x, f.y, f.scale, f.orientation});
    q.words = std::move(words);
    q.diagonal = keypoint_extent_diagonal(q.keypoints);
    return q;
}

double keypoint_extent_diagonal(std::span<const Keypoint> keypoints) {
    double w = 0.0;
    double h = 0.0;
    for (const auto& k : keypoints) {
        w = std::max(w, k.x);
        h = std::max(h, k.y);
    }
    return std::hypot(w, h);
}

std::pair<double, double> SimilarityTransform::apply(double x, double y) const {
    const double c = scale * std::cos(rotation);
    const double s = scale * std::sin(rotation);
    return {c * x - s * y + tx, s * x + c * y + ty};
}

SimilarityTransform SimilarityTransform::from_pair(const Keypoint& q, const Keypoint& d) {
    SimilarityTransform t;
    t.scale = d.scale / q.scale;
    t.rotation = d.orientation - q.orientation;
    t.tx = 0.0;
    t.ty = 0.0;
    const auto [px, py] = t.apply(q.x, q.y);
    t.tx = d.x - px;
    t.ty = d.y - py;
    return t;
}

void VerifyParams::validate() const {
    if (t_sp < 1) throw ValidationError("t_sp must be >= 1");
    if (!(reproj_tol > 0.0)) throw ValidationError("reproj_tol must be > 0");
    if (shortlist < 1) throw ValidationError("shortlist must be >= 1");
}

std::vector<Correspondence> tentative_correspondences(const QuantizedImage& query, const QuantizedImage& db) {
    std::map<std::uint32_t, std::vector<std::uint32_t>> q_by_word;
    std::map<std::uint32_t, std::vector<std::uint32_t>> d_by_word;
    for (std::uint32_t i = 0; i < query.words.size(); ++i) {
        auto& v = q_by_word[query.words[i]];
        if (v.size() < kMaxPairsPerWordSide) v.push_back(i);
    }
    for (std::uint32_t j = 0; j < db.words.size(); ++j) {
        auto& v = d_by_word[db.words[j]];
        if (v.size() < kMaxPairsPerWordSide) v.push_back(j);
    }
    std::vector<Correspondence> out;
    for (const auto& [word, qs] : q_by_word) {
        auto it = d_by_word.find(word);
        if (it == d_by_word.end()) continue;
        for (auto qi : qs) {
            for (auto dj : it->second) out.push_back({qi, dj, word});
        }
    }
    return out;
}

VerificationResult verify(std::span<const Correspondence> correspondences, const QuantizedImage& query,
                          const QuantizedImage& db, const VerifyParams& params) {
    params.validate();
    VerificationResult best;
    if (correspondences.empty()) return best;
    for (const auto& c : correspondences) {
        if (c.query_feature >= query.keypoints.size() || c.db_feature >= db.keypoints.size()) {
            throw ValidationError("correspondence refers to a feature outside the image");
        }
    }

    const double tol = params.reproj_tol * db.diagonal;
    const double tol2 = tol * tol;
    std::vector<bool> q_used(query.keypoints.size());
    std::vector<bool> d_used(db.keypoints.size());
    std::vector<std::size_t> inliers;

    for (const auto& h : correspondences) {
        const auto t = SimilarityTransform::from_pair(query.keypoints[h.query_feature], db.keypoints[h.db_feature]);
        if (!std::isfinite(t.scale) || !std::isfinite(t.tx) || !std::isfinite(t.ty)) continue;
        inliers.clear();
        std::fill(q_used.begin(), q_used.end(), false);
        std::fill(d_used.begin(), d_used.end(), false);
        std::size_t q_distinct = 0;
        std::size_t d_distinct = 0;
        for (std::size_t i = 0; i < correspondences.size(); ++i) {
            const auto& c = correspondences[i];
            const auto& qk = query.keypoints[c.query_feature];
            const auto& dk = db.keypoints[c.db_feature];
            const auto [px, py] = t.apply(qk.x, qk.y);
            const double dx = px - dk.x;
            const double dy = py - dk.y;
            if (dx * dx + dy * dy > tol2) continue;
            inliers.push_back(i);
            if (!q_used[c.query_feature]) {
                q_used[c.query_feature] = true;
                ++q_distinct;
            }
            if (!d_used[c.db_feature]) {
                d_used[c.db_feature] = true;
                ++d_distinct;
            }
        }
        // A feature supports a hypothesis at most once on each side.
        const std::size_t count = std::min(q_distinct, d_distinct);
        if (count > best.inlier_count) {
            best.inlier_count = count;
            best.transform = t;
            best.inliers = inliers;
        }
    }
    best.verified = best.inlier_count > params.t_sp;
    return best;
}

std::vector<RerankedEntry> rerank(const RankedList& ranked, const QuantizedImage& query, const ImageLookup& lookup,
                                  const VerifyParams& params) {
    params.validate();
    std::vector<RerankedEntry> entries(ranked.entries.size());
    for (std::size_t r = 0; r < entries.size(); ++r) {
        entries[r].id = ranked.entries[r].id;
        entries[r].score = ranked.entries[r].score;
        entries[r].original_rank = r;
    }
    const std::size_t n_verify = std::min(params.shortlist, entries.size());
    parallel_for(n_verify, params.threads, [&](std::size_t r) {
        const QuantizedImage* db = lookup ? lookup(entries[r].id) : nullptr;
        if (db == nullptr) return;
        const auto corr = tentative_correspondences(query, *db);
        entries[r].verification = verify(corr, query, *db, params);
    });
    std::stable_sort(entries.begin(), entries.end(), [](const RerankedEntry& a, const RerankedEntry& b) {
        const bool va = a.verification.verified;
        const bool vb = b.verification.verified;
        if (va != vb) return va;
        if (va) return a.verification.inlier_count > b.verification.inlier_count;
        return false;
    });
    return entries;
}

std::string dump_verification(const QuantizedImage& query, const QuantizedImage& db,
                              std::span<const Correspondence> correspondences, const VerificationResult& result) {
    using nlohmann::json;
    json j;
    j["query"] = query.id;
    j["db"] = db.id;
    j["inlier_count"] = result.inlier_count;
    j["verified"] = result.verified;
    if (result.transform) {
        const auto& t = *result.transform;
        j["transform"] = {{"scale", t.scale}, {"rotation", t.rotation}, {"tx", t.tx}, {"ty", t.ty}};
    }
    std::vector<bool> is_inlier(correspondences.size(), false);
    for (auto i : result.inliers) {
        if (i < is_inlier.size()) is_inlier[i] = true;
    }
    json corr = json::array();
    for (std::size_t i = 0; i < correspondences.size(); ++i) {
        const auto& c = correspondences[i];
        corr.push_back({{"q", c.query_feature}, {"db", c.db_feature}, {"word", c.word}, {"inlier", bool(is_inlier[i])}});
    }
    j["correspondences"] = std::move(corr);
    return j.dump();
}

}  // namespace elevest
