#include "elevest/pipeline.hpp"

#include "elevest/errors.hpp"
#include "elevest/parallel.hpp"

namespace elevest {

std::vector<FeatureSet> load_feature_sets(std::span<const ImageRecord> records, const std::filesystem::path& base_dir,
                                          unsigned threads) {
    std::vector<FeatureSet> out(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        out[i] = load_features(resolve_feature_path(records[i], base_dir), records[i].id);
    });
    return out;
}

std::vector<DescriptorD> collect_descriptors(std::span<const FeatureSet> sets, double region_multiplier,
                                             const NormalizationConfig& norm) {
    std::vector<DescriptorD> out;
    for (const auto& s : sets) {
        for (const auto& f : s.variant(region_multiplier).features) out.push_back(power_normalize(f.descriptor, norm));
    }
    return out;
}

QuantizedImage quantize_image(const FeatureSet& set, const Vocabulary& vocab, const BowSettings& settings,
                              unsigned threads) {
    const auto& feats = set.variant(settings.region_multiplier).features;
    return QuantizedImage::from_features(set.image_id, feats, quantize_features(vocab, feats, settings.norm, threads));
}

BowDatabase BowDatabase::build(std::span<const FeatureSet> sets, std::span<const double> elevations,
                               const Vocabulary& vocab, const BowSettings& settings, unsigned threads) {
    if (sets.size() != elevations.size()) throw ValidationError("feature sets and elevations differ in count");
    BowDatabase db;
    std::vector<IndexedImage> images;
    images.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        auto q = quantize_image(sets[i], vocab, settings, threads);
        images.push_back({q.id, WordHistogram::from_words(q.words), elevations[i]});
        if (!db.images_.emplace(q.id, std::move(q)).second) throw DuplicateIdError(sets[i].image_id);
    }
    db.index_ = InvertedIndex::build(images, vocab.word_count);
    return db;
}

BowDatabase BowDatabase::attach(InvertedIndex index, std::span<const FeatureSet> sets, const Vocabulary& vocab,
                                const BowSettings& settings, unsigned threads) {
    if (index.word_count() != vocab.word_count) {
        throw ValidationError("index has " + std::to_string(index.word_count()) + " words, vocabulary has " +
                              std::to_string(vocab.word_count));
    }
    BowDatabase db;
    db.index_ = std::move(index);
    for (const auto& s : sets) {
        auto q = quantize_image(s, vocab, settings, threads);
        db.images_.emplace(q.id, std::move(q));
    }
    return db;
}

const QuantizedImage* BowDatabase::find(const std::string& id) const {
    auto it = images_.find(id);
    return it == images_.end() ? nullptr : &it->second;
}

ImageLookup BowDatabase::lookup() const {
    return [this](const std::string& id) { return find(id); };
}

ElevationEngine::ElevationEngine(Vocabulary vocab, BowDatabase db, EngineConfig cfg)
    : vocab_(std::move(vocab)), db_(std::move(db)), cfg_(cfg) {
    cfg_.estimator.validate();
    cfg_.verify.t_sp = cfg_.estimator.t_sp;
    cfg_.verify.threads = cfg_.threads;
    cfg_.verify.validate();
}

void ElevationEngine::set_multivocab(ShortVectorModel model, std::vector<DatabaseEntry> database) {
    if (database.empty()) throw ValidationError("multi-vocabulary database is empty");
    mvocab_ = std::move(model);
    mvocab_db_ = std::move(database);
}

void ElevationEngine::set_external(ExternalPredictions predictions) { external_ = std::move(predictions); }

void ElevationEngine::set_secondary(SecondaryKind kind) {
    if (kind == SecondaryKind::MultiVocab && !mvocab_) throw ValidationError("no multi-vocabulary model configured");
    if (kind == SecondaryKind::External && !external_) throw ValidationError("no external predictions configured");
    secondary_ = kind;
}

QuantizedImage ElevationEngine::quantize(const FeatureSet& query) const {
    return quantize_image(query, vocab_, cfg_.bow, cfg_.threads);
}

ElevationEstimate ElevationEngine::estimate_bow(const FeatureSet& query) const {
    const auto q = quantize(query);
    return elevest::estimate_bow(q, db_.index(), db_.lookup(), cfg_.estimator, cfg_.verify);
}

ElevationEstimate ElevationEngine::estimate_mvocab(const FeatureSet& query) const {
    if (!mvocab_) throw NoEstimateError("no multi-vocabulary model configured");
    ShortVector v;
    try {
        v = mvocab_->embed(query, cfg_.threads);
    } catch (const DegenerateError& e) {
        throw NoEstimateError(e.what());
    }
    return elevest::estimate_mvocab(v, mvocab_db_, cfg_.estimator, cfg_.threads);
}

ElevationEstimate ElevationEngine::estimate_external(const std::string& id) const {
    if (!external_) throw NoEstimateError("no external predictions configured");
    return elevest::estimate_external(*external_, id);
}

ElevationEstimate ElevationEngine::estimate(const FeatureSet& query) const {
    const EstimatorFn primary = [&] { return estimate_bow(query); };
    EstimatorFn secondary;
    switch (secondary_) {
        case SecondaryKind::None: break;
        case SecondaryKind::MultiVocab: secondary = [&] { return estimate_mvocab(query); }; break;
        case SecondaryKind::External: secondary = [&] { return estimate_external(query.image_id); }; break;
    }
    return estimate_hybrid(primary, secondary);
}

}  // namespace elevest
