#pragma once

#include "elevest/bowindex.hpp"
#include "elevest/corpus.hpp"
#include "elevest/estimate.hpp"
#include "elevest/features.hpp"
#include "elevest/geomverify.hpp"
#include "elevest/mvocab.hpp"
#include "elevest/vocab.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace elevest {

/// Which descriptors feed the single large BOW vocabulary.
struct BowSettings {
    double region_multiplier = 1.0;
    NormalizationConfig norm{0.5};
};

std::vector<FeatureSet> load_feature_sets(std::span<const ImageRecord> records, const std::filesystem::path& base_dir,
                                          unsigned threads = 1);

std::vector<DescriptorD> collect_descriptors(std::span<const FeatureSet> sets, double region_multiplier,
                                             const NormalizationConfig& norm);

QuantizedImage quantize_image(const FeatureSet& set, const Vocabulary& vocab, const BowSettings& settings,
                              unsigned threads = 1);

/// Inverted index plus the quantized geometry spatial verification needs.
class BowDatabase {
public:
    static BowDatabase build(std::span<const FeatureSet> sets, std::span<const double> elevations,
                             const Vocabulary& vocab, const BowSettings& settings, unsigned threads = 1);
    /// Pairs a stored index with re-quantized features of its images.
    static BowDatabase attach(InvertedIndex index, std::span<const FeatureSet> sets, const Vocabulary& vocab,
                              const BowSettings& settings, unsigned threads = 1);

    const InvertedIndex& index() const noexcept { return index_; }
    const QuantizedImage* find(const std::string& id) const;
    ImageLookup lookup() const;

private:
    InvertedIndex index_;
    std::unordered_map<std::string, QuantizedImage> images_;
};

enum class SecondaryKind { None, MultiVocab, External };

struct EngineConfig {
    EstimatorParams estimator;
    VerifyParams verify;
    BowSettings bow;
    unsigned threads = 1;
};

/// BOW retrieval with spatial verification, optionally backed by the
/// multi-vocabulary estimator or by external predictions.
class ElevationEngine {
public:
    ElevationEngine(Vocabulary vocab, BowDatabase db, EngineConfig cfg);

    void set_multivocab(ShortVectorModel model, std::vector<DatabaseEntry> database);
    void set_external(ExternalPredictions predictions);
    void set_secondary(SecondaryKind kind);
    SecondaryKind secondary() const noexcept { return secondary_; }

    ElevationEstimate estimate_bow(const FeatureSet& query) const;
    ElevationEstimate estimate_mvocab(const FeatureSet& query) const;
    ElevationEstimate estimate_external(const std::string& id) const;
    /// The hybrid combiner over the configured secondary.
    ElevationEstimate estimate(const FeatureSet& query) const;

    QuantizedImage quantize(const FeatureSet& query) const;
    const BowDatabase& database() const noexcept { return db_; }
    const Vocabulary& vocabulary() const noexcept { return vocab_; }
    const EngineConfig& config() const noexcept { return cfg_; }

private:
    Vocabulary vocab_;
    BowDatabase db_;
    EngineConfig cfg_;
    SecondaryKind secondary_ = SecondaryKind::None;
    std::optional<ShortVectorModel> mvocab_;
    std::vector<DatabaseEntry> mvocab_db_;
    std::optional<ExternalPredictions> external_;
};

}  // namespace elevest
