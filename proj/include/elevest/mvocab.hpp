#pragma once

#include "elevest/bowindex.hpp"
#include "elevest/features.hpp"
#include "elevest/vocab.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace elevest {

struct VocabBankEntry {
    RegionScaleConfig region;
    NormalizationConfig norm;

    bool operator==(const VocabBankEntry&) const = default;
};

struct VocabBankConfig {
    std::vector<VocabBankEntry> entries;
    std::size_t words_per_vocab = kMultiVocabPresetWords;

    /// Region multipliers {1.0, 1.5} crossed with beta {0.4, 0.5, 0.6, 1.0}.
    static VocabBankConfig standard(std::size_t words_per_vocab = kMultiVocabPresetWords);
    void validate() const;
};

/// Principal subspace of a sample matrix (one sample per row).
struct PcaProjection {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // dims x input_dim, orthonormal rows unless whitened
    Eigen::VectorXd variances;   // eigenvalues of the 1/N covariance, descending
};

/// Top-`dims` principal components. Rank-deficient data is completed with an
/// orthonormal basis of the remaining space so rows stay orthonormal.
PcaProjection fit_pca(const Eigen::MatrixXd& samples, std::size_t dims, bool whiten = false);

struct ShortVector {
    std::vector<double> values;
};

struct MultiVocabOptions {
    std::size_t dims = 128;
    std::uint64_t seed = 0;
    bool whiten = false;
    std::size_t kmeans_max_iter = 30;
    double kmeans_tol = 1e-6;
    unsigned threads = 1;
};

class ShortVectorModel {
public:
    struct Block {
        Vocabulary vocab;
        IdfTable idf;
        RegionScaleConfig region;
        NormalizationConfig norm;
    };

    struct TrainingEmbedding {
        std::string id;
        ShortVector vector;
    };

    /// Trains one vocabulary per bank entry, builds the per-block BOW
    /// vectors of the corpus and fits the joint reduction.
    static ShortVectorModel train(std::span<const FeatureSet> corpus, const VocabBankConfig& cfg,
                                  const MultiVocabOptions& opts);

    /// Concatenation of per-block unit-norm BOW vectors.
    Eigen::VectorXd concatenated(const FeatureSet& features, unsigned threads = 1) const;
    ShortVector project(const Eigen::VectorXd& concatenated) const;
    ShortVector embed(const FeatureSet& features, unsigned threads = 1) const;

    std::size_t dims() const noexcept { return static_cast<std::size_t>(projection_.rows()); }
    std::size_t input_dim() const noexcept { return static_cast<std::size_t>(projection_.cols()); }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& projection() const noexcept { return projection_; }
    /// Embeddings of the training corpus; empty for a model read from disk.
    const std::vector<TrainingEmbedding>& training_embeddings() const noexcept { return training_; }

    std::vector<std::uint8_t> serialize() const;
    void save(const std::filesystem::path& path) const;
    static ShortVectorModel load(const std::filesystem::path& path);

private:
    std::vector<Block> blocks_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd projection_;
    std::vector<TrainingEmbedding> training_;
};

inline ShortVectorModel train_reduction(std::span<const FeatureSet> corpus, const VocabBankConfig& cfg,
                                        const MultiVocabOptions& opts) {
    return ShortVectorModel::train(corpus, cfg, opts);
}

struct DatabaseEntry {
    std::string id;
    ShortVector vector;
    double elevation_m = 0.0;
};

struct Neighbor {
    std::string id;
    double dissimilarity = 0.0;
    double elevation_m = 0.0;
};

/// Euclidean k-NN in the reduced space, ascending, ties by id.
std::vector<Neighbor> knn_search(std::span<const DatabaseEntry> database, const ShortVector& q, std::size_t k,
                                 unsigned threads = 1);

}  // namespace elevest
