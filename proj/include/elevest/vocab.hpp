#pragma once

#include "elevest/binary_io.hpp"
#include "elevest/features.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace elevest {

/// Visual vocabulary: K centroids in descriptor space, stored row-major.
struct Vocabulary {
    std::size_t word_count = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;
    std::string trained_on;

    std::span<const double> centroid(std::size_t word) const {
        return {centroids.data() + word * dim, dim};
    }
    void validate() const;
};

// Named presets for the word counts used at full scale.
inline constexpr std::size_t kBowPresetWords = 1'000'000;
inline constexpr std::size_t kMultiVocabPresetWords = 8192;

struct KMeansOptions {
    std::size_t clusters = 0;
    std::uint64_t seed = 0;
    std::size_t max_iter = 30;
    double tol = 1e-6;  // stop once no centroid moves farther than this
    unsigned threads = 1;
};

/// Full record of a Lloyd run, mostly for diagnostics and tests.
struct KMeansTrace {
    std::vector<double> centroids;          // clusters * dim
    std::vector<double> objective;          // after each assignment step
    std::vector<std::uint32_t> assignment;  // final assignment
    std::size_t iterations = 0;
    bool converged = false;
};

/// k-means++ seeding; returns clusters * dim initial centroids.
std::vector<double> kmeans_plus_plus_init(std::span<const DescriptorD> points, std::size_t clusters,
                                          std::uint64_t seed);

/// Lloyd iterations from the given initial centroids. An empty cluster is
/// moved onto the point farthest from its current centroid.
KMeansTrace lloyd_kmeans(std::span<const DescriptorD> points, std::vector<double> initial,
                         const KMeansOptions& opts);

/// k-means++ followed by Lloyd. Centroids are rounded to float precision so
/// the in-memory vocabulary equals its serialized form.
Vocabulary train_kmeans(std::span<const DescriptorD> points, const KMeansOptions& opts, std::string trained_on = {});

/// Nearest centroid by squared Euclidean distance; ties go to the lowest id.
std::uint32_t quantize(const Vocabulary& vocab, std::span<const double> descriptor);

/// Normalizes every descriptor with `norm` and quantizes it.
std::vector<std::uint32_t> quantize_features(const Vocabulary& vocab, std::span<const LocalFeature> features,
                                             const NormalizationConfig& norm, unsigned threads = 1);

void encode_vocabulary(io::ByteWriter& out, const Vocabulary& vocab);
Vocabulary decode_vocabulary(io::ByteReader& in);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace elevest
