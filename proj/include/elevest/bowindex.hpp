#pragma once

#include "elevest/features.hpp"
#include "elevest/vocab.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace elevest {

struct IdfTable {
    std::vector<double> weights;
    std::size_t doc_count = 0;

    std::size_t word_count() const noexcept { return weights.size(); }
};

/// ln(N / n_w) for seen words, ln(N + 1) for unseen ones.
IdfTable compute_idf(std::span<const std::uint32_t> word_document_counts, std::size_t doc_count);

/// Raw term counts, sorted by word id.
struct WordHistogram {
    struct Bin {
        std::uint32_t word;
        std::uint32_t count;
    };
    std::vector<Bin> bins;

    static WordHistogram from_words(std::span<const std::uint32_t> words);
    std::size_t total() const;
};

struct BowEntry {
    std::uint32_t word;
    double weight;
};

/// Unit-norm sparse tf-idf vector. `degenerate` marks an image whose words
/// all carry zero idf, leaving nothing to encode.
struct BowVector {
    std::vector<BowEntry> entries;
    bool degenerate = false;

    double dot(const BowVector& other) const;
};

BowVector encode_bow(const WordHistogram& histogram, const IdfTable& idf);
BowVector encode_bow(std::span<const std::uint32_t> words, const IdfTable& idf);
BowVector encode_bow(std::span<const LocalFeature> features, const Vocabulary& vocab, const IdfTable& idf,
                     const NormalizationConfig& norm, unsigned threads = 1);

struct IndexedImage {
    std::string id;
    WordHistogram histogram;
    std::optional<double> elevation_m;
};

struct RankedEntry {
    std::string id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
};

class InvertedIndex {
public:
    struct Posting {
        std::uint32_t image;  // ordinal into the image table
        double weight;
    };

    InvertedIndex() = default;

    /// idf is computed from the indexed images themselves.
    static InvertedIndex build(std::span<const IndexedImage> images, std::size_t word_count);
    /// Uses a caller-supplied idf, e.g. to compare scores across corpora.
    static InvertedIndex build(std::span<const IndexedImage> images, IdfTable idf);

    /// Cosine scores against every image that shares a word with `q`; best
    /// `top_n` first, ties by image id.
    RankedList query(const BowVector& q, std::size_t top_n, std::string query_id = {}) const;

    const IdfTable& idf() const noexcept { return idf_; }
    std::size_t word_count() const noexcept { return postings_.size(); }
    std::size_t image_count() const noexcept { return ids_.size(); }
    const std::string& image_id(std::size_t ordinal) const { return ids_.at(ordinal); }
    double elevation(std::size_t ordinal) const { return elevations_.at(ordinal); }
    std::optional<double> elevation_of(const std::string& id) const;
    const std::vector<Posting>& postings(std::uint32_t word) const { return postings_.at(word); }
    std::size_t posting_total() const;

    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    IdfTable idf_;
    std::vector<std::string> ids_;
    std::vector<double> elevations_;
    std::unordered_map<std::string, std::uint32_t> ordinal_;
    std::vector<std::vector<Posting>> postings_;
};

inline InvertedIndex build_index(std::span<const IndexedImage> images, std::size_t word_count) {
    return InvertedIndex::build(images, word_count);
}

}  // namespace elevest
