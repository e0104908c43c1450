#include "elevest/bowindex.hpp"

#include "elevest/binary_io.hpp"
#include "elevest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace elevest {

namespace {

constexpr std::uint32_t kIndexVersion = 1;

}  // namespace

IdfTable compute_idf(std::span<const std::uint32_t> word_document_counts, std::size_t doc_count) {
    if (doc_count == 0) throw ValidationError("idf needs doc_count >= 1");
    IdfTable t;
    t.doc_count = doc_count;
    t.weights.resize(word_document_counts.size());
    const double n = static_cast<double>(doc_count);
    for (std::size_t w = 0; w < word_document_counts.size(); ++w) {
        const auto nw = word_document_counts[w];
        if (nw > doc_count) {
            throw ValidationError("word " + std::to_string(w) + " occurs in " + std::to_string(nw) + " of " +
                                  std::to_string(doc_count) + " documents");
        }
        t.weights[w] = nw == 0 ? std::log(n + 1.0) : std::log(n / static_cast<double>(nw));
    }
    return t;
}

WordHistogram WordHistogram::from_words(std::span<const std::uint32_t> words) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (auto w : words) ++counts[w];
    WordHistogram h;
    h.bins.reserve(counts.size());
    for (auto [w, c] : counts) h.bins.push_back({w, c});
    return h;
}

std::size_t WordHistogram::total() const {
    std::size_t s = 0;
    for (const auto& b : bins) s += b.count;
    return s;
}

double BowVector::dot(const BowVector& other) const {
    double s = 0.0;
    auto a = entries.begin();
    auto b = other.entries.begin();
    while (a != entries.end() && b != other.entries.end()) {
        if (a->word < b->word) {
            ++a;
        } else if (b->word < a->word) {
            ++b;
        } else {
            s += a->weight * b->weight;
            ++a;
            ++b;
        }
    }
    return s;
}

BowVector encode_bow(const WordHistogram& histogram, const IdfTable& idf) {
    if (histogram.bins.empty()) throw DegenerateError("empty image: no features to encode");
    BowVector v;
    double norm = 0.0;
    for (const auto& b : histogram.bins) {
        if (b.word >= idf.word_count()) {
            throw ValidationError("word id " + std::to_string(b.word) + " outside the idf table");
        }
        const double w = static_cast<double>(b.count) * idf.weights[b.word];
        if (w > 0.0) {
            v.entries.push_back({b.word, w});
            norm += w * w;
        }
    }
    if (v.entries.empty()) {
        v.degenerate = true;
        return v;
    }
    norm = std::sqrt(norm);
    for (auto& e : v.entries) e.weight /= norm;
    return v;
}

BowVector encode_bow(std::span<const std::uint32_t> words, const IdfTable& idf) {
    return encode_bow(WordHistogram::from_words(words), idf);
}

BowVector encode_bow(std::span<const LocalFeature> features, const Vocabulary& vocab, const IdfTable& idf,
                     const NormalizationConfig& norm, unsigned threads) {
    if (features.empty()) throw DegenerateError("empty image: no features to encode");
    const auto words = quantize_features(vocab, features, norm, threads);
    return encode_bow(words, idf);
}

InvertedIndex InvertedIndex::build(std::span<const IndexedImage> images, std::size_t word_count) {
    std::vector<std::uint32_t> df(word_count, 0);
    for (const auto& img : images) {
        for (const auto& b : img.histogram.bins) {
            if (b.word >= word_count) throw ValidationError("word id outside the vocabulary in image '" + img.id + "'");
            ++df[b.word];
        }
    }
    IdfTable idf;
    if (images.empty()) {
        idf.weights.assign(word_count, 0.0);
    } else {
        idf = compute_idf(df, images.size());
    }
    return build(images, std::move(idf));
}

InvertedIndex InvertedIndex::build(std::span<const IndexedImage> images, IdfTable idf) {
    InvertedIndex ix;
    ix.postings_.resize(idf.word_count());
    ix.idf_ = std::move(idf);
    ix.ids_.reserve(images.size());
    for (const auto& img : images) {
        if (!img.elevation_m) throw ValidationError("image '" + img.id + "' has no elevation");
        const auto ordinal = static_cast<std::uint32_t>(ix.ids_.size());
        if (!ix.ordinal_.emplace(img.id, ordinal).second) throw DuplicateIdError(img.id);
        ix.ids_.push_back(img.id);
        ix.elevations_.push_back(*img.elevation_m);
        if (img.histogram.bins.empty()) continue;
        const BowVector v = encode_bow(img.histogram, ix.idf_);
        for (const auto& e : v.entries) ix.postings_[e.word].push_back({ordinal, e.weight});
    }
    return ix;
}

RankedList InvertedIndex::query(const BowVector& q, std::size_t top_n, std::string query_id) const {
    if (top_n == 0) throw ValidationError("top_n must be >= 1");
    RankedList out;
    out.query_id = std::move(query_id);

    std::vector<double> acc(ids_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> seen(ids_.size(), false);
    for (const auto& e : q.entries) {
        if (e.word >= postings_.size()) continue;
        for (const auto& p : postings_[e.word]) {
            if (!seen[p.image]) {
                seen[p.image] = true;
                touched.push_back(p.image);
            }
            acc[p.image] += e.weight * p.weight;
        }
    }
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return ids_[a] < ids_[b];
    };
    const std::size_t keep = std::min(top_n, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(keep), touched.end(), better);
    out.entries.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto o = touched[i];
        out.entries.push_back({ids_[o], std::clamp(acc[o], 0.0, 1.0)});
    }
    return out;
}

std::optional<double> InvertedIndex::elevation_of(const std::string& id) const {
    auto it = ordinal_.find(id);
    if (it == ordinal_.end()) return std::nullopt;
    return elevations_[it->second];
}

std::size_t InvertedIndex::posting_total() const {
    std::size_t n = 0;
    for (const auto& p : postings_) n += p.size();
    return n;
}

void InvertedIndex::save(const std::filesystem::path& path) const {
    io::ByteWriter out;
    out.magic("ELIX");
    out.u32(kIndexVersion);
    out.u32(static_cast<std::uint32_t>(postings_.size()));
    out.u32(static_cast<std::uint32_t>(ids_.size()));
    out.f32s(std::span<const double>(idf_.weights));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        out.str16(ids_[i]);
        out.f32(static_cast<float>(elevations_[i]));
    }
    for (const auto& list : postings_) {
        out.u32(static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            out.u32(p.image);
            out.f32(static_cast<float>(p.weight));
        }
    }
    out.save(path);
}

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    auto in = io::ByteReader::open(path);
    in.expect_magic("ELIX");
    const auto version = in.u32();
    if (version != kIndexVersion) throw ParseError("unsupported index version " + std::to_string(version));
    const auto k = in.u32();
    const auto n = in.u32();

    InvertedIndex ix;
    const auto idf = in.f32s(k);
    ix.idf_.weights.assign(idf.begin(), idf.end());
    ix.idf_.doc_count = n;
    for (std::uint32_t i = 0; i < n; ++i) {
        auto id = in.str16();
        const double elevation = in.f32();
        if (!ix.ordinal_.emplace(id, i).second) throw DuplicateIdError(id);
        ix.ids_.push_back(std::move(id));
        ix.elevations_.push_back(elevation);
    }
    ix.postings_.resize(k);
    for (auto& list : ix.postings_) {
        const auto len = in.u32();
        list.reserve(len);
        for (std::uint32_t j = 0; j < len; ++j) {
            const auto image = in.u32();
            if (image >= n) throw ParseError("posting refers to image ordinal " + std::to_string(image));
            list.push_back({image, static_cast<double>(in.f32())});
        }
    }
    if (!in.at_end()) throw ParseError("trailing bytes after index");
    return ix;
}

}  // namespace elevest
