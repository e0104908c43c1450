#include "elevest/vocab.hpp"

#include "elevest/errors.hpp"
#include "elevest/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace elevest {

namespace {

constexpr std::uint32_t kVocabVersion = 1;

double squared_distance(std::span<const double> a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t checked_dim(std::span<const DescriptorD> points) {
    if (points.empty()) throw ValidationError("k-means needs at least one point");
    const std::size_t dim = points.front().size();
    if (dim == 0) throw ValidationError("k-means points must have positive dimension");
    for (const auto& p : points) {
        if (p.size() != dim) throw ValidationError("k-means points differ in dimension");
    }
    return dim;
}

struct Nearest {
    std::uint32_t word = 0;
    double dist2 = 0.0;
};

Nearest nearest(std::span<const double> x, const std::vector<double>& centroids, std::size_t dim) {
    const std::size_t k = centroids.size() / dim;
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x, centroids.data() + c * dim);
        if (d < best.dist2) best = {static_cast<std::uint32_t>(c), d};
    }
    return best;
}

}  // namespace

void Vocabulary::validate() const {
    if (word_count == 0 || dim == 0) throw ValidationError("vocabulary must have K >= 1 and d >= 1");
    if (centroids.size() != word_count * dim) throw ValidationError("vocabulary centroid block has the wrong size");
    for (double v : centroids) {
        if (!std::isfinite(v)) throw ValidationError("vocabulary centroid is not finite");
    }
    std::set<std::vector<double>> distinct;
    for (std::size_t k = 0; k < word_count; ++k) {
        auto c = centroid(k);
        if (!distinct.emplace(c.begin(), c.end()).second) {
            throw ValidationError("vocabulary has duplicate centroid at word " + std::to_string(k));
        }
    }
}

std::vector<double> kmeans_plus_plus_init(std::span<const DescriptorD> points, std::size_t clusters,
                                          std::uint64_t seed) {
    const std::size_t dim = checked_dim(points);
    if (clusters == 0) throw ValidationError("k-means needs K >= 1");
    if (points.size() < clusters) {
        throw ValidationError("k-means needs at least K points (" + std::to_string(points.size()) + " < " +
                              std::to_string(clusters) + ")");
    }
    std::mt19937_64 rng(seed);
    std::vector<double> centers;
    centers.reserve(clusters * dim);

    const auto first = std::min<std::size_t>(static_cast<std::size_t>(uniform01(rng) * points.size()),
                                             points.size() - 1);
    centers.insert(centers.end(), points[first].begin(), points[first].end());

    std::vector<double> d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers.data());

    while (centers.size() < clusters * dim) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (!(total > 0.0)) throw ValidationError("k-means needs at least K distinct points");
        const double target = uniform01(rng) * total;
        double acc = 0.0;
        std::size_t pick = points.size();
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (d2[i] <= 0.0) continue;
            acc += d2[i];
            pick = i;
            if (acc > target) break;
        }
        centers.insert(centers.end(), points[pick].begin(), points[pick].end());
        const double* c = centers.data() + centers.size() - dim;
        for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], squared_distance(points[i], c));
    }
    return centers;
}

KMeansTrace lloyd_kmeans(std::span<const DescriptorD> points, std::vector<double> initial,
                         const KMeansOptions& opts) {
    const std::size_t dim = checked_dim(points);
    const std::size_t k = opts.clusters;
    if (k == 0 || initial.size() != k * dim) throw ValidationError("initial centroids do not match K * d");

    KMeansTrace trace;
    trace.centroids = std::move(initial);
    const std::size_t n = points.size();
    std::vector<Nearest> near(n);

    auto assign = [&] {
        parallel_for(n, opts.threads, [&](std::size_t i) { near[i] = nearest(points[i], trace.centroids, dim); });
        double objective = 0.0;
        for (const auto& a : near) objective += a.dist2;
        trace.objective.push_back(objective);
    };

    assign();
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        std::vector<double> sums(k * dim, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = near[i].word;
            ++counts[c];
            double* s = sums.data() + c * dim;
            for (std::size_t j = 0; j < dim; ++j) s[j] += points[i][j];
        }

        std::vector<bool> taken(n, false);
        std::vector<double> updated(k * dim);
        for (std::size_t c = 0; c < k; ++c) {
            double* dst = updated.data() + c * dim;
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < dim; ++j) dst[j] = sums[c * dim + j] / static_cast<double>(counts[c]);
                continue;
            }
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i] && near[i].dist2 > far_d) {
                    far_d = near[i].dist2;
                    far = i;
                }
            }
            taken[far] = true;
            std::copy(points[far].begin(), points[far].end(), dst);
        }

        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            movement = std::max(movement, std::sqrt(squared_distance({updated.data() + c * dim, dim},
                                                                     trace.centroids.data() + c * dim)));
        }
        trace.centroids = std::move(updated);
        ++trace.iterations;
        assign();
        if (movement < opts.tol) {
            trace.converged = true;
            break;
        }
    }
    trace.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) trace.assignment[i] = near[i].word;
    return trace;
}

Vocabulary train_kmeans(std::span<const DescriptorD> points, const KMeansOptions& opts, std::string trained_on) {
    auto init = kmeans_plus_plus_init(points, opts.clusters, opts.seed);
    auto trace = lloyd_kmeans(points, std::move(init), opts);

    Vocabulary v;
    v.word_count = opts.clusters;
    v.dim = points.front().size();
    v.centroids = std::move(trace.centroids);
    for (auto& c : v.centroids) c = static_cast<double>(static_cast<float>(c));
    v.trained_on = std::move(trained_on);
    return v;
}

std::uint32_t quantize(const Vocabulary& vocab, std::span<const double> descriptor) {
    if (descriptor.size() != vocab.dim) {
        throw ValidationError("descriptor dimension " + std::to_string(descriptor.size()) +
                              " does not match vocabulary dimension " + std::to_string(vocab.dim));
    }
    return nearest(descriptor, vocab.centroids, vocab.dim).word;
}

std::vector<std::uint32_t> quantize_features(const Vocabulary& vocab, std::span<const LocalFeature> features,
                                             const NormalizationConfig& norm, unsigned threads) {
    std::vector<std::uint32_t> words(features.size());
    parallel_for(features.size(), threads, [&](std::size_t i) {
        words[i] = quantize(vocab, power_normalize(features[i].descriptor, norm));
    });
    return words;
}

void encode_vocabulary(io::ByteWriter& out, const Vocabulary& vocab) {
    out.magic("ELVC");
    out.u32(kVocabVersion);
    out.u32(static_cast<std::uint32_t>(vocab.word_count));
    out.u32(static_cast<std::uint32_t>(vocab.dim));
    out.f32s(std::span<const double>(vocab.centroids));
    out.str16(vocab.trained_on);
}

Vocabulary decode_vocabulary(io::ByteReader& in) {
    in.expect_magic("ELVC");
    const auto version = in.u32();
    if (version != kVocabVersion) throw ParseError("unsupported vocabulary version " + std::to_string(version));
    Vocabulary v;
    v.word_count = in.u32();
    v.dim = in.u32();
    const auto raw = in.f32s(v.word_count * v.dim);
    v.centroids.assign(raw.begin(), raw.end());
    v.trained_on = in.str16();
    v.validate();
    return v;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    io::ByteWriter out;
    encode_vocabulary(out, vocab);
    out.save(path);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    auto in = io::ByteReader::open(path);
    auto v = decode_vocabulary(in);
    if (!in.at_end()) throw ParseError("trailing bytes after vocabulary");
    return v;
}

}  // namespace elevest
