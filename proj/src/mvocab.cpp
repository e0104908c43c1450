#include "elevest/mvocab.hpp"

#include "elevest/binary_io.hpp"
#include "elevest/errors.hpp"
#include "elevest/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace elevest {

namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr double kRankEps = 1e-10;
constexpr double kZeroEmbedding = 1e-12;

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

// Sign convention: the entry of largest magnitude is positive.
void fix_sign(Eigen::MatrixXd& rows, Eigen::Index i) {
    Eigen::Index arg = 0;
    rows.row(i).cwiseAbs().maxCoeff(&arg);
    if (rows(i, arg) < 0.0) rows.row(i) *= -1.0;
}

// Appends unit rows orthogonal to the existing ones until `rows` exist.
void complete_basis(Eigen::MatrixXd& basis, Eigen::Index filled, Eigen::Index rows) {
    const Eigen::Index dim = basis.cols();
    for (Eigen::Index e = 0; e < dim && filled < rows; ++e) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Unit(dim, e);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index r = 0; r < filled; ++r) v -= v.dot(basis.row(r)) * basis.row(r);
        }
        const double n = v.norm();
        if (n < 1e-3) continue;
        basis.row(filled++) = v / n;
    }
}

ShortVector normalized(const Eigen::VectorXd& y) {
    const double n = y.norm();
    if (!(n > kZeroEmbedding)) throw DegenerateError("embedding vanishes after projection");
    ShortVector out;
    out.values.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out.values[static_cast<std::size_t>(i)] = y(i) / n;
    return out;
}

std::vector<std::uint32_t> block_words(const ShortVectorModel::Block& b, const FeatureSet& fs, unsigned threads) {
    const auto& var = fs.variant(b.region.multiplier);
    return quantize_features(b.vocab, var.features, b.norm, threads);
}

void write_block_bow(const WordHistogram& h, const IdfTable& idf, Eigen::Ref<Eigen::VectorXd> dst) {
    dst.setZero();
    if (h.bins.empty()) return;
    const BowVector v = encode_bow(h, idf);
    for (const auto& e : v.entries) dst(e.word) = e.weight;
}

}  // namespace

VocabBankConfig VocabBankConfig::standard(std::size_t words_per_vocab) {
    VocabBankConfig cfg;
    cfg.words_per_vocab = words_per_vocab;
    for (double m : {1.0, 1.5}) {
        for (double beta : {0.4, 0.5, 0.6, 1.0}) cfg.entries.push_back({{m}, {beta}});
    }
    return cfg;
}

void VocabBankConfig::validate() const {
    if (entries.empty()) throw ValidationError("vocabulary bank is empty");
    if (words_per_vocab == 0) throw ValidationError("vocabulary bank needs at least one word per vocabulary");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!(entries[i].norm.beta > 0.0 && entries[i].norm.beta <= 1.0)) {
            throw ValidationError("vocabulary bank beta must lie in (0, 1]");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (entries[i] == entries[j]) throw ValidationError("vocabulary bank entries must be distinct");
        }
    }
}

PcaProjection fit_pca(const Eigen::MatrixXd& samples, std::size_t dims, bool whiten) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index dim = samples.cols();
    const auto want = static_cast<Eigen::Index>(dims);
    if (n == 0 || dim == 0) throw ValidationError("PCA needs a non-empty sample matrix");
    if (want < 1 || want > n || want > dim) {
        throw ValidationError("PCA output dimension " + std::to_string(dims) + " exceeds min(samples, input dim)");
    }

    PcaProjection out;
    out.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd eigvals;
    Eigen::MatrixXd rows(want, dim);
    Eigen::Index filled = 0;
    if (n <= dim) {
        // Gram route: eigenvectors of Xc Xc^T map to covariance eigenvectors.
        const Eigen::MatrixXd gram = centered * centered.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
        const Eigen::VectorXd lambda = es.eigenvalues();
        const double top = std::max(lambda(n - 1), 0.0);
        eigvals.resize(want);
        for (Eigen::Index i = 0; i < want; ++i) {
            const double l = lambda(n - 1 - i);
            eigvals(i) = std::max(l, 0.0) * inv_n;
            if (filled == i && l > kRankEps * std::max(top, 1.0)) {
                rows.row(i) = (centered.transpose() * es.eigenvectors().col(n - 1 - i)).transpose() / std::sqrt(l);
                ++filled;
            }
        }
    } else {
        const Eigen::MatrixXd cov = centered.transpose() * centered * inv_n;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
        const Eigen::VectorXd lambda = es.eigenvalues();
        const double top = std::max(lambda(dim - 1), 0.0);
        eigvals.resize(want);
        for (Eigen::Index i = 0; i < want; ++i) {
            const double l = lambda(dim - 1 - i);
            eigvals(i) = std::max(l, 0.0);
            if (filled == i && l > kRankEps * std::max(top, 1.0)) {
                rows.row(i) = es.eigenvectors().col(dim - 1 - i).transpose();
                ++filled;
            }
        }
    }
    for (Eigen::Index i = 0; i < filled; ++i) fix_sign(rows, i);
    complete_basis(rows, filled, want);

    if (whiten) {
        for (Eigen::Index i = 0; i < filled; ++i) rows.row(i) /= std::sqrt(eigvals(i));
    }
    out.components = std::move(rows);
    out.variances = std::move(eigvals);
    return out;
}

ShortVectorModel ShortVectorModel::train(std::span<const FeatureSet> corpus, const VocabBankConfig& cfg,
                                         const MultiVocabOptions& opts) {
    cfg.validate();
    if (corpus.size() < opts.dims) {
        throw ValidationError("corpus of " + std::to_string(corpus.size()) + " images is smaller than D' = " +
                              std::to_string(opts.dims));
    }
    const std::size_t k = cfg.words_per_vocab;
    const std::size_t n = corpus.size();

    ShortVectorModel model;
    std::vector<std::vector<WordHistogram>> histograms(cfg.entries.size());
    for (std::size_t b = 0; b < cfg.entries.size(); ++b) {
        const auto& entry = cfg.entries[b];
        std::vector<DescriptorD> descriptors;
        for (const auto& fs : corpus) {
            for (const auto& f : fs.variant(entry.region.multiplier).features) {
                descriptors.push_back(power_normalize(f.descriptor, entry.norm));
            }
        }
        KMeansOptions km;
        km.clusters = k;
        km.seed = opts.seed + b;
        km.max_iter = opts.kmeans_max_iter;
        km.tol = opts.kmeans_tol;
        km.threads = opts.threads;
        Block block;
        block.vocab = train_kmeans(descriptors, km,
                                   "mvocab m=" + std::to_string(entry.region.multiplier) +
                                       " beta=" + std::to_string(entry.norm.beta));
        block.region = entry.region;
        block.norm = entry.norm;

        std::vector<std::uint32_t> df(k, 0);
        histograms[b].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            histograms[b][i] = WordHistogram::from_words(block_words(block, corpus[i], opts.threads));
            for (const auto& bin : histograms[b][i].bins) ++df[bin.word];
        }
        block.idf = compute_idf(df, n);
        for (auto& w : block.idf.weights) w = round_to_float(w);
        model.blocks_.push_back(std::move(block));
    }

    const auto input_dim = static_cast<Eigen::Index>(k * cfg.entries.size());
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(n), input_dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t b = 0; b < model.blocks_.size(); ++b) {
            Eigen::VectorXd block(static_cast<Eigen::Index>(k));
            write_block_bow(histograms[b][i], model.blocks_[b].idf, block);
            samples.row(static_cast<Eigen::Index>(i)).segment(static_cast<Eigen::Index>(b * k),
                                                               static_cast<Eigen::Index>(k)) = block.transpose();
        }
    }

    auto pca = fit_pca(samples, opts.dims, opts.whiten);
    model.mean_ = pca.mean.unaryExpr(&round_to_float);
    model.projection_ = pca.components.unaryExpr(&round_to_float);

    model.training_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        model.training_.push_back(
            {corpus[i].image_id, model.project(samples.row(static_cast<Eigen::Index>(i)).transpose())});
    }
    return model;
}

Eigen::VectorXd ShortVectorModel::concatenated(const FeatureSet& features, unsigned threads) const {
    const std::size_t k = blocks_.empty() ? 0 : blocks_.front().vocab.word_count;
    Eigen::VectorXd out(static_cast<Eigen::Index>(k * blocks_.size()));
    bool any_features = false;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& block = blocks_[b];
        if (!features.has_variant(block.region.multiplier)) {
            throw ValidationError("image '" + features.image_id + "' lacks the region variant with multiplier " +
                                  std::to_string(block.region.multiplier));
        }
        const auto words = block_words(block, features, threads);
        any_features = any_features || !words.empty();
        write_block_bow(WordHistogram::from_words(words), block.idf,
                        out.segment(static_cast<Eigen::Index>(b * k), static_cast<Eigen::Index>(k)));
    }
    if (!any_features) throw DegenerateError("image '" + features.image_id + "' has no features");
    return out;
}

ShortVector ShortVectorModel::project(const Eigen::VectorXd& concatenated) const {
    if (concatenated.size() != projection_.cols()) throw ValidationError("concatenated vector has the wrong length");
    return normalized(projection_ * (concatenated - mean_));
}

ShortVector ShortVectorModel::embed(const FeatureSet& features, unsigned threads) const {
    return project(concatenated(features, threads));
}

std::vector<std::uint8_t> ShortVectorModel::serialize() const {
    io::ByteWriter out;
    out.magic("ELMV");
    out.u32(kModelVersion);
    out.u32(static_cast<std::uint32_t>(blocks_.size()));
    for (const auto& b : blocks_) {
        encode_vocabulary(out, b.vocab);
        out.u32(static_cast<std::uint32_t>(b.idf.doc_count));
        out.f32s(std::span<const double>(b.idf.weights));
        out.f32(static_cast<float>(b.region.multiplier));
        out.f32(static_cast<float>(b.norm.beta));
    }
    out.u32(static_cast<std::uint32_t>(dims()));
    out.f32s(std::span<const double>(mean_.data(), static_cast<std::size_t>(mean_.size())));
    for (Eigen::Index r = 0; r < projection_.rows(); ++r) {
        for (Eigen::Index c = 0; c < projection_.cols(); ++c) out.f32(static_cast<float>(projection_(r, c)));
    }
    return out.buffer();
}

void ShortVectorModel::save(const std::filesystem::path& path) const {
    io::ByteWriter out;
    out.bytes(serialize());
    out.save(path);
}

ShortVectorModel ShortVectorModel::load(const std::filesystem::path& path) {
    auto in = io::ByteReader::open(path);
    in.expect_magic("ELMV");
    const auto version = in.u32();
    if (version != kModelVersion) throw ParseError("unsupported mvocab model version " + std::to_string(version));
    const auto count = in.u32();
    ShortVectorModel m;
    std::size_t input_dim = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        Block b;
        b.vocab = decode_vocabulary(in);
        b.idf.doc_count = in.u32();
        const auto idf = in.f32s(b.vocab.word_count);
        b.idf.weights.assign(idf.begin(), idf.end());
        b.region.multiplier = in.f32();
        b.norm.beta = in.f32();
        if (!m.blocks_.empty() && b.vocab.word_count != m.blocks_.front().vocab.word_count) {
            throw ParseError("mvocab vocabularies differ in word count");
        }
        input_dim += b.vocab.word_count;
        m.blocks_.push_back(std::move(b));
    }
    const auto dims = in.u32();
    const auto mean = in.f32s(input_dim);
    m.mean_ = Eigen::Map<const Eigen::VectorXf>(mean.data(), static_cast<Eigen::Index>(input_dim)).cast<double>();
    const auto proj = in.f32s(static_cast<std::size_t>(dims) * input_dim);
    m.projection_ = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                        proj.data(), dims, static_cast<Eigen::Index>(input_dim))
                        .cast<double>();
    if (!in.at_end()) throw ParseError("trailing bytes after mvocab model");
    return m;
}

std::vector<Neighbor> knn_search(std::span<const DatabaseEntry> database, const ShortVector& q, std::size_t k,
                                 unsigned threads) {
    if (database.empty()) throw ValidationError("k-NN search over an empty database");
    if (k == 0) throw ValidationError("k must be >= 1");
    std::vector<double> dist(database.size());
    parallel_for(database.size(), threads, [&](std::size_t i) {
        const auto& v = database[i].vector.values;
        if (v.size() != q.values.size()) throw ValidationError("short vector dimension mismatch");
        double s = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            const double d = v[j] - q.values[j];
            s += d * d;
        }
        dist[i] = std::sqrt(s);
    });
    std::vector<std::size_t> order(database.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (dist[a] != dist[b]) return dist[a] < dist[b];
                          return database[a].id < database[b].id;
                      });
    std::vector<Neighbor> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& e = database[order[i]];
        out.push_back({e.id, dist[order[i]], e.elevation_m});
    }
    return out;
}

}  // namespace elevest
