#include "cli_commands.hpp"

#include "elevest/corpus.hpp"
#include "elevest/errors.hpp"
#include "elevest/evaluate.hpp"
#include "elevest/parallel.hpp"
#include "elevest/pipeline.hpp"
#include "elevest/synthetic.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

namespace elevest::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& require(const fs::path& p, const char* flag) {
    if (p.empty()) throw ValidationError(std::string("missing required option ") + flag);
    return p;
}

const fs::path& require_file(const fs::path& p, const char* flag) {
    require(p, flag);
    if (!fs::is_regular_file(p)) throw IoError(std::string(flag) + ": no such file '" + p.string() + "'");
    return p;
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write '" + p.string() + "'");
}

struct Corpus {
    std::vector<ImageRecord> records;
    std::vector<FeatureSet> features;
};

Corpus load_corpus(const fs::path& manifest, const char* flag, unsigned threads) {
    require_file(manifest, flag);
    Corpus c;
    c.records = load_manifest(manifest);
    c.features = load_feature_sets(c.records, manifest.parent_path(), threads);
    spdlog::info("loaded {} images from {}", c.records.size(), manifest.string());
    return c;
}

std::vector<double> elevations_of(const std::vector<ImageRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!r.elevation_m) throw ValidationError("record '" + r.id + "' has no elevation_m");
        out.push_back(*r.elevation_m);
    }
    return out;
}

// Seeded subsample so vocabulary training stays bounded on large corpora.
std::vector<DescriptorD> subsample(std::vector<DescriptorD> pts, std::size_t cap, std::uint64_t seed) {
    if (cap == 0 || pts.size() <= cap) return pts;
    std::mt19937_64 rng(seed);
    std::shuffle(pts.begin(), pts.end(), rng);
    pts.resize(cap);
    return pts;
}

}  // namespace

void apply_config_file(const fs::path& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw IoError("--config: cannot open '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("--config '" + path.string() + "': " + e.what());
    }
    if (!j.is_object()) throw ParseError("--config '" + path.string() + "' must hold a JSON object");

    auto p = [](const json& v) { return fs::path(v.get<std::string>()); };
    const std::map<std::string, std::function<void(const json&)>> setters = {
        {"manifest", [&](const json& v) { c.manifest = p(v); }},
        {"train-manifest", [&](const json& v) { c.train_manifest = p(v); }},
        {"vocab", [&](const json& v) { c.vocab = p(v); }},
        {"index", [&](const json& v) { c.index = p(v); }},
        {"mvocab-model", [&](const json& v) { c.mvocab_model = p(v); }},
        {"dem", [&](const json& v) { c.dem = p(v); }},
        {"external-predictions", [&](const json& v) { c.external_predictions = p(v); }},
        {"predictions", [&](const json& v) { c.predictions = p(v); }},
        {"out", [&](const json& v) { c.out = p(v); }},
        {"seed", [&](const json& v) { c.seed = v.get<std::uint64_t>(); }},
        {"threads", [&](const json& v) { c.threads = v.get<unsigned>(); }},
        {"top-k", [&](const json& v) { c.top_k = v.get<std::size_t>(); }},
        {"t-sp", [&](const json& v) { c.t_sp = v.get<std::size_t>(); }},
        {"w-t", [&](const json& v) { c.w_t = v.get<double>(); }},
        {"shortlist", [&](const json& v) { c.shortlist = v.get<std::size_t>(); }},
        {"reproj-tol", [&](const json& v) { c.reproj_tol = v.get<double>(); }},
        {"secondary", [&](const json& v) { c.secondary = v.get<std::string>(); }},
        {"words", [&](const json& v) { c.words = v.get<std::size_t>(); }},
        {"mvocab-words", [&](const json& v) { c.mvocab_words = v.get<std::size_t>(); }},
        {"dims", [&](const json& v) { c.dims = v.get<std::size_t>(); }},
        {"kmeans-iter", [&](const json& v) { c.kmeans_iter = v.get<std::size_t>(); }},
        {"max-descriptors", [&](const json& v) { c.max_descriptors = v.get<std::size_t>(); }},
        {"whiten", [&](const json& v) { c.whiten = v.get<bool>(); }},
        {"test-fraction", [&](const json& v) { c.test_fraction = v.get<double>(); }},
        {"threshold-step", [&](const json& v) { c.threshold_step = v.get<double>(); }},
        {"bias-bin-width", [&](const json& v) { c.bias_bin_width = v.get<double>(); }},
        {"places", [&](const json& v) { c.places = v.get<std::size_t>(); }},
        {"images-per-place", [&](const json& v) { c.images_per_place = v.get<std::size_t>(); }},
        {"features-per-image", [&](const json& v) { c.features_per_image = v.get<std::size_t>(); }},
        {"inlier-fraction", [&](const json& v) { c.inlier_fraction = v.get<double>(); }},
    };
    for (const auto& [key, value] : j.items()) {
        std::string k = key;
        std::replace(k.begin(), k.end(), '_', '-');
        auto it = setters.find(k);
        if (it == setters.end()) throw ValidationError("--config: unknown key '" + key + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ValidationError("--config: bad value for '" + key + "': " + e.what());
        }
    }
}

int cmd_synth(const RunConfig& cfg) {
    require(cfg.out, "--out");
    SyntheticCorpusSpec spec;
    spec.places = cfg.places;
    spec.images_per_place = cfg.images_per_place;
    spec.features_per_image = cfg.features_per_image;
    spec.inlier_fraction = cfg.inlier_fraction;
    spec.seed = cfg.seed;
    const auto corpus = generate_synthetic_corpus(spec);
    write_synthetic_corpus(corpus, cfg.out);
    spdlog::info("wrote {} synthetic images to {}", corpus.images.size(), cfg.out.string());
    return 0;
}

int cmd_split(const RunConfig& cfg) {
    require_file(cfg.manifest, "--manifest");
    require(cfg.out, "--out");
    const auto records = load_manifest(cfg.manifest);
    const auto split = split_dataset(records, cfg.test_fraction, cfg.seed);
    fs::create_directories(cfg.out);
    const fs::path base = fs::absolute(cfg.manifest).parent_path();
    const fs::path out_abs = fs::absolute(cfg.out);

    std::map<std::string, ImageRecord> by_id;
    for (auto r : records) {
        if (r.feature_path) {
            const fs::path fp(*r.feature_path);
            if (!fp.is_absolute()) r.feature_path = fs::relative(base / fp, out_abs).generic_string();
        }
        by_id.emplace(r.id, std::move(r));
    }
    auto emit = [&](const std::vector<std::string>& ids, const char* name) {
        std::vector<ImageRecord> rs;
        for (const auto& id : ids) rs.push_back(by_id.at(id));
        write_manifest(cfg.out / name, rs);
    };
    emit(split.train_ids, "train.jsonl");
    emit(split.test_ids, "test.jsonl");
    spdlog::info("split {} images: {} train, {} test", records.size(), split.train_ids.size(), split.test_ids.size());
    return 0;
}

int cmd_annotate(const RunConfig& cfg) {
    require_file(cfg.manifest, "--manifest");
    require_file(cfg.dem, "--dem");
    require(cfg.out, "--out");
    const auto records = load_manifest(cfg.manifest);
    const auto grid = load_esri_ascii(cfg.dem);
    const auto result = annotate_elevations(records, grid);
    if (result.missing_geo > 0) spdlog::warn("{} images have no geolocation; left unannotated", result.missing_geo);
    write_manifest(cfg.out, result.records);
    spdlog::info("annotated {} images", records.size() - result.missing_geo);
    return 0;
}

int cmd_train_vocab(const RunConfig& cfg) {
    require(cfg.out, "--out");
    const unsigned threads = resolve_threads(cfg.threads);
    const auto corpus = load_corpus(cfg.manifest, "--manifest", threads);
    const BowSettings bow;
    auto pts = subsample(collect_descriptors(corpus.features, bow.region_multiplier, bow.norm), cfg.max_descriptors,
                         cfg.seed);
    spdlog::info("clustering {} descriptors into {} words", pts.size(), cfg.words);
    KMeansOptions opts;
    opts.clusters = cfg.words;
    opts.seed = cfg.seed;
    opts.max_iter = cfg.kmeans_iter;
    opts.threads = threads;
    const auto vocab = train_kmeans(pts, opts, cfg.manifest.filename().string());
    save_vocabulary(cfg.out, vocab);
    return 0;
}

int cmd_build_index(const RunConfig& cfg) {
    require(cfg.out, "--out");
    const unsigned threads = resolve_threads(cfg.threads);
    const auto vocab = load_vocabulary(require_file(cfg.vocab, "--vocab"));
    const auto corpus = load_corpus(cfg.manifest, "--manifest", threads);
    const auto db = BowDatabase::build(corpus.features, elevations_of(corpus.records), vocab, {}, threads);
    db.index().save(cfg.out);
    spdlog::info("indexed {} images, {} postings", db.index().image_count(), db.index().posting_total());
    return 0;
}

int cmd_train_mvocab(const RunConfig& cfg) {
    require(cfg.out, "--out");
    const unsigned threads = resolve_threads(cfg.threads);
    const auto corpus = load_corpus(cfg.manifest, "--manifest", threads);
    MultiVocabOptions opts;
    opts.dims = cfg.dims;
    opts.seed = cfg.seed;
    opts.whiten = cfg.whiten;
    opts.kmeans_max_iter = cfg.kmeans_iter;
    opts.threads = threads;
    const auto model = ShortVectorModel::train(corpus.features, VocabBankConfig::standard(cfg.mvocab_words), opts);
    model.save(cfg.out);
    spdlog::info("trained {} vocabularies, {} -> {} dimensions", model.blocks().size(), model.input_dim(), model.dims());
    return 0;
}

int cmd_estimate(const RunConfig& cfg) {
    require(cfg.out, "--out");
    const unsigned threads = resolve_threads(cfg.threads);
    auto index = InvertedIndex::load(require_file(cfg.index, "--index"));
    auto vocab = load_vocabulary(require_file(cfg.vocab, "--vocab"));
    const auto train = load_corpus(cfg.train_manifest, "--train-manifest", threads);
    const auto queries = load_corpus(cfg.manifest, "--manifest", threads);

    EngineConfig ec;
    ec.estimator = {cfg.t_sp, cfg.top_k, cfg.w_t};
    ec.estimator.validate();
    ec.verify.t_sp = cfg.t_sp;
    ec.verify.shortlist = cfg.shortlist;
    ec.verify.reproj_tol = cfg.reproj_tol;
    ec.verify.threads = threads;
    ec.threads = threads;

    std::vector<double> index_elev;
    for (std::size_t i = 0; i < index.image_count(); ++i) index_elev.push_back(index.elevation(i));
    const double baseline = estimate_baseline(index_elev).elevation_m;

    auto db = BowDatabase::attach(std::move(index), train.features, vocab, ec.bow, threads);
    ElevationEngine engine(std::move(vocab), std::move(db), ec);

    if (cfg.secondary == "mvocab") {
        auto model = ShortVectorModel::load(require_file(cfg.mvocab_model, "--mvocab-model"));
        const auto elev = elevations_of(train.records);
        std::vector<DatabaseEntry> entries(train.features.size());
        parallel_for(entries.size(), threads, [&](std::size_t i) {
            entries[i] = {train.records[i].id, model.embed(train.features[i]), elev[i]};
        });
        engine.set_multivocab(std::move(model), std::move(entries));
        engine.set_secondary(SecondaryKind::MultiVocab);
    } else if (cfg.secondary == "external") {
        engine.set_external(load_external_predictions(require_file(cfg.external_predictions, "--external-predictions")));
        engine.set_secondary(SecondaryKind::External);
    } else if (!cfg.secondary.empty()) {
        throw ValidationError("--secondary must be 'mvocab' or 'external', got '" + cfg.secondary + "'");
    }

    std::vector<PredictionRow> rows;
    std::size_t verified = 0;
    for (const auto& q : queries.features) {
        ElevationEstimate e;
        try {
            e = engine.estimate(q);
        } catch (const NoEstimateError& err) {
            spdlog::warn("{}: {}; using the training mean", q.image_id, err.what());
            e = {baseline, EstimateMethod::Baseline, false, 0};
        }
        verified += e.verified ? 1 : 0;
        spdlog::debug("{}: {:.1f} m ({})", q.image_id, e.elevation_m, method_name(e.method));
        rows.push_back({q.image_id, e.elevation_m, std::string(method_name(e.method))});
    }
    if (cfg.out.has_parent_path()) fs::create_directories(cfg.out.parent_path());
    write_predictions(cfg.out, rows);
    spdlog::info("estimated {} images, {} spatially verified", rows.size(), verified);
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    require(cfg.out, "--out");
    const auto preds = load_external_predictions(require_file(cfg.predictions, "--predictions"));
    const auto truth = load_manifest(require_file(cfg.manifest, "--manifest"));

    std::vector<EvalSample> samples;
    for (const auto& r : truth) {
        auto it = preds.rows.find(r.id);
        if (it == preds.rows.end()) {
            spdlog::warn("no prediction for '{}'", r.id);
            continue;
        }
        if (!r.elevation_m) throw ValidationError("ground truth for '" + r.id + "' has no elevation_m");
        samples.push_back({r.id, *r.elevation_m, it->second.elevation_m, it->second.method});
    }
    for (const auto& [id, p] : preds.rows) {
        if (std::none_of(truth.begin(), truth.end(), [&](const ImageRecord& r) { return r.id == id; })) {
            spdlog::warn("prediction for '{}' has no ground truth", id);
        }
    }

    std::optional<double> baseline;
    if (!cfg.train_manifest.empty()) {
        const auto train = load_manifest(require_file(cfg.train_manifest, "--train-manifest"));
        baseline = estimate_baseline(elevations_of(train)).elevation_m;
    }
    const EvalConfig ec{cfg.threshold_step, cfg.bias_bin_width};
    const auto report = evaluate_samples(cfg.predictions.stem().string(), samples, ec, baseline);

    write_text(cfg.out, report.to_json() + "\n");
    fs::path stem = cfg.out;
    stem.replace_extension();
    write_text(stem.string() + ".txt", report.to_text());
    write_text(stem.string() + "_cumulative.csv", report.cumulative_csv());
    write_text(stem.string() + "_bias.csv", report.bias_csv());
    std::cout << report.to_text();
    return 0;
}

}  // namespace elevest::cli
