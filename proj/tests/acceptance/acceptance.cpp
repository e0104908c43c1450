// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "elevest/corpus.hpp"
#include "elevest/errors.hpp"
#include "elevest/evaluate.hpp"
#include "elevest/pipeline.hpp"
#include "elevest/synthetic.hpp"
#include "oracles/brute_lloyd.hpp"
#include "oracles/dense_cosine.hpp"
#include "oracles/jacobi_eigen.hpp"
#include "support/planted.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace elevest;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome inverted_file_oracle() {
    SyntheticCorpusSpec spec;
    spec.places = 20;
    spec.images_per_place = 10;
    spec.seed = 101;
    const auto corpus = generate_synthetic_corpus(spec);
    std::vector<FeatureSet> sets;
    for (const auto& im : corpus.images) sets.push_back(im.features);
    const std::size_t k = 512;
    const auto vocab =
        train_kmeans(collect_descriptors(sets, 1.0, {0.5}), {.clusters = k, .seed = 7, .max_iter = 8, .tol = 1e-6});

    std::vector<IndexedImage> imgs;
    for (const auto& s : sets) {
        imgs.push_back({s.image_id, WordHistogram::from_words(quantize_image(s, vocab, {}).words), 0.0});
    }

    const auto t0 = Clock::now();
    const auto ix = InvertedIndex::build(imgs, k);
    std::vector<RankedList> got;
    for (const auto& im : imgs) got.push_back(ix.query(encode_bow(im.histogram, ix.idf()), imgs.size()));
    const double elapsed = seconds_since(t0);

    std::vector<double> df(k, 0.0);
    for (const auto& im : imgs) {
        for (const auto& b : im.histogram.bins) df[b.word] += 1.0;
    }
    const double n = static_cast<double>(imgs.size());
    auto dense = [&](const WordHistogram& h) {
        std::vector<double> v(k, 0.0);
        for (const auto& b : h.bins) v[b.word] = b.count * std::log(n / df[b.word]);
        return v;
    };
    std::vector<std::pair<std::string, std::vector<double>>> db;
    for (const auto& im : imgs) db.emplace_back(im.id, dense(im.histogram));

    std::size_t mismatches = 0;
    double worst = 0.0;
    for (std::size_t q = 0; q < imgs.size(); ++q) {
        const auto want = oracle::dense_rank(dense(imgs[q].histogram), db, imgs.size());
        if (want.size() != got[q].entries.size()) {
            ++mismatches;
            continue;
        }
        for (std::size_t r = 0; r < want.size(); ++r) {
            worst = std::max(worst, std::abs(want[r].score - got[q].entries[r].score));
            if (want[r].id != got[q].entries[r].id) {
                ++mismatches;
                break;
            }
        }
    }
    const bool pass = mismatches == 0 && worst <= 1e-9 && elapsed < 10.0;
    return {pass, fmt("200 queries, %zu ranking mismatches, max score diff %.2e, %.2fs", mismatches, worst, elapsed)};
}

Outcome kmeans_oracle() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.6);
    const std::vector<std::array<double, 2>> centers = {{{0.0, 0.0}}, {{8.0, 1.0}}, {{3.0, 9.0}}};
    std::vector<DescriptorD> pts;
    for (std::size_t i = 0; i < 20; ++i) {
        for (const auto& c : centers) pts.push_back({c[0] + g(rng), c[1] + g(rng)});
    }
    const KMeansOptions opts{.clusters = 3, .seed = 42, .max_iter = 100, .tol = 1e-12};
    const auto init = kmeans_plus_plus_init(pts, 3, opts.seed);
    const auto trace = lloyd_kmeans(pts, init, opts);
    std::vector<std::vector<double>> init_rows;
    for (std::size_t c = 0; c < 3; ++c) init_rows.push_back({init[2 * c], init[2 * c + 1]});
    const auto ref = oracle::brute_lloyd(pts, init_rows, opts.max_iter, opts.tol);

    double worst = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t j = 0; j < 2; ++j) worst = std::max(worst, std::abs(trace.centroids[2 * c + j] - ref.centroids[c][j]));
    }
    bool monotone = true;
    for (std::size_t i = 1; i < trace.objective.size(); ++i) monotone &= trace.objective[i] <= trace.objective[i - 1];
    return {worst <= 1e-9 && monotone,
            fmt("60 points, max centroid diff %.2e, %zu iterations, objective %s", worst, trace.iterations,
                monotone ? "monotone" : "NOT monotone")};
}

Outcome planted_suite() {
    const auto t0 = Clock::now();
    VerifyParams vp;
    vp.t_sp = 8;
    std::size_t verified_20 = 0;
    std::size_t scale_ok = 0;
    std::size_t verified_5 = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial) {
        const auto p = fixture::make_planted_pair(20, 30, 1000 + trial);
        const auto r = verify(tentative_correspondences(p.query, p.db), p.query, p.db, vp);
        verified_20 += r.verified ? 1 : 0;
        if (r.transform && std::abs(r.transform->scale / p.truth.scale - 1.0) <= 0.05) ++scale_ok;
        const auto n = fixture::make_planted_pair(5, 30, 5000 + trial);
        verified_5 += verify(tentative_correspondences(n.query, n.db), n.query, n.db, vp).verified ? 1 : 0;
    }
    const double elapsed = seconds_since(t0);
    const bool pass = verified_20 == 100 && scale_ok == 100 && verified_5 == 0 && elapsed < 30.0;
    return {pass, fmt("20+30: %zu/100 verified, %zu/100 scale within 5%%; 5+30: %zu/100 verified; %.2fs", verified_20,
                      scale_ok, verified_5, elapsed)};
}

Outcome weight_formula() {
    const std::vector<Neighbor> n = {{"a", 1.0, 1000.0}, {"b", 1.2, 2000.0}, {"c", 1.5, 3000.0}};
    const double e = weighted_knn_estimate(n, 1.4).elevation_m;
    return {std::abs(e - 1333.33) <= 0.01, fmt("estimate %.4f m", e)};
}

Outcome pca_oracle() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    const Eigen::Index n = 50;
    const Eigen::Index dim = 12;
    Eigen::MatrixXd basis(3, dim);
    for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = g(rng);
    Eigen::MatrixXd x(n, dim);
    for (Eigen::Index r = 0; r < n; ++r) {
        Eigen::Vector3d c(4.0 * g(rng), 2.0 * g(rng), g(rng));
        x.row(r) = (basis.transpose() * c).transpose();
        x.row(r).array() += 5.0;
    }
    const auto p = fit_pca(x, 3);
    double recon = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::VectorXd c = x.row(r).transpose() - p.mean;
        recon = std::max(recon, (p.components.transpose() * (p.components * c) - c).norm());
    }

    // Variance check on a full-rank sample against the Jacobi oracle.
    Eigen::MatrixXd y(40, dim);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng) * (1.0 + static_cast<double>(i % dim));
    const auto q = fit_pca(y, static_cast<std::size_t>(dim));
    std::vector<std::vector<double>> rows(40, std::vector<double>(dim));
    for (Eigen::Index r = 0; r < 40; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) rows[r][c] = y(r, c);
    }
    const auto ev = oracle::jacobi_eigenvalues(oracle::covariance(rows));
    double rel = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) rel = std::max(rel, std::abs(q.variances[i] - ev[i]) / ev[i]);
    return {recon <= 1e-6 && rel <= 1e-6, fmt("max reconstruction error %.2e, max relative variance error %.2e", recon, rel)};
}

Outcome end_to_end() {
    const auto t0 = Clock::now();
    SyntheticCorpusSpec spec;
    spec.places = 20;
    spec.images_per_place = 10;
    spec.inlier_fraction = 0.7;
    spec.min_elevation_m = 0.0;
    spec.max_elevation_m = 4782.0;
    spec.seed = 2024;
    const auto corpus = generate_synthetic_corpus(spec);
    std::vector<ImageRecord> records;
    for (const auto& im : corpus.images) records.push_back(im.record);
    const auto split = split_dataset(records, 0.2, 11);

    std::map<std::string, const SyntheticImage*> by_id;
    for (const auto& im : corpus.images) by_id[im.record.id] = &im;
    std::vector<FeatureSet> train;
    std::vector<double> train_elev;
    std::set<std::size_t> train_places;
    for (const auto& id : split.train_ids) {
        train.push_back(by_id[id]->features);
        train_elev.push_back(*by_id[id]->record.elevation_m);
        train_places.insert(by_id[id]->place);
    }

    const auto vocab = train_kmeans(collect_descriptors(train, 1.0, {0.5}), {.clusters = 512, .seed = 1, .max_iter = 10});
    auto db = BowDatabase::build(train, train_elev, vocab, {});
    MultiVocabOptions mo;
    mo.dims = 64;
    mo.seed = 2;
    mo.kmeans_max_iter = 10;
    auto model = ShortVectorModel::train(train, VocabBankConfig::standard(64), mo);
    std::vector<DatabaseEntry> entries;
    for (std::size_t i = 0; i < train.size(); ++i) entries.push_back({train[i].image_id, model.embed(train[i]), train_elev[i]});

    EngineConfig cfg;
    ElevationEngine engine(vocab, std::move(db), cfg);
    engine.set_multivocab(std::move(model), std::move(entries));
    engine.set_secondary(SecondaryKind::MultiVocab);

    const double baseline = estimate_baseline(train_elev).elevation_m;
    std::vector<double> pred;
    std::vector<double> truth;
    std::vector<double> base;
    std::vector<double> bow_only;
    std::vector<double> mvocab_only;
    std::size_t same_place = 0;
    std::size_t fired = 0;
    for (const auto& id : split.test_ids) {
        const auto* im = by_id[id];
        const auto e = engine.estimate(im->features);
        pred.push_back(e.elevation_m);
        bow_only.push_back(engine.estimate_bow(im->features).elevation_m);
        mvocab_only.push_back(engine.estimate_mvocab(im->features).elevation_m);
        truth.push_back(*im->record.elevation_m);
        base.push_back(baseline);
        if (train_places.count(im->place)) {
            ++same_place;
            fired += e.verified ? 1 : 0;
        }
    }
    const double hybrid_rmse = rmse(pred, truth);
    const double base_rmse = rmse(base, truth);
    const double rate = same_place ? static_cast<double>(fired) / static_cast<double>(same_place) : 0.0;
    const double elapsed = seconds_since(t0);
    const bool pass = hybrid_rmse <= 0.5 * base_rmse && rate >= 0.6 && elapsed < 300.0;
    return {pass, fmt("RMSE hybrid %.1f m, bow %.1f m, mvocab %.1f m, baseline %.1f m (hybrid/baseline %.3f); "
                      "verification on %zu/%zu same-place queries (%.0f%%); %.1fs",
                      hybrid_rmse, rmse(bow_only, truth), rmse(mvocab_only, truth), base_rmse, hybrid_rmse / base_rmse,
                      fired, same_place, 100.0 * rate, elapsed)};
}

Outcome dem_planar() {
    DemGrid grid;
    grid.origin = {45.0, 6.0};
    grid.lat_spacing_deg = 0.001;
    grid.lon_spacing_deg = 0.0015;
    grid.rows = 60;
    grid.cols = 80;
    auto plane = [](double lat, double lon) { return 1500.0 + 2000.0 * (lat - 45.0) - 700.0 * (lon - 6.0); };
    for (std::size_t r = 0; r < grid.rows; ++r) {
        for (std::size_t c = 0; c < grid.cols; ++c) {
            grid.samples.push_back(plane(grid.origin.lat + r * grid.lat_spacing_deg, grid.origin.lon + c * grid.lon_spacing_deg));
        }
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ulat(45.0, 45.0 + 59 * 0.001);
    std::uniform_real_distribution<double> ulon(6.0, 6.0 + 79 * 0.0015);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint p{ulat(rng), ulon(rng)};
        worst = std::max(worst, std::abs(dem_lookup(grid, p) - plane(p.lat, p.lon)));
    }
    return {worst <= 1e-9, fmt("1000 interior points, max error %.2e m", worst)};
}

Outcome metric_identities() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const char* what) {
        if (!ok) failed.emplace_back(what);
    };
    const std::vector<double> t = {100.0, 2000.0, 4000.0};
    check(rmse(t, t) == 0.0, "rmse exact");
    const std::vector<double> p2 = {100.0, 200.0};
    const std::vector<double> t2 = {100.0, 100.0};
    check(std::abs(rmse(p2, t2) - 70.711) <= 5e-4, "rmse 70.711");

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 4782.0);
    std::vector<double> tr(100);
    for (auto& v : tr) v = u(rng);
    double mean = 0.0;
    for (double v : tr) mean += v / 100.0;
    double var = 0.0;
    for (double v : tr) var += (v - mean) * (v - mean) / 100.0;
    const std::vector<double> cst(100, 900.0);
    check(std::abs(rmse(cst, tr) - std::sqrt(var + (900.0 - mean) * (900.0 - mean))) <= 1e-9, "rmse identity");

    const std::vector<double> e = {10.0, 50.0, 100.0};
    const std::vector<double> th = {0.0, 50.0, 100.0};
    const auto c = cumulative_accuracy(e, th);
    check(c[1].fraction == 2.0 / 3.0, "cumulative 2/3");
    check(c[0].fraction == 0.0, "cumulative 0");
    check(c[2].fraction == 1.0, "cumulative 1");

    const std::vector<TruthPrediction> exact = {{100.0, 100.0}, {700.0, 700.0}};
    bool zero = true;
    for (const auto& b : bias_by_elevation(exact, 500.0)) zero &= b.mean_error_m == 0.0;
    check(zero, "bias exact");
    const std::vector<TruthPrediction> one = {{100.0, 200.0}, {150.0, 150.0}};
    const auto b1 = bias_by_elevation(one, 500.0);
    check(b1.size() == 1 && b1[0].mean_error_m == 50.0, "bias mean of {+100, 0}");
    const std::vector<TruthPrediction> half = {{100.0, 150.0}, {150.0, 150.0}};
    check(bias_by_elevation(half, 500.0)[0].mean_error_m == 25.0, "bias +25");
    const std::vector<TruthPrediction> two = {{100.0, 0.0}, {600.0, 0.0}};
    const auto b2 = bias_by_elevation(two, 500.0);
    check(b2.size() == 2 && b2[0].count == 1 && b2[1].count == 1, "bias two bins");

    std::string detail = failed.empty() ? "11/11 examples exact" : "failed:";
    for (const auto& f : failed) detail += " [" + f + "]";
    return {failed.empty(), detail};
}

Outcome external_fixture() {
    const auto preds = load_external_predictions(ELEVEST_FIXTURE_DIR "/external_predictions.csv");
    const auto id = preds.rows.begin()->first;
    const double want = preds.rows.begin()->second.elevation_m;
    const EstimatorFn bow = [] { return ElevationEstimate{700.0, EstimateMethod::BowMedian, false, 3}; };
    const EstimatorFn ext = [&] { return estimate_external(preds, id); };
    const auto e = estimate_hybrid(bow, ext);
    return {e.elevation_m == want && e.method == EstimateMethod::Hybrid,
            fmt("%zu rows; unverified BOW for '%s' replaced by %.1f m", preds.rows.size(), id.c_str(), e.elevation_m)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"inverted-file oracle equivalence", inverted_file_oracle},
        {"k-means oracle", kmeans_oracle},
        {"spatial verification planted transforms", planted_suite},
        {"weight formula", weight_formula},
        {"PCA oracle", pca_oracle},
        {"end-to-end synthetic benchmark", end_to_end},
        {"DEM interpolation", dem_planar},
        {"metric identities", metric_identities},
        {"external predictions fixture", external_fixture},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s  %-42s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
