// elevest: estimate where in the mountains a photo was taken, in meters.

#include "cli_commands.hpp"

#include "elevest/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <functional>
#include <string_view>

namespace {

using elevest::cli::RunConfig;

void setup_logging(bool verbose) {
    auto logger = spdlog::stderr_color_mt("elevest");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("ELEVEST_LOG")) spdlog::set_level(spdlog::level::from_str(env));
    if (verbose) spdlog::set_level(spdlog::level::debug);
}

// The config file is applied before flag parsing so explicit flags win.
std::string find_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string_view a = argv[i];
        if (a == "--config" && i + 1 < argc) return argv[i + 1];
        if (a.starts_with("--config=")) return std::string(a.substr(9));
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    bool verbose = false;
    std::string config_path;

    CLI::App app{"Elevation estimation from local image features"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON file with option defaults");
        c->add_option("--seed", cfg.seed, "Random seed");
        c->add_option("--threads", cfg.threads, "Worker threads (0: all cores)");
        c->add_flag("--verbose,-v", verbose, "Debug logging");
        c->add_option("--out", cfg.out, "Output path");
    };
    auto add_manifest = [&](CLI::App* c) { c->add_option("--manifest", cfg.manifest, "Image manifest (JSONL)"); };
    auto add_kmeans = [&](CLI::App* c) {
        c->add_option("--kmeans-iter", cfg.kmeans_iter, "Lloyd iterations");
    };

    std::function<int(const RunConfig&)> run;
    auto sub = [&](const char* name, const char* help, int (*fn)(const RunConfig&)) {
        CLI::App* c = app.add_subcommand(name, help);
        add_common(c);
        c->callback([&run, fn] { run = fn; });
        return c;
    };

    auto* synth = sub("synth", "Generate a synthetic place-recognition corpus", elevest::cli::cmd_synth);
    synth->add_option("--places", cfg.places);
    synth->add_option("--images-per-place", cfg.images_per_place);
    synth->add_option("--features-per-image", cfg.features_per_image);
    synth->add_option("--inlier-fraction", cfg.inlier_fraction);

    auto* split = sub("split", "Seeded train/test split of a manifest", elevest::cli::cmd_split);
    add_manifest(split);
    split->add_option("--test-fraction", cfg.test_fraction);

    auto* annotate = sub("annotate", "Fill elevation_m from a DEM (ESRI ASCII grid)", elevest::cli::cmd_annotate);
    add_manifest(annotate);
    annotate->add_option("--dem", cfg.dem);

    auto* tv = sub("train-vocab", "Train the BOW visual vocabulary", elevest::cli::cmd_train_vocab);
    add_manifest(tv);
    add_kmeans(tv);
    tv->add_option("--words", cfg.words, "Vocabulary size");
    tv->add_option("--max-descriptors", cfg.max_descriptors, "Descriptor subsample cap (0: all)");

    auto* bi = sub("build-index", "Build the inverted file of a training manifest", elevest::cli::cmd_build_index);
    add_manifest(bi);
    bi->add_option("--vocab", cfg.vocab);

    auto* tm = sub("train-mvocab", "Train the multi-vocabulary reduction", elevest::cli::cmd_train_mvocab);
    add_manifest(tm);
    add_kmeans(tm);
    tm->add_option("--mvocab-words", cfg.mvocab_words, "Words per vocabulary");
    tm->add_option("--dims", cfg.dims, "Reduced dimension");
    tm->add_flag("--whiten", cfg.whiten);

    auto* est = sub("estimate", "Predict elevations for a manifest of query images", elevest::cli::cmd_estimate);
    add_manifest(est);
    est->add_option("--index", cfg.index);
    est->add_option("--vocab", cfg.vocab);
    est->add_option("--train-manifest", cfg.train_manifest, "Manifest of the indexed images");
    est->add_option("--top-k", cfg.top_k, "Neighbours for the multi-vocabulary estimate");
    est->add_option("--t-sp", cfg.t_sp, "Verified iff more inliers than this");
    est->add_option("--w-t", cfg.w_t, "Neighbour weight threshold");
    est->add_option("--shortlist", cfg.shortlist, "Images re-ranked by spatial verification");
    est->add_option("--reproj-tol", cfg.reproj_tol);
    est->add_option("--secondary", cfg.secondary)->check(CLI::IsMember({"mvocab", "external"}));
    est->add_option("--mvocab-model", cfg.mvocab_model);
    est->add_option("--external-predictions", cfg.external_predictions);

    auto* ev = sub("evaluate", "Score predictions against ground truth", elevest::cli::cmd_evaluate);
    add_manifest(ev);
    ev->add_option("--predictions", cfg.predictions);
    ev->add_option("--train-manifest", cfg.train_manifest, "Adds the training-mean baseline");
    ev->add_option("--threshold-step", cfg.threshold_step);
    ev->add_option("--bias-bin-width", cfg.bias_bin_width);

    try {
        if (const auto path = find_config(argc, argv); !path.empty()) elevest::cli::apply_config_file(path, cfg);
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const elevest::Error& e) {
        std::fprintf(stderr, "elevest: %s\n", e.what());
        return 2;
    }

    setup_logging(verbose);
    try {
        return run(cfg);
    } catch (const elevest::Error& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("unexpected failure: {}", e.what());
        return 1;
    }
}
