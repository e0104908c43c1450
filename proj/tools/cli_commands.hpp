#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace elevest::cli {

/// Everything a command may read. Populated from the --config file first,
/// then overridden by flags.
struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path train_manifest;
    std::filesystem::path vocab;
    std::filesystem::path index;
    std::filesystem::path mvocab_model;
    std::filesystem::path dem;
    std::filesystem::path external_predictions;
    std::filesystem::path predictions;
    std::filesystem::path out;

    std::uint64_t seed = 0;
    unsigned threads = 0;

    // estimation
    std::size_t top_k = 100;
    std::size_t t_sp = 8;
    double w_t = 1.4;
    std::size_t shortlist = 50;
    double reproj_tol = 0.05;
    std::string secondary;  // "", "mvocab" or "external"

    // vocabularies and reduction
    std::size_t words = 4096;
    std::size_t mvocab_words = 256;
    std::size_t dims = 128;
    std::size_t kmeans_iter = 30;
    std::size_t max_descriptors = 200000;
    bool whiten = false;

    // split
    double test_fraction = 0.1;

    // evaluation
    double threshold_step = 100.0;
    double bias_bin_width = 500.0;

    // synth
    std::size_t places = 20;
    std::size_t images_per_place = 10;
    std::size_t features_per_image = 60;
    double inlier_fraction = 0.7;
};

/// Fills `cfg` from a JSON object; unknown keys are rejected.
void apply_config_file(const std::filesystem::path& path, RunConfig& cfg);

int cmd_synth(const RunConfig& cfg);
int cmd_split(const RunConfig& cfg);
int cmd_annotate(const RunConfig& cfg);
int cmd_train_vocab(const RunConfig& cfg);
int cmd_build_index(const RunConfig& cfg);
int cmd_train_mvocab(const RunConfig& cfg);
int cmd_estimate(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);

}  // namespace elevest::cli
