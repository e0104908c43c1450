#pragma once

#include "elevest/corpus.hpp"
#include "elevest/features.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace elevest {

/// Parameters of a generated place-recognition corpus. Every place owns a
/// pool of landmark features; each of its images shows `inlier_fraction` of
/// them under a random similarity transform, padded with clutter.
struct SyntheticCorpusSpec {
    std::size_t places = 20;
    std::size_t images_per_place = 10;
    std::size_t features_per_image = 60;
    double inlier_fraction = 0.7;
    double min_elevation_m = 0.0;
    double max_elevation_m = 4782.0;
    std::uint64_t seed = 0;
    std::size_t descriptor_dim = kSiftDim;
    double image_width = 640.0;
    double image_height = 480.0;
    double descriptor_noise = 0.02;  // relative to the descriptor value range
    double position_noise_px = 0.5;

    void validate() const;
};

struct SyntheticImage {
    ImageRecord record;
    std::size_t place = 0;
    FeatureSet features;  // region multipliers 1.0 and 1.5
};

struct SyntheticCorpus {
    std::vector<SyntheticImage> images;
    std::vector<double> place_elevations;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

/// Writes manifest.jsonl, features/<id>.elfv and places.csv under `dir`.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace elevest
