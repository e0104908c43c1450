#include "elevest/synthetic.hpp"

#include "elevest/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

namespace elevest {

namespace {

constexpr double kDescriptorRange = 255.0;
constexpr double kMultipliers[] = {1.0, 1.5};

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53); }
    double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(gen_); }
    std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform(0.0, 1.0) * n)); }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// Sparse-ish non-negative vector resembling gradient histograms.
Descriptor random_descriptor(Rng& rng, std::size_t dim) {
    Descriptor d(dim);
    for (auto& v : d) {
        const double u = rng.uniform(0.0, 1.0);
        v = static_cast<float>(kDescriptorRange * u * u * u);
    }
    d[rng.index(dim)] = static_cast<float>(kDescriptorRange);
    return d;
}

Descriptor perturb(const Descriptor& base, Rng& rng, double sigma) {
    Descriptor d(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        d[i] = static_cast<float>(std::max(0.0, base[i] + rng.normal(sigma)));
    }
    return d;
}

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a < 0) a += two_pi;
    return a - std::numbers::pi;
}

struct Landmark {
    double x, y, scale, orientation;
    Descriptor descriptors[2];
};

}  // namespace

void SyntheticCorpusSpec::validate() const {
    if (places == 0 || images_per_place == 0 || features_per_image == 0 || descriptor_dim == 0) {
        throw ValidationError("synthetic corpus counts must be positive");
    }
    if (!(inlier_fraction > 0.0 && inlier_fraction <= 1.0)) throw ValidationError("inlier_fraction must lie in (0, 1]");
    if (!(max_elevation_m >= min_elevation_m)) throw ValidationError("elevation range is empty");
    if (!(image_width > 0.0 && image_height > 0.0)) throw ValidationError("image size must be positive");
    if (!(descriptor_noise >= 0.0 && position_noise_px >= 0.0)) throw ValidationError("noise levels must be >= 0");
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticCorpus corpus;
    const std::size_t n_inlier = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(spec.inlier_fraction * static_cast<double>(spec.features_per_image))));
    const double sigma = spec.descriptor_noise * kDescriptorRange;

    for (std::size_t p = 0; p < spec.places; ++p) {
        const double elevation = rng.uniform(spec.min_elevation_m, spec.max_elevation_m);
        corpus.place_elevations.push_back(elevation);
        const GeoPoint site{rng.uniform(44.0, 48.0), rng.uniform(5.0, 16.0)};

        std::vector<Landmark> pool(spec.features_per_image);
        for (auto& l : pool) {
            l.x = rng.uniform(0.15, 0.85) * spec.image_width;
            l.y = rng.uniform(0.15, 0.85) * spec.image_height;
            l.scale = rng.uniform(1.5, 6.0);
            l.orientation = rng.uniform(-std::numbers::pi, std::numbers::pi);
            for (auto& d : l.descriptors) d = random_descriptor(rng, spec.descriptor_dim);
        }

        for (std::size_t i = 0; i < spec.images_per_place; ++i) {
            SyntheticImage img;
            img.place = p;
            char id[32];
            std::snprintf(id, sizeof id, "p%03zu_i%03zu", p, i);
            img.record.id = id;
            img.record.geo = GeoPoint{site.lat + rng.normal(0.001), site.lon + rng.normal(0.001)};
            img.record.elevation_m = elevation;
            img.record.feature_path = std::string("features/") + id + ".elfv";
            img.features.image_id = id;

            // Similarity transform about the image center.
            const double s = rng.uniform(0.8, 1.25);
            const double theta = rng.uniform(-0.3, 0.3);
            const double cx = 0.5 * spec.image_width;
            const double cy = 0.5 * spec.image_height;
            const double shift_x = rng.uniform(-0.05, 0.05) * spec.image_width;
            const double shift_y = rng.uniform(-0.05, 0.05) * spec.image_height;

            std::vector<std::size_t> chosen(pool.size());
            std::iota(chosen.begin(), chosen.end(), std::size_t{0});
            std::shuffle(chosen.begin(), chosen.end(), rng.engine());
            chosen.resize(n_inlier);

            std::vector<std::array<LocalFeature, 2>> feats;
            for (auto li : chosen) {
                const auto& l = pool[li];
                const double dx = l.x - cx;
                const double dy = l.y - cy;
                std::array<LocalFeature, 2> f;
                f[0].x = static_cast<float>(cx + shift_x + s * (std::cos(theta) * dx - std::sin(theta) * dy) +
                                            rng.normal(spec.position_noise_px));
                f[0].y = static_cast<float>(cy + shift_y + s * (std::sin(theta) * dx + std::cos(theta) * dy) +
                                            rng.normal(spec.position_noise_px));
                f[0].scale = static_cast<float>(l.scale * s);
                f[0].orientation = static_cast<float>(wrap_angle(l.orientation + theta));
                f[1] = f[0];
                for (std::size_t v = 0; v < 2; ++v) f[v].descriptor = perturb(l.descriptors[v], rng, sigma);
                feats.push_back(std::move(f));
            }
            for (std::size_t c = n_inlier; c < spec.features_per_image; ++c) {
                std::array<LocalFeature, 2> f;
                f[0].x = static_cast<float>(rng.uniform(0.0, spec.image_width));
                f[0].y = static_cast<float>(rng.uniform(0.0, spec.image_height));
                f[0].scale = static_cast<float>(rng.uniform(1.5, 6.0));
                f[0].orientation = static_cast<float>(rng.uniform(-std::numbers::pi, std::numbers::pi));
                f[1] = f[0];
                for (std::size_t v = 0; v < 2; ++v) f[v].descriptor = random_descriptor(rng, spec.descriptor_dim);
                feats.push_back(std::move(f));
            }
            std::shuffle(feats.begin(), feats.end(), rng.engine());

            for (std::size_t v = 0; v < 2; ++v) {
                FeatureVariant var;
                var.region.multiplier = kMultipliers[v];
                var.features.reserve(feats.size());
                for (auto& f : feats) var.features.push_back(f[v]);
                img.features.variants.push_back(std::move(var));
            }
            corpus.images.push_back(std::move(img));
        }
    }
    return corpus;
}

void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "features");
    std::vector<ImageRecord> records;
    records.reserve(corpus.images.size());
    std::ofstream places(dir / "places.csv", std::ios::binary | std::ios::trunc);
    if (!places) throw IoError("cannot write '" + (dir / "places.csv").string() + "'");
    places << "image_id,place\n";
    for (const auto& img : corpus.images) {
        write_features(dir / *img.record.feature_path, img.features);
        records.push_back(img.record);
        places << img.record.id << ',' << img.place << '\n';
    }
    write_manifest(dir / "manifest.jsonl", records);
}

}  // namespace elevest
