#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace elevest {

using Descriptor = std::vector<float>;   // raw, as stored on disk
using DescriptorD = std::vector<double>; // normalized, in working precision

inline constexpr std::size_t kSiftDim = 128;

struct LocalFeature {
    float x = 0.0f;
    float y = 0.0f;
    float scale = 1.0f;
    float orientation = 0.0f;  // radians in [-pi, pi)
    Descriptor descriptor;

    bool same_geometry(const LocalFeature& o) const {
        return x == o.x && y == o.y && scale == o.scale && orientation == o.orientation;
    }
};

// Measurement region radius relative to detection scale.
inline const double kRegionBaseFactor = 3.0 * std::sqrt(3.0);

struct RegionScaleConfig {
    double multiplier = 1.0;  // 1.0 or 1.5

    double region_radius(double scale) const { return multiplier * kRegionBaseFactor * scale; }
    bool operator==(const RegionScaleConfig&) const = default;
};

struct NormalizationConfig {
    double beta = 0.5;  // 0.5 is RootSIFT, 1.0 is plain SIFT

    bool operator==(const NormalizationConfig&) const = default;
};

struct FeatureVariant {
    RegionScaleConfig region;
    std::vector<LocalFeature> features;
};

/// Features of one image, described over one or more measurement regions.
/// All variants share the same detections; only descriptors differ.
struct FeatureSet {
    std::string image_id;
    std::vector<FeatureVariant> variants;

    /// Variant whose multiplier matches; throws ValidationError when absent.
    const FeatureVariant& variant(double multiplier) const;
    bool has_variant(double multiplier) const;

    /// Throws GeometryMismatchError when variants disagree on detections.
    void validate() const;
};

FeatureSet load_features(const std::filesystem::path& path, std::string image_id = {});
FeatureSet parse_features(std::vector<std::uint8_t> bytes, std::string image_id = {});
void write_features(const std::filesystem::path& path, const FeatureSet& set);
std::vector<std::uint8_t> encode_features(const FeatureSet& set);

/// Componentwise power law followed by L2 normalization. beta = 0.5 takes
/// the RootSIFT route (L1 normalize, square root, L2 normalize).
DescriptorD power_normalize(std::span<const float> descriptor, const NormalizationConfig& cfg);

}  // namespace elevest
