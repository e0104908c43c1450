#include "elevest/features.hpp"

#include "elevest/binary_io.hpp"
#include "elevest/errors.hpp"

#include <cmath>

namespace elevest {

namespace {

constexpr std::uint32_t kFeatureVersion = 1;
constexpr double kMultiplierMatch = 1e-6;

}  // namespace

bool FeatureSet::has_variant(double multiplier) const {
    for (const auto& v : variants) {
        if (std::abs(v.region.multiplier - multiplier) < kMultiplierMatch) return true;
    }
    return false;
}

const FeatureVariant& FeatureSet::variant(double multiplier) const {
    for (const auto& v : variants) {
        if (std::abs(v.region.multiplier - multiplier) < kMultiplierMatch) return v;
    }
    throw ValidationError("image '" + image_id + "' has no region variant with multiplier " +
                          std::to_string(multiplier));
}

void FeatureSet::validate() const {
    if (variants.empty()) return;
    const auto& ref = variants.front().features;
    for (std::size_t v = 1; v < variants.size(); ++v) {
        const auto& other = variants[v].features;
        if (other.size() != ref.size()) {
            throw GeometryMismatchError("variant " + std::to_string(v) + " has " + std::to_string(other.size()) +
                                        " features, variant 0 has " + std::to_string(ref.size()));
        }
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (!ref[i].same_geometry(other[i])) {
                throw GeometryMismatchError("variant " + std::to_string(v) + " feature " + std::to_string(i) +
                                            " does not share the detection geometry of variant 0");
            }
        }
    }
    for (const auto& var : variants) {
        for (const auto& f : var.features) {
            if (!(f.scale > 0.0f)) throw ValidationError("feature scale must be positive");
        }
    }
}

FeatureSet parse_features(std::vector<std::uint8_t> bytes, std::string image_id) {
    io::ByteReader in(std::move(bytes));
    in.expect_magic("ELFV");
    const auto version = in.u32();
    if (version != kFeatureVersion) throw ParseError("unsupported feature file version " + std::to_string(version));
    const auto variant_count = in.u32();
    const auto feature_count = in.u32();
    const auto dim = in.u32();

    FeatureSet set;
    set.image_id = std::move(image_id);
    set.variants.resize(variant_count);
    for (auto& var : set.variants) {
        var.region.multiplier = in.f32();
        var.features.resize(feature_count);
        for (auto& f : var.features) {
            f.x = in.f32();
            f.y = in.f32();
            f.scale = in.f32();
            f.orientation = in.f32();
            f.descriptor = in.f32s(dim);
        }
    }
    if (!in.at_end()) throw ParseError("trailing bytes after feature payload");
    set.validate();
    return set;
}

FeatureSet load_features(const std::filesystem::path& path, std::string image_id) {
    if (image_id.empty()) image_id = path.stem().string();
    return parse_features(io::read_file(path), std::move(image_id));
}

std::vector<std::uint8_t> encode_features(const FeatureSet& set) {
    set.validate();
    const std::size_t count = set.variants.empty() ? 0 : set.variants.front().features.size();
    std::size_t dim = 0;
    if (count > 0) dim = set.variants.front().features.front().descriptor.size();

    io::ByteWriter out;
    out.magic("ELFV");
    out.u32(kFeatureVersion);
    out.u32(static_cast<std::uint32_t>(set.variants.size()));
    out.u32(static_cast<std::uint32_t>(count));
    out.u32(static_cast<std::uint32_t>(dim));
    for (const auto& var : set.variants) {
        out.f32(static_cast<float>(var.region.multiplier));
        for (const auto& f : var.features) {
            if (f.descriptor.size() != dim) throw ValidationError("descriptor dimension differs within a feature set");
            out.f32(f.x);
            out.f32(f.y);
            out.f32(f.scale);
            out.f32(f.orientation);
            out.f32s(std::span<const float>(f.descriptor));
        }
    }
    return out.buffer();
}

void write_features(const std::filesystem::path& path, const FeatureSet& set) {
    io::ByteWriter out;
    out.bytes(encode_features(set));
    out.save(path);
}

DescriptorD power_normalize(std::span<const float> descriptor, const NormalizationConfig& cfg) {
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) throw ValidationError("beta must lie in (0, 1]");
    double l1 = 0.0;
    double l2 = 0.0;
    for (float v : descriptor) {
        if (!(v >= 0.0f) || !std::isfinite(v)) throw ValidationError("descriptor components must be finite and >= 0");
        l1 += v;
        l2 += static_cast<double>(v) * v;
    }
    if (l1 == 0.0) throw DegenerateError("all-zero descriptor");

    std::vector<double> work(descriptor.begin(), descriptor.end());
    if (cfg.beta == 0.5) {
        for (auto& v : work) v = std::sqrt(v / l1);
    } else {
        const double inv = 1.0 / std::sqrt(l2);
        for (auto& v : work) v = std::pow(v * inv, cfg.beta);
    }
    double norm = 0.0;
    for (double v : work) norm += v * v;
    norm = std::sqrt(norm);

    for (auto& v : work) v /= norm;
    return work;
}

}  // namespace elevest
