#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace elevest {

/// WGS84 position in degrees.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

/// Camera metadata; every field may be missing independently.
struct ExifRecord {
    std::optional<std::string> timestamp;  // ISO-8601, e.g. 2014-07-21T12:30:00
    std::optional<double> aperture_n;
    std::optional<double> exposure_s;
    std::optional<double> iso;
    std::optional<double> focal_mm;
    std::optional<double> sensor_mm;

    bool operator==(const ExifRecord&) const = default;
};

struct ImageRecord {
    std::string id;
    std::optional<GeoPoint> geo;
    std::optional<double> elevation_m;
    std::optional<std::string> feature_path;
    std::optional<ExifRecord> exif;
    std::optional<double> scene_score;

    bool operator==(const ImageRecord&) const = default;
};

inline constexpr double kMinElevationM = -500.0;
inline constexpr double kMaxElevationM = 9000.0;

/// Throws ValidationError when a record breaks a field invariant.
void validate_record(const ImageRecord& record);

/// Reads a line-delimited JSON manifest. Blank lines are skipped; unknown
/// fields are ignored. Records come back in file order.
std::vector<ImageRecord> load_manifest(const std::filesystem::path& path);
std::vector<ImageRecord> parse_manifest(std::string_view text);

void write_manifest(const std::filesystem::path& path, std::span<const ImageRecord> records);
std::string format_manifest(std::span<const ImageRecord> records);

/// Resolves a record's feature file; relative paths are taken against `base_dir`.
std::filesystem::path resolve_feature_path(const ImageRecord& record, const std::filesystem::path& base_dir);

struct DatasetSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;
};

/// Seeded shuffle followed by a prefix partition; the first
/// round(test_fraction * N) shuffled ids form the test set.
DatasetSplit split_dataset(std::span<const ImageRecord> records, double test_fraction, std::uint64_t seed);

inline constexpr double kDemNoData = -32768.0;

/// Regular lat/lon grid of elevation samples. Row 0 is the southernmost row;
/// `origin` is the position of sample (0, 0).
struct DemGrid {
    GeoPoint origin;
    double lat_spacing_deg = 0.0;
    double lon_spacing_deg = 0.0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> samples;  // rows * cols, row-major from the south
    double nodata = kDemNoData;

    double at(std::size_t row, std::size_t col) const { return samples[row * cols + col]; }
    void validate() const;
};

/// ESRI ASCII grid (north row first on disk).
DemGrid load_esri_ascii(const std::filesystem::path& path);
DemGrid parse_esri_ascii(std::string_view text);
std::string format_esri_ascii(const DemGrid& grid);

/// Bilinear interpolation of the four samples around `p`.
double dem_lookup(const DemGrid& grid, const GeoPoint& p);

struct AnnotationResult {
    std::vector<ImageRecord> records;
    std::size_t missing_geo = 0;
};

AnnotationResult annotate_elevations(std::span<const ImageRecord> records, const DemGrid& grid);

/// Exposure coefficient log2(N^2) - log2(t * ISO / 100), in stops.
std::optional<double> compute_ec(const ExifRecord& exif);

/// Half-angle field of view atan(0.5 * S / f), in radians.
std::optional<double> compute_fov(const ExifRecord& exif);

}  // namespace elevest
