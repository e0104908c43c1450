#include "elevest/corpus.hpp"

#include "elevest/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

namespace elevest {

using nlohmann::json;

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<double> number_field(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) throw ParseError(std::string("field '") + key + "' is not a number", line);
    return it->get<double>();
}

std::optional<std::string> string_field(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw ParseError(std::string("field '") + key + "' is not a string", line);
    return it->get<std::string>();
}

bool valid_timestamp(const std::string& ts) {
    std::tm tm{};
    std::istringstream ss(ts);
    ss >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    return !ss.fail();
}

void check_positive(const std::optional<double>& v, const char* name, const std::string& id) {
    if (v && !(std::isfinite(*v) && *v > 0.0)) {
        throw ValidationError("record '" + id + "': exif " + name + " must be positive and finite");
    }
}

ImageRecord record_from_json(const json& obj, std::size_t line) {
    if (!obj.is_object()) throw ParseError("line is not a JSON object", line);
    ImageRecord rec;
    auto id = string_field(obj, "id", line);
    if (!id) throw ParseError("missing required field 'id'", line);
    rec.id = *id;

    auto lat = number_field(obj, "lat", line);
    auto lon = number_field(obj, "lon", line);
    if (lat.has_value() != lon.has_value()) throw ParseError("lat and lon must appear together", line);
    if (lat) rec.geo = GeoPoint{*lat, *lon};

    rec.elevation_m = number_field(obj, "elevation_m", line);
    rec.feature_path = string_field(obj, "feature_path", line);
    rec.scene_score = number_field(obj, "scene_score", line);

    if (auto it = obj.find("exif"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError("field 'exif' is not an object", line);
        ExifRecord ex;
        ex.timestamp = string_field(*it, "timestamp", line);
        ex.aperture_n = number_field(*it, "aperture_n", line);
        ex.exposure_s = number_field(*it, "exposure_s", line);
        ex.iso = number_field(*it, "iso", line);
        ex.focal_mm = number_field(*it, "focal_mm", line);
        ex.sensor_mm = number_field(*it, "sensor_mm", line);
        rec.exif = std::move(ex);
    }
    return rec;
}

json record_to_json(const ImageRecord& rec) {
    json obj;
    obj["id"] = rec.id;
    if (rec.geo) {
        obj["lat"] = rec.geo->lat;
        obj["lon"] = rec.geo->lon;
    }
    if (rec.elevation_m) obj["elevation_m"] = *rec.elevation_m;
    if (rec.feature_path) obj["feature_path"] = *rec.feature_path;
    if (rec.exif) {
        json ex = json::object();
        const auto& e = *rec.exif;
        if (e.timestamp) ex["timestamp"] = *e.timestamp;
        if (e.aperture_n) ex["aperture_n"] = *e.aperture_n;
        if (e.exposure_s) ex["exposure_s"] = *e.exposure_s;
        if (e.iso) ex["iso"] = *e.iso;
        if (e.focal_mm) ex["focal_mm"] = *e.focal_mm;
        if (e.sensor_mm) ex["sensor_mm"] = *e.sensor_mm;
        obj["exif"] = std::move(ex);
    }
    if (rec.scene_score) obj["scene_score"] = *rec.scene_score;
    return obj;
}

}  // namespace

void validate_record(const ImageRecord& r) {
    if (r.id.empty()) throw ValidationError("record id must be non-empty");
    if (r.geo) {
        const auto& g = *r.geo;
        if (!std::isfinite(g.lat) || g.lat < -90.0 || g.lat > 90.0 || !std::isfinite(g.lon) || g.lon < -180.0 ||
            g.lon > 180.0) {
            throw ValidationError("record '" + r.id + "': coordinates out of range");
        }
    }
    if (r.elevation_m &&
        !(std::isfinite(*r.elevation_m) && *r.elevation_m >= kMinElevationM && *r.elevation_m <= kMaxElevationM)) {
        throw ValidationError("record '" + r.id + "': elevation_m outside [-500, 9000]");
    }
    if (r.scene_score && !(*r.scene_score >= 0.0 && *r.scene_score <= 1.0)) {
        throw ValidationError("record '" + r.id + "': scene_score outside [0, 1]");
    }
    if (r.exif) {
        const auto& e = *r.exif;
        check_positive(e.aperture_n, "aperture_n", r.id);
        check_positive(e.exposure_s, "exposure_s", r.id);
        check_positive(e.iso, "iso", r.id);
        check_positive(e.focal_mm, "focal_mm", r.id);
        check_positive(e.sensor_mm, "sensor_mm", r.id);
        if (e.timestamp && !valid_timestamp(*e.timestamp)) {
            throw ValidationError("record '" + r.id + "': timestamp '" + *e.timestamp + "' is not ISO-8601");
        }
    }
}

std::vector<ImageRecord> parse_manifest(std::string_view text) {
    std::vector<ImageRecord> out;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;
        if (is_blank(line)) {
            if (end == text.size()) break;
            continue;
        }
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        ImageRecord rec = record_from_json(obj, line_no);
        try {
            validate_record(rec);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!seen.insert(rec.id).second) throw DuplicateIdError(rec.id);
        out.push_back(std::move(rec));
        if (end == text.size()) break;
    }
    return out;
}

std::vector<ImageRecord> load_manifest(const std::filesystem::path& path) { return parse_manifest(read_text(path)); }

std::string format_manifest(std::span<const ImageRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ImageRecord> records) {
    write_text(path, format_manifest(records));
}

std::filesystem::path resolve_feature_path(const ImageRecord& record, const std::filesystem::path& base_dir) {
    if (!record.feature_path) throw ValidationError("record '" + record.id + "' has no feature_path");
    std::filesystem::path p(*record.feature_path);
    return p.is_absolute() ? p : base_dir / p;
}

DatasetSplit split_dataset(std::span<const ImageRecord> records, double test_fraction, std::uint64_t seed) {
    if (records.empty()) throw ValidationError("cannot split an empty record list");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ValidationError("test_fraction must lie in (0, 1)");
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const auto& r : records) {
        if (!r.elevation_m) throw ValidationError("record '" + r.id + "' has no elevation_m");
        ids.push_back(r.id);
    }
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ids.size())));

    DatasetSplit split;
    split.seed = seed;
    split.test_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
    return split;
}

void DemGrid::validate() const {
    if (rows < 2 || cols < 2) throw ValidationError("DEM needs at least 2x2 samples");
    if (!(lat_spacing_deg > 0.0) || !(lon_spacing_deg > 0.0)) throw ValidationError("DEM spacing must be positive");
    if (samples.size() != rows * cols) throw ValidationError("DEM sample count does not match rows*cols");
}

DemGrid parse_esri_ascii(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::map<std::string, double> header;
    std::string key;
    std::streampos body_start;
    for (;;) {
        body_start = in.tellg();
        if (!(in >> key)) break;
        if (!key.empty() && (std::isalpha(static_cast<unsigned char>(key[0])) != 0)) {
            std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
            double value = 0.0;
            if (!(in >> value)) throw ParseError("bad value for DEM header key '" + key + "'");
            header[key] = value;
        } else {
            break;
        }
    }
    auto need = [&](const char* k) {
        auto it = header.find(k);
        if (it == header.end()) throw ParseError(std::string("DEM header missing '") + k + "'");
        return it->second;
    };
    const double ncols = need("ncols");
    const double nrows = need("nrows");
    const double cellsize = need("cellsize");
    if (ncols < 2 || nrows < 2 || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
        throw ParseError("DEM ncols/nrows must be integers >= 2");
    }

    DemGrid g;
    g.cols = static_cast<std::size_t>(ncols);
    g.rows = static_cast<std::size_t>(nrows);
    g.lat_spacing_deg = cellsize;
    g.lon_spacing_deg = cellsize;
    if (header.contains("xllcenter") && header.contains("yllcenter")) {
        g.origin = {header["yllcenter"], header["xllcenter"]};
    } else {
        // Samples sit at cell centers; the corner is half a cell further out.
        g.origin = {need("yllcorner") + 0.5 * cellsize, need("xllcorner") + 0.5 * cellsize};
    }
    if (auto it = header.find("nodata_value"); it != header.end()) g.nodata = it->second;

    in.clear();
    in.seekg(body_start);
    std::vector<double> north_first;
    north_first.reserve(g.rows * g.cols);
    double v = 0.0;
    while (in >> v) north_first.push_back(v);
    if (!in.eof()) throw ParseError("non-numeric DEM sample after " + std::to_string(north_first.size()) + " values");
    if (north_first.size() != g.rows * g.cols) {
        throw ParseError("DEM has " + std::to_string(north_first.size()) + " samples, expected " +
                         std::to_string(g.rows * g.cols));
    }
    g.samples.resize(north_first.size());
    for (std::size_t r = 0; r < g.rows; ++r) {
        const std::size_t src = (g.rows - 1 - r) * g.cols;
        std::copy_n(north_first.begin() + static_cast<std::ptrdiff_t>(src), g.cols,
                    g.samples.begin() + static_cast<std::ptrdiff_t>(r * g.cols));
    }
    g.validate();
    return g;
}

DemGrid load_esri_ascii(const std::filesystem::path& path) { return parse_esri_ascii(read_text(path)); }

std::string format_esri_ascii(const DemGrid& g) {
    g.validate();
    if (g.lat_spacing_deg != g.lon_spacing_deg) throw ValidationError("ESRI ASCII grids need square cells");
    std::ostringstream out;
    out << std::setprecision(17);
    out << "ncols " << g.cols << "\nnrows " << g.rows << "\nxllcenter " << g.origin.lon << "\nyllcenter "
        << g.origin.lat << "\ncellsize " << g.lat_spacing_deg << "\nNODATA_value " << g.nodata << "\n";
    for (std::size_t r = g.rows; r-- > 0;) {
        for (std::size_t c = 0; c < g.cols; ++c) {
            if (c) out << ' ';
            out << g.at(r, c);
        }
        out << '\n';
    }
    return out.str();
}

double dem_lookup(const DemGrid& grid, const GeoPoint& p) {
    constexpr double kEdgeSlack = 1e-9;
    const double fx = (p.lon - grid.origin.lon) / grid.lon_spacing_deg;
    const double fy = (p.lat - grid.origin.lat) / grid.lat_spacing_deg;
    const double max_x = static_cast<double>(grid.cols - 1);
    const double max_y = static_cast<double>(grid.rows - 1);
    if (!std::isfinite(fx) || !std::isfinite(fy) || fx < -kEdgeSlack || fy < -kEdgeSlack || fx > max_x + kEdgeSlack ||
        fy > max_y + kEdgeSlack) {
        throw OutOfBoundsError("point (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                               ") lies outside the DEM");
    }
    // Degree arithmetic leaves on-sample queries a few ulps off the node.
    auto snap = [&](double f) {
        const double r = std::round(f);
        return std::abs(f - r) <= kEdgeSlack ? r : f;
    };
    const double cx = std::clamp(snap(fx), 0.0, max_x);
    const double cy = std::clamp(snap(fy), 0.0, max_y);
    const auto col = std::min(static_cast<std::size_t>(cx), grid.cols - 2);
    const auto row = std::min(static_cast<std::size_t>(cy), grid.rows - 2);
    const double tx = cx - static_cast<double>(col);
    const double ty = cy - static_cast<double>(row);

    const double z00 = grid.at(row, col);
    const double z01 = grid.at(row, col + 1);
    const double z10 = grid.at(row + 1, col);
    const double z11 = grid.at(row + 1, col + 1);
    for (double z : {z00, z01, z10, z11}) {
        if (z == grid.nodata) throw MissingDataError("DEM sample near the query is missing");
    }
    const double south = z00 + tx * (z01 - z00);
    const double north = z10 + tx * (z11 - z10);
    return south + ty * (north - south);
}

AnnotationResult annotate_elevations(std::span<const ImageRecord> records, const DemGrid& grid) {
    AnnotationResult out;
    out.records.reserve(records.size());
    for (const auto& r : records) {
        ImageRecord copy = r;
        if (!r.geo) {
            ++out.missing_geo;
        } else {
            try {
                copy.elevation_m = dem_lookup(grid, *r.geo);
            } catch (const OutOfBoundsError& e) {
                throw OutOfBoundsError("record '" + r.id + "': " + e.what());
            } catch (const MissingDataError& e) {
                throw MissingDataError("record '" + r.id + "': " + e.what());
            }
        }
        out.records.push_back(std::move(copy));
    }
    return out;
}

std::optional<double> compute_ec(const ExifRecord& exif) {
    if (!exif.aperture_n || !exif.exposure_s || !exif.iso) return std::nullopt;
    const double n = *exif.aperture_n;
    const double t = *exif.exposure_s;
    const double iso = *exif.iso;
    if (!(n > 0.0 && t > 0.0 && iso > 0.0)) return std::nullopt;
    return std::log2(n * n) - std::log2(t * iso / 100.0);
}

std::optional<double> compute_fov(const ExifRecord& exif) {
    if (!exif.focal_mm || !exif.sensor_mm) return std::nullopt;
    const double f = *exif.focal_mm;
    const double s = *exif.sensor_mm;
    if (!(f > 0.0 && s > 0.0)) return std::nullopt;
    return std::atan(0.5 * s / f);
}

}  // namespace elevest
