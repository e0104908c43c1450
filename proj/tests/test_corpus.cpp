#include "elevest/corpus.hpp"
#include "elevest/errors.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace elevest;

namespace {

DemGrid planar_grid(double a, double b, double c, std::size_t rows = 5, std::size_t cols = 7) {
    DemGrid g;
    g.origin = {46.0, 7.0};
    g.lat_spacing_deg = 0.01;
    g.lon_spacing_deg = 0.02;
    g.rows = rows;
    g.cols = cols;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t col = 0; col < cols; ++col) {
            const double lon = g.origin.lon + col * g.lon_spacing_deg;
            const double lat = g.origin.lat + r * g.lat_spacing_deg;
            g.samples.push_back(a * lon + b * lat + c);
        }
    }
    return g;
}

std::vector<ImageRecord> records_with_elevation(std::size_t n) {
    std::vector<ImageRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        ImageRecord r;
        r.id = "img" + std::to_string(i);
        r.elevation_m = 100.0 + static_cast<double>(i);
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_SUITE("manifest") {
    TEST_CASE("empty text yields no records") { CHECK(parse_manifest("").empty()); }

    TEST_CASE("well-formed lines round-trip against a hand-written fixture") {
        const std::string text =
            R"({"id":"a","lat":46.5,"lon":7.25,"elevation_m":1520.5,"feature_path":"f/a.elfv"})"
            "\n"
            R"({"id":"b","exif":{"timestamp":"2014-07-21T12:30:00","aperture_n":8,"exposure_s":0.008,"iso":100},"scene_score":0.75,"extra":[1,2]})"
            "\n\n"
            R"({"id":"c"})"
            "\n";
        const auto recs = parse_manifest(text);
        REQUIRE(recs.size() == 3);
        CHECK(recs[0].id == "a");
        CHECK(recs[0].geo == GeoPoint{46.5, 7.25});
        CHECK(recs[0].elevation_m == 1520.5);
        CHECK(recs[0].feature_path == "f/a.elfv");
        CHECK(recs[1].id == "b");
        REQUIRE(recs[1].exif);
        CHECK(recs[1].exif->aperture_n == 8.0);
        CHECK(recs[1].exif->timestamp == "2014-07-21T12:30:00");
        CHECK_FALSE(recs[1].exif->focal_mm);
        CHECK(recs[1].scene_score == 0.75);
        CHECK(recs[2].id == "c");
        CHECK_FALSE(recs[2].geo);
    }

    TEST_CASE("duplicate id is rejected with the id named") {
        const std::string text = "{\"id\":\"a\"}\n{\"id\":\"a\"}\n";
        try {
            parse_manifest(text);
            FAIL("expected DuplicateIdError");
        } catch (const DuplicateIdError& e) {
            CHECK(e.id() == "a");
        }
    }

    TEST_CASE("malformed line reports its line number") {
        const std::string text = "{\"id\":\"a\"}\n{\"id\": oops}\n";
        try {
            parse_manifest(text);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(parse_manifest("{\"lat\":1}\n"), ParseError);
        CHECK_THROWS_AS(parse_manifest("{\"id\":\"x\",\"elevation_m\":12000}\n"), ParseError);
        CHECK_THROWS_AS(parse_manifest("{\"id\":\"x\",\"exif\":{\"iso\":-5}}\n"), ParseError);
    }

    TEST_CASE("write then load yields field-equal records") {
        fixture::TempDir dir;
        std::vector<ImageRecord> recs(2);
        recs[0].id = "x1";
        recs[0].geo = GeoPoint{45.123456789, 6.987654321};
        recs[0].elevation_m = 2345.678;
        recs[0].exif = ExifRecord{};
        recs[0].exif->focal_mm = 35.0;
        recs[0].exif->sensor_mm = 23.6;
        recs[0].exif->timestamp = "2015-01-02T03:04:05";
        recs[1].id = "x2";
        recs[1].scene_score = 0.5;
        recs[1].feature_path = "features/x2.elfv";
        write_manifest(dir / "m.jsonl", recs);
        CHECK(load_manifest(dir / "m.jsonl") == recs);
    }

    TEST_CASE("missing manifest file is an IoError") {
        CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.jsonl"), IoError);
    }
}

TEST_SUITE("split") {
    TEST_CASE("test count is round(fraction * N)") {
        const auto recs = records_with_elevation(100);
        const auto s = split_dataset(recs, 0.13, 7);
        CHECK(s.test_ids.size() == 13);
        CHECK(s.train_ids.size() == 87);
    }

    TEST_CASE("identical inputs give identical splits") {
        const auto recs = records_with_elevation(50);
        const auto a = split_dataset(recs, 0.3, 42);
        const auto b = split_dataset(recs, 0.3, 42);
        CHECK(a.train_ids == b.train_ids);
        CHECK(a.test_ids == b.test_ids);
        const auto c = split_dataset(recs, 0.3, 43);
        CHECK(a.test_ids != c.test_ids);
    }

    TEST_CASE("halves are disjoint and cover every id") {
        const auto recs = records_with_elevation(10);
        const auto s = split_dataset(recs, 0.5, 1);
        CHECK(s.test_ids.size() == 5);
        CHECK(s.train_ids.size() == 5);
        std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
        for (const auto& id : s.test_ids) CHECK(all.insert(id).second);
        CHECK(all.size() == 10);
    }

    TEST_CASE("record without elevation is rejected") {
        auto recs = records_with_elevation(3);
        recs[1].elevation_m.reset();
        CHECK_THROWS_AS(split_dataset(recs, 0.5, 0), ValidationError);
        CHECK_THROWS_AS(split_dataset({}, 0.5, 0), ValidationError);
        CHECK_THROWS_AS(split_dataset(records_with_elevation(3), 1.0, 0), ValidationError);
    }
}

TEST_SUITE("dem") {
    TEST_CASE("constant zero field") {
        DemGrid g = planar_grid(0, 0, 0, 2, 2);
        CHECK(dem_lookup(g, {46.005, 7.013}) == 0.0);
    }

    TEST_CASE("query on a sample returns the sample") {
        DemGrid g = planar_grid(0, 0, 0, 3, 3);
        g.samples = {1, 2, 3, 4, 5, 6, 7, 8, 9};
        CHECK(dem_lookup(g, {46.01, 7.02}) == 5.0);
        CHECK(dem_lookup(g, {46.02, 7.04}) == 9.0);
        CHECK(dem_lookup(g, {46.0, 7.0}) == 1.0);
    }

    TEST_CASE("midpoint between 0 and 100 along one axis is 50") {
        DemGrid g = planar_grid(0, 0, 0, 2, 2);
        g.samples = {0, 100, 0, 100};  // south row, north row
        CHECK(dem_lookup(g, {46.005, 7.01}) == doctest::Approx(50.0).epsilon(1e-12));
    }

    TEST_CASE("planar grids are reproduced to 1e-9 m") {
        const double a = 1200.0, b = -800.0, c = 15.0;
        DemGrid g = planar_grid(a, b, c);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> ulat(46.0, 46.04), ulon(7.0, 7.12);
        for (int i = 0; i < 200; ++i) {
            GeoPoint p{ulat(rng), ulon(rng)};
            CHECK(std::abs(dem_lookup(g, p) - (a * p.lon + b * p.lat + c)) <= 1e-9);
        }
    }

    TEST_CASE("outside the grid and missing samples fail loudly") {
        DemGrid g = planar_grid(0, 0, 10, 3, 4);
        CHECK_THROWS_AS(dem_lookup(g, {45.9, 7.01}), OutOfBoundsError);
        CHECK_THROWS_AS(dem_lookup(g, {46.01, 7.5}), OutOfBoundsError);
        g.samples[1 * 4 + 1] = kDemNoData;
        CHECK_THROWS_AS(dem_lookup(g, {46.005, 7.005}), MissingDataError);
        CHECK_THROWS_AS(dem_lookup(g, {46.0, 7.0}), MissingDataError);
        CHECK(dem_lookup(g, {46.005, 7.05}) == doctest::Approx(10.0));
    }

    TEST_CASE("ESRI ASCII grid is read north row first") {
        const std::string text =
            "ncols 3\nnrows 2\nxllcorner 7.0\nyllcorner 46.0\ncellsize 0.5\nNODATA_value -9999\n"
            "10 20 30\n"
            "1 2 3\n";
        const DemGrid g = parse_esri_ascii(text);
        CHECK(g.rows == 2);
        CHECK(g.cols == 3);
        CHECK(g.origin == GeoPoint{46.25, 7.25});
        CHECK(g.nodata == -9999.0);
        CHECK(g.at(0, 0) == 1.0);
        CHECK(g.at(1, 2) == 30.0);
        CHECK(dem_lookup(g, {46.75, 8.25}) == 30.0);
        const DemGrid again = parse_esri_ascii(format_esri_ascii(g));
        CHECK(again.samples == g.samples);
        CHECK(again.origin == g.origin);
    }

    TEST_CASE("malformed ESRI grids") {
        CHECK_THROWS_AS(parse_esri_ascii("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n"), ParseError);
        CHECK_THROWS_AS(parse_esri_ascii("ncols 2\nnrows 2\nxllcorner 0\n1 2 3 4\n"), ParseError);
        CHECK_THROWS_AS(parse_esri_ascii("ncols 1\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n"), ParseError);
    }
}

TEST_SUITE("annotate") {
    TEST_CASE("records on a planar DEM take the plane value; missing geo passes through") {
        const double a = 500.0, b = 300.0, c = -20.0;
        DemGrid g = planar_grid(a, b, c);
        std::vector<ImageRecord> recs(4);
        recs[0].id = "on-sample";
        recs[0].geo = GeoPoint{46.01, 7.04};
        recs[1].id = "inside";
        recs[1].geo = GeoPoint{46.013, 7.051};
        recs[2].id = "inside2";
        recs[2].geo = GeoPoint{46.037, 7.117};
        recs[3].id = "nogeo";
        const auto res = annotate_elevations(recs, g);
        CHECK(res.missing_geo == 1);
        CHECK(res.records[0].elevation_m == doctest::Approx(a * 7.04 + b * 46.01 + c).epsilon(1e-12));
        for (std::size_t i = 0; i < 3; ++i) {
            const auto& p = *recs[i].geo;
            CHECK(std::abs(*res.records[i].elevation_m - (a * p.lon + b * p.lat + c)) <= 1e-9);
        }
        CHECK_FALSE(res.records[3].elevation_m);
    }

    TEST_CASE("record outside the grid names the id") {
        DemGrid g = planar_grid(0, 0, 0);
        std::vector<ImageRecord> recs(1);
        recs[0].id = "far-away";
        recs[0].geo = GeoPoint{10.0, 10.0};
        try {
            annotate_elevations(recs, g);
            FAIL("expected OutOfBoundsError");
        } catch (const OutOfBoundsError& e) {
            CHECK(std::string(e.what()).find("far-away") != std::string::npos);
        }
    }
}

TEST_SUITE("exif") {
    ExifRecord exposure(double n, double t, double iso) {
        ExifRecord e;
        e.aperture_n = n;
        e.exposure_s = t;
        e.iso = iso;
        return e;
    }

    TEST_CASE("exposure coefficient examples") {
        CHECK(*compute_ec(exposure(1, 1, 100)) == 0.0);
        CHECK(*compute_ec(exposure(8, 1.0 / 125, 100)) == doctest::Approx(12.965784284662087).epsilon(1e-12));
        CHECK(*compute_ec(exposure(2, 1, 400)) == doctest::Approx(0.0));
    }

    TEST_CASE("EC is unchanged by an exposure-equivalent change") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> un(1.0, 22.0), ut(1e-4, 2.0), uiso(50, 6400);
        for (int i = 0; i < 50; ++i) {
            const double n = un(rng), t = ut(rng), iso = uiso(rng);
            CHECK(*compute_ec(exposure(n, t, iso)) ==
                  doctest::Approx(*compute_ec(exposure(n * std::sqrt(2.0), 2 * t, iso))).epsilon(1e-12));
        }
    }

    TEST_CASE("missing EXIF fields give absent values, not zero") {
        ExifRecord e;
        e.aperture_n = 4;
        CHECK_FALSE(compute_ec(e));
        CHECK_FALSE(compute_fov(e));
    }

    TEST_CASE("field of view examples") {
        ExifRecord e;
        e.focal_mm = 50;
        e.sensor_mm = 100;
        CHECK(*compute_fov(e) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-14));
        e.sensor_mm = 36;
        CHECK(*compute_fov(e) == doctest::Approx(0.34555558058171215).epsilon(1e-12));
        e.focal_mm = 3600;
        const double fov = *compute_fov(e);
        CHECK(fov == doctest::Approx(0.005).epsilon(1e-4));
        CHECK(fov > 0.0);
        CHECK(fov < std::numbers::pi / 2);
    }
}
