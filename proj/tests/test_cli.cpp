#include "elevest/corpus.hpp"
#include "elevest/estimate.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int status;
    std::string err;
};

RunResult run(const std::string& args, const fixture::TempDir& dir) {
    const auto err_file = dir / "stderr.txt";
    const std::string cmd = std::string(ELEVEST_CLI_PATH) + " " + args + " > /dev/null 2> " + err_file.string();
    const int raw = std::system(cmd.c_str());
    std::ifstream in(err_file);
    std::ostringstream s;
    s << in.rdbuf();
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, s.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("synth, split, train, index, estimate and evaluate end to end") {
    fixture::TempDir dir;
    const std::string d = dir.path().string();
    auto ok = [&](const std::string& args) {
        const auto r = run(args, dir);
        INFO(args << "\n" << r.err);
        REQUIRE(r.status == 0);
    };
    ok("synth --places 6 --images-per-place 4 --seed 3 --out " + d + "/corpus");
    ok("split --manifest " + d + "/corpus/manifest.jsonl --test-fraction 0.25 --seed 3 --out " + d + "/split");
    ok("train-vocab --manifest " + d + "/split/train.jsonl --words 128 --kmeans-iter 10 --seed 3 --out " + d + "/v.elvc");
    ok("build-index --manifest " + d + "/split/train.jsonl --vocab " + d + "/v.elvc --out " + d + "/ix.elix");
    ok("train-mvocab --manifest " + d + "/split/train.jsonl --mvocab-words 16 --dims 12 --kmeans-iter 5 --seed 3 --out " +
       d + "/m.elmv");
    ok("estimate --manifest " + d + "/split/test.jsonl --train-manifest " + d + "/split/train.jsonl --index " + d +
       "/ix.elix --vocab " + d + "/v.elvc --secondary mvocab --mvocab-model " + d + "/m.elmv --top-k 5 --out " + d +
       "/pred.csv");
    ok("evaluate --manifest " + d + "/split/test.jsonl --train-manifest " + d + "/split/train.jsonl --predictions " + d +
       "/pred.csv --out " + d + "/report.json");

    const auto preds = elevest::load_external_predictions(dir / "pred.csv");
    CHECK(preds.rows.size() == 6);
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    const double r = report["rmse"][0]["rmse_m"].get<double>();
    CHECK(std::isfinite(r));
    CHECK(fs::exists(dir / "report.txt"));
    CHECK(fs::exists(dir / "report_cumulative.csv"));
    CHECK(fs::exists(dir / "report_bias.csv"));

    // Identical inputs and seed give byte-identical artifacts.
    ok("train-vocab --manifest " + d + "/split/train.jsonl --words 128 --kmeans-iter 10 --seed 3 --threads 2 --out " + d +
       "/v2.elvc");
    CHECK(slurp(dir / "v.elvc") == slurp(dir / "v2.elvc"));
}

TEST_CASE("estimate with a missing index names the path") {
    fixture::TempDir dir;
    const std::string d = dir.path().string();
    REQUIRE(run("synth --places 2 --images-per-place 2 --out " + d + "/c", dir).status == 0);
    const auto r = run("estimate --manifest " + d + "/c/manifest.jsonl --train-manifest " + d +
                           "/c/manifest.jsonl --vocab " + d + "/nope.elvc --index " + d + "/missing.elix --out " + d +
                           "/p.csv",
                       dir);
    CHECK(r.status != 0);
    CHECK(r.err.find(d + "/missing.elix") != std::string::npos);
}

TEST_CASE("evaluate predictions equal to the ground truth gives RMSE 0") {
    fixture::TempDir dir;
    const std::string d = dir.path().string();
    REQUIRE(run("synth --places 3 --images-per-place 2 --out " + d + "/c", dir).status == 0);
    const auto records = elevest::load_manifest(dir / "c" / "manifest.jsonl");
    std::vector<elevest::PredictionRow> rows;
    for (const auto& rec : records) rows.push_back({rec.id, *rec.elevation_m, "oracle"});
    elevest::write_predictions(dir / "truth.csv", rows);
    REQUIRE(run("evaluate --manifest " + d + "/c/manifest.jsonl --predictions " + d + "/truth.csv --out " + d + "/r.json",
                dir)
                .status == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(report["rmse"][0]["rmse_m"].get<double>() == 0.0);
}

TEST_CASE("bad usage exits non-zero") {
    fixture::TempDir dir;
    CHECK(run("no-such-command", dir).status != 0);
    CHECK(run("estimate --secondary sideways --out x", dir).status != 0);
    std::ofstream(dir / "cfg.json") << R"({"unknown-key": 1})";
    CHECK(run("synth --config " + (dir / "cfg.json").string() + " --out " + (dir / "c").string(), dir).status != 0);
}
