#include "pipeline.hpp"

#include "lungprep/cli.hpp"
#include "lungprep/manifest.hpp"
#include "lungprep/pgm.hpp"
#include "lungprep/records.hpp"
#include "lungprep/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace lungprep;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "lungprep_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path three_phantoms(const fs::path& dir) {
    std::vector<ManifestRow> rows;
    fs::create_directories(dir / "img");
    for (int i = 0; i < 3; ++i) {
        const auto p = synthetic::make_lung_phantom({256, kAllDiagnoses[i], i == 2, static_cast<std::uint64_t>(i)});
        const std::string name = "img/ph" + std::to_string(i) + ".pgm";
        save_pgm(p.image, dir / name);
        rows.push_back({name, "P" + std::to_string(i), kAllDiagnoses[i], "synthetic"});
    }
    write_manifest(rows, dir / "manifest.csv");
    return dir / "manifest.csv";
}

}  // namespace

TEST_CASE("usage errors") {
    const auto bad = run({"preprocess", "--bogus"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("Usage") != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"preprocess", "--out-dir", "x"}).code == 2);
    CHECK(run({"split", "--manifest", "m.csv", "--out-dir", "o", "--test-fraction", "abc"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("input errors") {
    const auto dir = fresh("input");
    write_file_text(dir / "empty.csv", "image_path,patient_id,label,source\n");
    const auto empty = run({"preprocess", "--manifest", (dir / "empty.csv").string(), "--out-dir", (dir / "o").string()});
    CHECK(empty.code == 3);
    CHECK(empty.err.find("no rows") != std::string::npos);

    CHECK(run({"preprocess", "--manifest", (dir / "missing.csv").string(), "--out-dir", (dir / "o").string()}).code == 3);

    write_file_text(dir / "broken.csv", "image_path,patient_id,label,source\nnothere.pgm,P1,CI,s\n");
    const auto all_fail =
        run({"preprocess", "--manifest", (dir / "broken.csv").string(), "--out-dir", (dir / "o").string()});
    CHECK(all_fail.code == 3);

    write_file_text(dir / "model.json", "{\"version\": 1, \"schema_id\": ");
    write_file_text(dir / "f.csv", "image_id,f0\na,1\n");
    CHECK(run({"predict", "--model", (dir / "model.json").string(), "--features", (dir / "f.csv").string(), "--out",
               (dir / "p.csv").string()})
              .code == 3);

    write_file_text(dir / "final.csv", "image_id,label,score\nknown,CI,1.000000\nghost,CP,0.500000\n");
    write_file_text(dir / "truth.csv", "image_path,patient_id,label,source\nknown.pgm,P1,CI,s\n");
    const auto ghost = run({"evaluate", "--preds", (dir / "final.csv").string(), "--manifest",
                            (dir / "truth.csv").string(), "--report", (dir / "r.json").string()});
    CHECK(ghost.code == 3);
    CHECK(ghost.err.find("ghost") != std::string::npos);
}

TEST_CASE("preprocess logs every row and continues past failures") {
    const auto dir = fresh("pre");
    const auto manifest = three_phantoms(dir);
    const auto bytes = read_file_bytes(manifest);
    auto text = std::string(bytes.begin(), bytes.end());
    text += "img/corrupt.pgm,P9,N,synthetic\n";
    write_file_text(dir / "img" / "corrupt.pgm", "P5\n4 4\n255\n");
    write_file_text(manifest, text);

    const auto first = run({"preprocess", "--manifest", manifest.string(), "--out-dir", (dir / "a").string()});
    REQUIRE(first.code == 0);
    CHECK(first.out == "rows=4 selected=2 rejected=2 failed=1\n");
    const auto log = read_log(dir / "a" / kPreprocessLogName);
    REQUIRE(log.size() == 4);
    CHECK(log[0].image_id == "corrupt");
    CHECK_FALSE(log[0].selected);
    CHECK_FALSE(log[0].reason.empty());
    CHECK(log[1].selected);
    CHECK(log[2].selected);
    CHECK_FALSE(log[3].selected);
    CHECK(log[3].reason == "rejected by selection");
    CHECK(fs::exists(dir / "a" / "ph0_gray.pgm"));
    CHECK(fs::exists(dir / "a" / "ph0_mask.pgm"));
    CHECK_FALSE(fs::exists(dir / "a" / "ph2_gray.pgm"));
    const auto gray = load_image(dir / "a" / "ph1_gray.pgm");
    CHECK(gray.width() == 224);
    CHECK(gray.height() == 224);

    REQUIRE(run({"preprocess", "--manifest", manifest.string(), "--out-dir", (dir / "b").string(), "--jobs", "3"})
                .code == 0);
    for (const char* name : {kPreprocessLogName, "ph0_gray.pgm", "ph1_mask.pgm"})
        CHECK(read_file_bytes(dir / "a" / name) == read_file_bytes(dir / "b" / name));
}

TEST_CASE("split and augment commands") {
    const auto dir = fresh("split");
    REQUIRE(run({"synth", "--out-dir", (dir / "data").string(), "--patients", "6", "--slices", "2", "--size", "64"})
                .code == 0);
    const auto res = run({"split", "--manifest", (dir / "data" / "manifest.csv").string(), "--test-fraction", "0.3",
                          "--out-dir", (dir / "s").string()});
    REQUIRE(res.code == 0);
    CHECK(res.out.starts_with("train="));
    const auto train = read_manifest(dir / "s" / "train.csv");
    const auto test = read_manifest(dir / "s" / "test.csv");
    CHECK(train.size() + test.size() == 12);
    for (const auto& r : train) CHECK(fs::exists(dir / "s" / r.image_path));

    const auto aug = run({"augment", "--manifest", (dir / "s" / "train.csv").string(), "--out-dir",
                          (dir / "aug").string(), "--flip", "--rotations", "90,180"});
    REQUIRE(aug.code == 0);
    const auto rows = read_manifest(dir / "aug" / "manifest.csv");
    CHECK(rows.size() == train.size() * 4);
    for (const auto& r : rows) CHECK(fs::exists(dir / "aug" / r.image_path));
    CHECK(run({"augment", "--manifest", (dir / "s" / "train.csv").string(), "--out-dir", (dir / "aug2").string(),
               "--rotations", "45"})
              .code == 2);
}

TEST_CASE("full synthetic pipeline") {
    const auto base = fs::temp_directory_path() / "lungprep_test_cli";
    const auto a = pipeline::run(base / "run_a", 1);
    REQUIRE_MESSAGE(a.ok, a.failure);
    CHECK(a.accuracy >= 0.9);
    CHECK(a.artifacts.contains("report.txt"));
    CHECK(a.artifacts.contains("pre/preprocess_log.csv"));

    const auto b = pipeline::run(base / "run_b", 4);
    REQUIRE_MESSAGE(b.ok, b.failure);
    const auto diff = pipeline::differing(a, b);
    CHECK_MESSAGE(diff.empty(), (diff.empty() ? "" : diff.front()));
    CHECK(a.artifacts.size() == b.artifacts.size());
}
