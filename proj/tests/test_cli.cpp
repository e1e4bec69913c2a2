#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cada/eval.hpp"
#include "cada/forest.hpp"
#include "cada/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = CADA_CLI_PATH;

struct Scratch {
    fs::path root;
    Scratch()
    {
        static int counter = 0;
        root = fs::temp_directory_path() / ("cada_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
    std::string dir(const std::string& name) const
    {
        fs::create_directories(root / name);
        return (root / name).string();
    }
    std::string operator/(const std::string& name) const { return (root / name).string(); }
};

int run(const std::string& args, std::string* out = nullptr)
{
    const std::string cmd = kCli + " " + args + " 2>&1";
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string text;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) {
        text.append(buf, n);
    }
    const int status = ::pclose(p);
    if (out) {
        *out = text;
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::string kSmall = "--dims 96,96 --n-cells 8";

// synth + watershed into dir.
void prepare(const std::string& dir, int seed = 1)
{
    REQUIRE(run("synth " + kSmall + " --seed " + std::to_string(seed) + " --out " + dir) == 0);
    REQUIRE(run("watershed --channels " + dir + " --out " + dir) == 0);
}

std::size_t count_lines(const std::string& text)
{
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

} // namespace

TEST_CASE("cli: help and usage errors")
{
    std::string out;
    CHECK(run("--help", &out) == 0);
    CHECK(out.find("pipeline") != std::string::npos);
    CHECK(run("") == 2);
    CHECK(run("synth --no-such-flag 1") == 2);
    CHECK(run("synth --n-cells lots") == 2);
    CHECK(run("segment --policy greedy") == 2);
    CHECK(run("frobnicate") == 2);
}

TEST_CASE("cli: synth is byte-reproducible and validates its output directory")
{
    Scratch s;
    const std::string a = s.dir("a");
    const std::string b = s.dir("b");
    CHECK(run("synth --dims 128,128 --seed 7 --out " + a) == 0);
    CHECK(run("synth --dims 128,128 --seed 7 --out " + b) == 0);
    for (const char* f : {"gt.segv", "mito.segv", "boundary.segv", "cytoplasm.segv", "mitochondria.segv",
                          "mito_boundary.segv"}) {
        CHECK_MESSAGE(slurp(a + "/" + f) == slurp(b + "/" + f), f);
        CHECK(!slurp(a + "/" + f).empty());
    }
    std::string out;
    CHECK(run("synth --out " + (s / "missing"), &out) == 3);
    CHECK(out.find("missing") != std::string::npos);
    CHECK(run("synth --n-cells 0 --out " + a) == 2);
}

TEST_CASE("cli: config file sits under explicit flags, and the echo reproduces the run")
{
    Scratch s;
    const std::string a = s.dir("a");
    const std::string b = s.dir("b");
    {
        std::ofstream cfg(s / "synth.json");
        cfg << R"({"n_cells": 5, "seed": 3, "dims": [64, 64]})";
    }
    REQUIRE(run("synth --config " + (s / "synth.json") + " --seed 4 --out " + a) == 0);
    const auto echo = nlohmann::json::parse(slurp(a + "/config.json"));
    CHECK(echo["n_cells"] == 5);
    CHECK(echo["seed"] == 4);
    CHECK(echo["dims"] == nlohmann::json::array({64, 64}));

    auto replay = echo;
    replay.erase("out");
    {
        std::ofstream cfg(s / "replay.json");
        cfg << replay.dump();
    }
    REQUIRE(run("synth --config " + (s / "replay.json") + " --out " + b) == 0);
    CHECK(slurp(a + "/gt.segv") == slurp(b + "/gt.segv"));
    CHECK(slurp(a + "/boundary.segv") == slurp(b + "/boundary.segv"));

    {
        std::ofstream cfg(s / "bad.json");
        cfg << R"({"n_cels": 5})";
    }
    CHECK(run("synth --config " + (s / "bad.json") + " --out " + a) == 2);
    {
        std::ofstream cfg(s / "broken.json");
        cfg << "{";
    }
    CHECK(run("synth --config " + (s / "broken.json") + " --out " + a) == 2);
    CHECK(run("synth --config " + (s / "none.json") + " --out " + a) == 3);
}

TEST_CASE("cli: train, segment, eval end to end")
{
    Scratch s;
    const std::string d = s.dir("data");
    prepare(d);
    const std::string common = " --labels " + d + "/labels.segv --channels " + d;

    const std::string m1 = s.dir("m1");
    const std::string m2 = s.dir("m2");
    const std::string train =
        "train" + common + " --gt " + d + "/gt.segv --n-trees 5 --iterations 3 --accumulate --seed 2 --out ";
    REQUIRE(run(train + m1) == 0);
    REQUIRE(run(train + m2) == 0);
    CHECK(slurp(m1 + "/forest.json") == slurp(m2 + "/forest.json"));
    const auto summary = nlohmann::json::parse(slurp(m1 + "/train_summary.json"));
    const auto rows = summary["rows_per_iteration"].get<std::vector<std::size_t>>();
    REQUIRE(rows.size() == 3);
    CHECK(std::is_sorted(rows.begin(), rows.end()));

    const std::string seg = s.dir("seg");
    REQUIRE(run("segment" + common + " --forest " + m1 + "/forest.json --gt " + d +
                "/gt.segv --policy delayed --context on --delta-c 0.2 --delta-m 0.8 --out " + seg) == 0);
    for (const char* f : {"segmentation.segv", "trace_cyto.csv", "trace_mito.csv", "counters.json", "metrics.csv",
                          "config.json"}) {
        CHECK_MESSAGE(fs::exists(seg + "/" + f), f);
    }
    CHECK(slurp(seg + "/trace_cyto.csv").rfind("step,kept,absorbed,confidence,sweep\n", 0) == 0);

    // eval agrees with the library on the same files.
    std::string out;
    REQUIRE(run("eval --seg " + seg + "/segmentation.segv --gt " + d + "/gt.segv", &out) == 0);
    const auto lib = cada::evaluate(cada::read_labels(seg + "/segmentation.segv"), cada::read_labels(d + "/gt.segv"));
    std::istringstream in(out);
    std::string header;
    std::string row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<double> vals;
    std::stringstream cells(row);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
        vals.push_back(cell.empty() ? 0.0 : std::stod(cell));
    }
    REQUIRE(vals.size() >= 5);
    CHECK(std::fabs(vals[1] - lib.vi.under) < 1e-12);
    CHECK(std::fabs(vals[2] - lib.vi.over) < 1e-12);
    CHECK(std::fabs(vals[3] - lib.re.under) < 1e-12);
    CHECK(std::fabs(vals[4] - lib.re.over) < 1e-12);

    // eval(seg = gt) is all zeros.
    REQUIRE(run("eval --seg " + d + "/gt.segv --gt " + d + "/gt.segv", &out) == 0);
    CHECK(out.find("\n,0,0,0,0,") != std::string::npos);

    // The standard, context-oblivious baseline and a threshold sweep.
    const std::string base = s.dir("base");
    REQUIRE(run("segment" + common + " --estimator mean --context off --policy standard --out " + base) == 0);
    CHECK(slurp(base + "/trace_mito.csv") == "step,kept,absorbed,confidence,sweep\n");
    const std::string sweep = s.dir("sweep");
    REQUIRE(run("segment" + common + " --estimator mean --gt " + d + "/gt.segv --sweep 0.10:0.20:0.02 --out " +
                sweep) == 0);
    CHECK(count_lines(slurp(sweep + "/metrics.csv")) == 1 + 6);
    CHECK(fs::exists(sweep + "/segmentation_0.14.segv"));
}

TEST_CASE("cli: CADA-L training logs one pass")
{
    Scratch s;
    const std::string d = s.dir("data");
    prepare(d, 2);
    const std::string m = s.dir("m");
    std::string out;
    REQUIRE(run("train --labels " + d + "/labels.segv --gt " + d + "/gt.segv --channels " + d +
                    " --n-trees 5 --iterations 1 --max-depth 20 --out " + m,
                &out) == 0);
    CHECK(out.find("train: 1 iteration(s)") != std::string::npos);
    const auto summary = nlohmann::json::parse(slurp(m + "/train_summary.json"));
    CHECK(summary["rows_per_iteration"].size() == 1);
}

TEST_CASE("cli: data and shape errors map to their exit codes")
{
    Scratch s;
    const std::string d = s.dir("data");
    prepare(d);
    const std::string out = s.dir("out");

    // One ground-truth region and no context labels: every row is a false boundary.
    cada::write_volume(s / "flat_gt.segv", cada::LabelVolume(cada::Dims({96, 96}), 1));
    CHECK(run("train --labels " + d + "/labels.segv --gt " + (s / "flat_gt.segv") + " --channels " + d +
              " --context off --n-trees 2 --out " + out) == 4);

    // A forest trained on a different feature length.
    cada::TrainingSet t;
    t.add({0.1}, 0, 1);
    t.add({0.9}, 1, 1);
    cada::ForestParams fp;
    fp.n_trees = 1;
    cada::train_forest(t, fp).save(s / "tiny.json");
    CHECK(run("segment --labels " + d + "/labels.segv --channels " + d + " --forest " + (s / "tiny.json") +
              " --out " + out) == 4);

    // Mismatched extents.
    cada::write_volume(s / "small.segv", cada::LabelVolume(cada::Dims({10, 10}), 1));
    CHECK(run("eval --seg " + (s / "small.segv") + " --gt " + d + "/gt.segv") == 2);
    CHECK(run("segment --labels " + (s / "small.segv") + " --channels " + d + " --estimator mean --out " + out) == 2);

    // Not a volume file.
    {
        std::ofstream f(s / "junk.segv");
        f << "XXXXjunk";
    }
    CHECK(run("eval --seg " + (s / "junk.segv") + " --gt " + d + "/gt.segv") == 3);
    CHECK(run("segment --labels " + d + "/labels.segv --channels " + d + " --forest " + (s / "nope.json") +
              " --out " + out) == 3);
}

TEST_CASE("cli: overlay is seed-deterministic")
{
    Scratch s;
    const std::string d = s.dir("data");
    prepare(d);
    const std::string a = s.dir("a");
    const std::string b = s.dir("b");
    const std::string c = s.dir("c");
    REQUIRE(run("overlay --seg " + d + "/labels.segv --seed 5 --out " + a) == 0);
    REQUIRE(run("overlay --seg " + d + "/labels.segv --seed 5 --out " + b) == 0);
    REQUIRE(run("overlay --seg " + d + "/labels.segv --seed 6 --background " + d + "/boundary.segv --out " + c) ==
            0);
    const std::string img = slurp(a + "/plane_000.ppm");
    CHECK(img.rfind("P6\n96 96\n255\n", 0) == 0);
    CHECK(img.size() == std::string("P6\n96 96\n255\n").size() + 96 * 96 * 3);
    CHECK(img == slurp(b + "/plane_000.ppm"));
    CHECK(img != slurp(c + "/plane_000.ppm"));
}

TEST_CASE("cli: pipeline runs every stage")
{
    Scratch s;
    const std::string out = s.dir("run");
    REQUIRE(run("pipeline " + kSmall + " --seed 3 --n-trees 5 --out " + out) == 0);
    for (const char* f : {"train/forest.json", "train/labels.segv", "test/labels.segv", "test/segmentation.segv",
                          "test/metrics.csv", "config.json"}) {
        CHECK_MESSAGE(fs::exists(out + "/" + f), f);
    }
    CHECK(count_lines(slurp(out + "/test/metrics.csv")) == 2);
}
