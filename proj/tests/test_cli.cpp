#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "coverid/salience.hpp"

using namespace coverid;
namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* bin = std::getenv("COVERID_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "COVERID_BIN must point at the coverid binary");
    return bin;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "coverid_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void run_pipeline(const fs::path& dir) {
    const std::string d = dir.string();
    REQUIRE(run("synth --works 12 --dim 8 --seed 7 --noise 0.02 --out " + d) == 0);
    REQUIRE(run("train --catalog " + d + "/catalog.csv --loss prototypical --steps 40"
                " --batch-classes 4 --embed-dim 8 --lr 0.05 --seed 3 --out " + d) == 0);
    REQUIRE(run("embed --catalog " + d + "/catalog.csv --model " + d + "/model.enc"
                " --out " + d) == 0);
    REQUIRE(run("eval-lookup --embeddings " + d + "/embeddings.emb --mode both"
                " --seed 11 --out " + d) == 0);
}

} // namespace

TEST_CASE("cli pipeline produces the expected artifacts deterministically") {
    const fs::path a = fresh_dir("run_a");
    const fs::path b = fresh_dir("run_b");
    run_pipeline(a);
    run_pipeline(b);

    for (const char* name :
         {"catalog.csv", "model.enc", "train_log.csv", "embeddings.emb",
          "embeddings.csv", "eval_summary.csv", "eval_queries_samples.csv",
          "eval_queries_classes.csv"}) {
        CHECK_MESSAGE(slurp(a / name) == slurp(b / name), "differs: " << name);
    }
    // Feature files too.
    CHECK(slurp(a / "features" / "w0000_c1.sal") == slurp(b / "features" / "w0000_c1.sal"));

    SUBCASE("eval summary carries the four metric rows per mode") {
        const std::string summary = slurp(a / "eval_summary.csv");
        CHECK(summary.find("metric,mode,value,n_queries") != std::string::npos);
        CHECK(summary.find("map,samples,") != std::string::npos);
        CHECK(summary.find("map,classes,") != std::string::npos);
        CHECK(summary.find("mt@10,samples,") != std::string::npos);
        CHECK(summary.find("queries_skipped,classes,") != std::string::npos);
    }
}

TEST_CASE("cli rejects bad usage with a nonzero exit") {
    CHECK(run("synth --works") != 0);          // missing value
    CHECK(run("train") != 0);                  // missing required --catalog
    CHECK(run("no-such-command") != 0);
    CHECK(run("") != 0);                       // a subcommand is required
}

TEST_CASE("cli train --steps 0 stores the untouched initialization") {
    const fs::path dir = fresh_dir("steps0");
    const std::string d = dir.string();
    REQUIRE(run("synth --works 8 --dim 6 --seed 1 --out " + d) == 0);
    REQUIRE(run("train --catalog " + d + "/catalog.csv --steps 0 --embed-dim 6"
                " --seed 5 --out " + d) == 0);
    const std::string first = slurp(dir / "model.enc");
    // Retrain with a different loss: with zero steps the loss never runs, so
    // the file must be identical.
    REQUIRE(run("train --catalog " + d + "/catalog.csv --steps 0 --embed-dim 6"
                " --loss standard --seed 5 --out " + d) == 0);
    CHECK(slurp(dir / "model.enc") == first);
    // The log holds only the header.
    CHECK(slurp(dir / "train_log.csv") == "step,loss,active_count\n");
}

TEST_CASE("cli config file feeds defaults and flags win") {
    const fs::path dir = fresh_dir("config");
    const std::string d = dir.string();
    {
        std::ofstream cfg(dir / "synth.cfg");
        cfg << "works = 9\n";
        cfg << "dim = 5\n";
        cfg << "seed = 2\n";
    }
    REQUIRE(run("synth --config " + d + "/synth.cfg --out " + d) == 0);
    std::string catalog = slurp(dir / "catalog.csv");
    CHECK(catalog.find("w0008") != std::string::npos); // 9 works: w0000..w0008
    CHECK(catalog.find("w0009") == std::string::npos);

    SUBCASE("a flag overrides the file value") {
        const fs::path dir2 = fresh_dir("config_override");
        REQUIRE(run("synth --config " + d + "/synth.cfg --works 4 --out " +
                    dir2.string()) == 0);
        const std::string c2 = slurp(dir2 / "catalog.csv");
        CHECK(c2.find("w0003") != std::string::npos);
        CHECK(c2.find("w0004") == std::string::npos);
    }
    SUBCASE("unknown config keys are rejected") {
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "works = 9\nnot_a_key = 1\n";
        cfg.close();
        CHECK(run("synth --config " + d + "/bad.cfg --out " + d) != 0);
    }
}

TEST_CASE("cli histogram and preprocess round trip through SAL1") {
    const fs::path dir = fresh_dir("hist");
    SalienceMatrix m;
    m.bins_per_semitone = 5;
    m.frames_per_second = 28.44;
    m.data = Matrix::Zero(64, 360);
    m.data.col(30 * 5 + 2).setConstant(1.0); // semitone 30
    write_sal1(dir / "a.sal", m);

    REQUIRE(run("histogram " + (dir / "a.sal").string() + " --out " + dir.string()) == 0);
    const std::string hist = slurp(dir / "histogram.csv");
    CHECK(hist.find("semitone,total_salience") != std::string::npos);
    CHECK(hist.find("30,64") != std::string::npos);

    REQUIRE(run("preprocess --input " + (dir / "a.sal").string() + " --output " +
                (dir / "feat.sal").string()) == 0);
    const SalienceMatrix feat = read_sal1(dir / "feat.sal");
    CHECK(feat.frames() == 1024);
    CHECK(feat.bins() == 60);
}
