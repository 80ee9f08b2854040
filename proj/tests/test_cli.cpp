#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SATNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const fs::path kScratch = fs::temp_directory_path() / "satnn_cli_test";

} // namespace

TEST_CASE("cli exit codes") {
    fs::remove_all(kScratch);
    CHECK(run("--help") == 0);
    CHECK(run("gen-data parity --dim 4 --positions 0,2 --exhaustive --out " + (kScratch / "p4.txt").string()) == 0);
    CHECK(fs::exists(kScratch / "p4.txt"));
    CHECK(run("gen-data parity --dim 4 --exhaustive") == 2);
    CHECK(run("train --dataset parity8 --num-bits 99") == 2);
    CHECK(run("train --bogus") == 2);
    CHECK(run("train --dataset /nonexistent/data.txt") == 4);
    CHECK(run("train --dataset perceptron --solver /nonexistent/solver --hidden '' --batch-size 8 --plain-solve --out " +
              (kScratch / "env").string()) == 4);
    // The literal margin rule admits no linear separator with these widths.
    CHECK(run("train --dataset perceptron --hidden '' --batch-size 16 --plain-solve --out " +
              (kScratch / "fail").string()) == 3);
}

TEST_CASE("cli train, eval and report") {
    const std::string common = "train --dataset perceptron --hidden '' --margin-rule stated --batch-size 8 "
                               "--num-batches 2 --plain-solve --seed 4 --name toy --test perceptron";
    REQUIRE(run(common + " --out " + (kScratch / "a").string()) == 0);
    REQUIRE(run(common + " --out " + (kScratch / "b").string()) == 0);
    CHECK(slurp(kScratch / "a" / "toy.manifest.json") == slurp(kScratch / "b" / "toy.manifest.json"));

    const fs::path csv = kScratch / "eval.csv";
    CHECK(run("eval --models " + (kScratch / "a").string() + " --test perceptron --append " + csv.string()) == 0);
    CHECK(slurp(csv).find("\na,") != std::string::npos);
    CHECK(run("report " + (kScratch / "a" / "toy.manifest.json").string()) == 0);

    const fs::path cfg = kScratch / "hp.conf";
    std::ofstream(cfg) << "num_bits = 3\nslack_bits = 6\nproduct_magnitude_bits = 4\n";
    CHECK(run("encode --dataset perceptron --hidden 2 --batch-size 4 --config " + cfg.string() + " --out " +
              (kScratch / "enc").string()) == 0);
    CHECK(fs::exists(kScratch / "enc" / "batch_0.cnf"));
    CHECK(fs::exists(kScratch / "enc" / "jobs.manifest"));
    std::ofstream(cfg, std::ios::app) << "colour = red\n";
    CHECK(run("encode --dataset perceptron --config " + cfg.string()) == 2);
}
