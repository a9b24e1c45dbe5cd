#include "oracles.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args, const oracle::TempDir& tmp) {
    const fs::path log = tmp / "cli.log";
    const std::string cmd = std::string(MTRA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    r.output.assign(std::istreambuf_iterator<char>(in), {});
    return r;
}

}  // namespace

TEST_CASE("parameter count") {
    oracle::TempDir tmp("cliparams");
    const Result r = run("params", tmp);
    CHECK(r.code == 0);
    CHECK(r.output.find("total_parameters 114744909") != std::string::npos);
    CHECK(run("params --config tiny", tmp).output.find("total_parameters 1800351") != std::string::npos);
}

TEST_CASE("usage errors exit with 1") {
    oracle::TempDir tmp("cliusage");
    CHECK(run("params --no-such-flag", tmp).code == 1);
    CHECK(run("frobnicate", tmp).code == 1);
    CHECK(run("params --set epochs=zero", tmp).code == 1);
    CHECK(run("params --set nokey", tmp).code == 1);
    CHECK(run("params --mode ternary", tmp).code == 1);
    CHECK(run("phantom", tmp).code == 1);
    const Result r = run("evaluate --data " + tmp.path().string(), tmp);
    CHECK(r.code == 1);
    CHECK(r.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("phantom, train, evaluate, segment and report") {
    oracle::TempDir tmp("clipipe");
    const std::string d = (tmp / "data").string(), run_dir = (tmp / "run").string();
    REQUIRE(run("phantom --out " + d + " --seed 4", tmp).code == 0);
    CHECK(fs::exists(tmp / "data" / "test"));
    const Result tr = run("train --config tiny --set epochs=1 --set widths=4,8,16,32 --deterministic --data " + d +
                              " --out " + run_dir,
                          tmp);
    REQUIRE(tr.code == 0);
    for (const char* f : {"model.ckpt", "loss_history.csv", "config.txt"}) CHECK(fs::exists(tmp / "run" / f));
    const std::string ck = (tmp / "run" / "model.ckpt").string();

    const Result ev = run("evaluate --data " + d + " --checkpoint " + ck + " --out " + (tmp / "eval").string(), tmp);
    CHECK(ev.code == 0);
    CHECK(fs::exists(tmp / "eval" / "summary.csv"));
    CHECK(run("evaluate --data " + d + " --checkpoint " + ck + " --pred " + d + " --out " + (tmp / "e2").string(), tmp)
              .code == 1);
    CHECK(run("evaluate --data " + d + " --checkpoint " + (tmp / "nothing.ckpt").string(), tmp).code == 2);

    const Result sg = run("segment --checkpoint " + ck + " --data " + (tmp / "data" / "test").string() + " --out " +
                              (tmp / "seg").string(),
                          tmp);
    CHECK(sg.code == 0);
    CHECK_FALSE(fs::is_empty(tmp / "seg"));

    const Result rp =
        run("report --metrics " + (tmp / "eval" / "per_slice_metrics.csv").string() + " --out " + (tmp / "rep").string(),
            tmp);
    CHECK(rp.code == 0);
    CHECK(rp.output.find("average") != std::string::npos);
    CHECK(fs::exists(tmp / "rep" / "boxplot.csv"));
}
