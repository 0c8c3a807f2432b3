#include "json.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("cstm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result cli(const std::string& args, const std::string& env = "") {
        const fs::path out = dir_ / "stdout", err = dir_ / "stderr";
        const std::string cmd = env + " '" CSTM_CLI_PATH "' " + args + " >'" + out.string() +
                                "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    static std::string data(const std::string& name) { return std::string(CSTM_TEST_DATA) + "/" + name; }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, DeriveMatchesGolden) {
    const Result r = cli(
        "derive --seed 000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f "
        "--level 1 --slot 0 --num-rps 16");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, slurp(data("derive_level1_slot0.txt")));
    EXPECT_NE(r.err.find("UNSAFE"), std::string::npos);
}

TEST_F(Cli, DeriveRejectsShortSeed) {
    EXPECT_EQ(cli("derive --seed abcd --level 0 --slot 0").code, 2);
}

TEST_F(Cli, UnknownArgumentIsConfigError) {
    EXPECT_EQ(cli("run --bogus").code, 2);
    EXPECT_EQ(cli("").code, 2);
}

TEST_F(Cli, MissingConfigNamesPath) {
    const Result r = cli("run --config /nonexistent/cfg.json --out " + dir_.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/nonexistent/cfg.json"), std::string::npos) << r.err;
}

TEST_F(Cli, MissingSiteFileNamesPath) {
    const Result r = cli("run --config " + data("missing_sites.json") + " --out " + dir_.string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("no_such_sites.csv"), std::string::npos) << r.err;
}

TEST_F(Cli, RunWritesOutputs) {
    const fs::path out = dir_ / "run";
    const Result r = cli("run --config " + data("small.json") + " --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(out / "metrics.csv"));
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    EXPECT_EQ(report["seed_provenance"]["source"], "config");
    EXPECT_EQ(report["config"]["duration_s"], 1800);
    EXPECT_EQ(report["metrics"], nlohmann::json::parse(slurp(out / "metrics.json")));
    EXPECT_EQ(report["metrics"]["modes"].size(), 1u);
}

TEST_F(Cli, SweepIsReproducibleAndSeedOverridable) {
    const fs::path a = dir_ / "a", b = dir_ / "b", c = dir_ / "c";
    ASSERT_EQ(cli("sweep --config " + data("small.json") + " --out " + a.string()).code, 0);
    ASSERT_EQ(cli("sweep --config " + data("small.json") + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "metrics.json"), slurp(b / "metrics.json"));
    EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));

    const Result r = cli("sweep --config " + data("small.json") + " --out " + c.string(),
                         "CSTM_MASTER_SEED=99");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = nlohmann::json::parse(slurp(c / "report.json"));
    EXPECT_EQ(report["seed_provenance"]["source"], "CSTM_MASTER_SEED");
    EXPECT_EQ(report["seed_provenance"]["master_seed"], 99);
    EXPECT_NE(slurp(a / "metrics.json"), slurp(c / "metrics.json"));

    EXPECT_EQ(cli("sweep --config " + data("small.json") + " --out " + c.string(),
                  "CSTM_MASTER_SEED=x1")
                  .code,
              2);
}

TEST_F(Cli, GenerateSitesAndTrace) {
    const fs::path sites = dir_ / "sites.csv", trace = dir_ / "trace.csv", pos = dir_ / "pos.csv";
    ASSERT_EQ(cli("gen sites --grid 2x3 --spacing 500 --out " + sites.string()).code, 0);
    EXPECT_EQ(slurp(sites), "0,0,0\n1,500,0\n2,1000,0\n3,0,500\n4,500,500\n5,1000,500\n");
    ASSERT_EQ(cli("gen trace --sites " + sites.string() + " --ues 3 --duration 600 --seed 4 --out " +
                  trace.string())
                  .code,
              0);
    ASSERT_EQ(cli("gen trace --sites " + sites.string() +
                  " --ues 3 --duration 600 --seed 4 --positions --out " + pos.string())
                  .code,
              0);
    EXPECT_FALSE(slurp(trace).empty());
    EXPECT_EQ(cli("gen sites --out " + sites.string()).code, 2);
    EXPECT_EQ(cli("gen trace --sites /nonexistent.csv --out " + trace.string()).code, 2);
}
